// tsattr: model-agnostic Shapley attribution for multivariate time series.
// Subcommands: synth, group, segment, explain, evaluate, bench.

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsattr/attribution.hpp"
#include "tsattr/config.hpp"
#include "tsattr/evaluation.hpp"
#include "tsattr/io.hpp"
#include "tsattr/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsattr;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    std::string preset;
    std::int64_t seed_override = -1;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run config JSON")->required();
    cmd->add_option("--output-dir", args.output_dir, "artifact directory override");
    cmd->add_option("--seed-override", args.seed_override, "replace every configured seed");
    cmd->add_option("--preset", args.preset, "window preset: har, ettm1, ptbxl, sp500");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

RunConfig load(const CommonArgs& args) {
    ConfigOverrides overrides;
    if (!args.output_dir.empty()) overrides.output_dir = fs::path(args.output_dir);
    if (args.seed_override >= 0) {
        overrides.seed_override = static_cast<std::uint64_t>(args.seed_override);
    }
    if (!args.preset.empty()) overrides.preset = args.preset;
    return load_run_config(args.config_path, overrides);
}

void note(const CommonArgs& args, const fs::path& path) {
    if (!args.quiet) std::cout << "wrote " << path.string() << "\n";
}

std::string csv_double(double v) { return format_double(v); }

struct LoadedRun {
    RunConfig config;
    Dataset dataset;
    std::shared_ptr<Predictor> predictor;
    PipelineConfig pipeline;
    Window window;  // the explained window
};

LoadedRun prepare(const CommonArgs& args, bool needs_predictor) {
    LoadedRun run{load(args), {}, nullptr, {}, {}};
    run.dataset = resolve_dataset(run.config);
    run.pipeline = pipeline_config(run.config);
    int idx = run.config.evaluation.explain_index;
    if (idx < 0 || idx >= static_cast<int>(run.dataset.windows.size())) {
        throw std::invalid_argument("config: explain_index out of range");
    }
    run.window = run.dataset.windows[static_cast<std::size_t>(idx)];
    if (run.config.evaluation.loss_mode == "label") {
        if (run.dataset.labels.empty()) {
            throw std::invalid_argument("config: label loss_mode needs dataset labels");
        }
        run.pipeline.loss.label = run.dataset.labels[static_cast<std::size_t>(idx)];
    }
    if (needs_predictor) run.predictor = make_predictor(run.config, run.dataset);
    return run;
}

Grouping run_grouping(const LoadedRun& run) {
    if (run.config.grouping_method == GroupingMethod::hsic) {
        return group_features(run.dataset.background, run.config.grouping,
                              run.dataset.variable_names);
    }
    int k_hint = run.config.k_hint;
    if (run.config.grouping_method == GroupingMethod::random && k_hint < 1) {
        k_hint = static_cast<int>(group_features(run.dataset.background, run.config.grouping,
                                                 run.dataset.variable_names)
                                      .groups.size());
    }
    return alternative_grouping(run.dataset.background, run.config.grouping_method, k_hint,
                                run.config.grouping, run.dataset.variable_names);
}

std::vector<Segmentation> run_segmentation(const LoadedRun& run, const Grouping& grouping) {
    std::vector<Segmentation> segmentations;
    for (std::size_t k = 0; k < grouping.groups.size(); ++k) {
        Eigen::MatrixXd block(run.window.rows(),
                              static_cast<Eigen::Index>(grouping.groups[k].size()));
        for (std::size_t j = 0; j < grouping.groups[k].size(); ++j) {
            block.col(static_cast<Eigen::Index>(j)) = run.window.col(grouping.groups[k][j] - 1);
        }
        segmentations.push_back(
            segment_group(block, run.config.segmentation, static_cast<int>(k)));
    }
    return segmentations;
}

PlayerSet run_players(const LoadedRun& run, const Grouping& grouping,
                      const std::vector<Segmentation>& segmentations) {
    switch (run.config.players.source) {
        case PlayersSettings::Source::fixture: {
            if (!run.config.synthetic || run.config.synthetic->kind != "player_fixture") {
                throw std::invalid_argument(
                    "config: players scheme 'fixture' needs a synthetic player_fixture dataset");
            }
            PlayerFixture fx = make_player_fixture(run.config.synthetic->fixture,
                                                   run.config.synthetic->seed);
            return *fx.players;
        }
        case PlayersSettings::Source::file:
            return player_set_from_json(read_text_file(run.config.players.file));
        case PlayersSettings::Source::scheme:
            break;
    }
    if (run.config.players.scheme == PlayerScheme::group_segment) {
        return build_players(grouping, segmentations, run.dataset.T, run.dataset.D);
    }
    return baseline_players(run.config.players.scheme, run.dataset.T, run.dataset.D,
                            run.config.players.params);
}

int cmd_synth(const std::string& kind, const std::string& out_dir, std::uint64_t seed,
              const json& params, bool quiet) {
    fs::path dir(out_dir);
    if (kind == "planted_blocks") {
        PlantedBlocksParams p;
        p.T = params.value("T", p.T);
        p.n_windows = params.value("n_windows", p.n_windows);
        p.D = params.value("D", p.D);
        p.n_latents = params.value("n_latents", p.n_latents);
        p.noise = params.value("noise", p.noise);
        write_planted_blocks(dir, p, seed);
    } else if (kind == "mean_shift") {
        MeanShiftParams p;
        p.T = params.value("T", p.T);
        p.D = params.value("D", p.D);
        p.n_windows = params.value("n_windows", p.n_windows);
        p.shift_t = params.value("shift_t", p.shift_t);
        p.magnitude = params.value("magnitude", p.magnitude);
        p.noise_sigma = params.value("noise_sigma", p.noise_sigma);
        write_mean_shift(dir, p, seed);
    } else if (kind == "player_fixture") {
        PlayerFixtureParams p;
        p.T = params.value("T", p.T);
        p.D = params.value("D", p.D);
        p.n_background = params.value("n_background", p.n_background);
        p.split_groups = params.value("split_groups", p.split_groups);
        write_player_fixture(dir, p, seed);
    } else {
        throw std::invalid_argument("synth: unknown kind: " + kind);
    }
    if (!quiet) std::cout << "wrote dataset under " << dir.string() << "\n";
    return 0;
}

int cmd_group(const CommonArgs& args) {
    LoadedRun run = prepare(args, false);
    Grouping grouping = run_grouping(run);
    fs::path path = run.config.output_dir / (run.config.run_id + "_grouping.json");
    atomic_write(path, grouping_to_json(grouping));
    note(args, path);
    return 0;
}

int cmd_segment(const CommonArgs& args) {
    LoadedRun run = prepare(args, false);
    Grouping grouping = run_grouping(run);
    auto segmentations = run_segmentation(run, grouping);

    auto docs = json::array();
    for (const auto& seg : segmentations) {
        docs.push_back(json::parse(segmentation_to_json(seg, run.config.segmentation)));
    }
    fs::path path = run.config.output_dir / (run.config.run_id + "_segments.json");
    atomic_write(path, docs.dump(2) + "\n");
    note(args, path);
    return 0;
}

int cmd_explain(const CommonArgs& args) {
    LoadedRun run = prepare(args, true);
    Grouping grouping = run_grouping(run);
    auto segmentations = run_segmentation(run, grouping);
    PlayerSet players = run_players(run, grouping, segmentations);

    MaskingBaseline baseline = baseline_from_background(
        run.config.baseline_mode, run.dataset.background, run.config.noise_seed);
    AttributionResult attr =
        shapley_permutation(*run.predictor, run.window, players, run.config.attribution_m,
                            baseline, run.config.attribution_seed);
    attr.players_ref = run.config.run_id + "_players.json";
    ImportanceMap map = project_to_cells(attr, players);

    fs::path players_path = run.config.output_dir / (run.config.run_id + "_players.json");
    atomic_write(players_path, player_set_to_json(players));
    note(args, players_path);

    fs::path attr_path = run.config.output_dir / (run.config.run_id + "_attribution.json");
    atomic_write(attr_path, attribution_to_json(attr));
    note(args, attr_path);

    json map_json;
    {
        auto rows = json::array();
        for (Eigen::Index t = 0; t < map.values.rows(); ++t) {
            auto row = json::array();
            for (Eigen::Index d = 0; d < map.values.cols(); ++d) row.push_back(map.values(t, d));
            rows.push_back(std::move(row));
        }
        map_json["values"] = std::move(rows);
    }
    fs::path map_json_path = run.config.output_dir / (run.config.run_id + "_importance_map.json");
    atomic_write(map_json_path, map_json.dump(2) + "\n");
    note(args, map_json_path);

    fs::path map_csv_path = run.config.output_dir / (run.config.run_id + "_importance_map.csv");
    write_window_csv(map_csv_path, map.values, run.dataset.variable_names);
    note(args, map_csv_path);
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    LoadedRun run = prepare(args, true);
    Grouping grouping = run_grouping(run);
    auto segmentations = run_segmentation(run, grouping);
    PlayerSet players = run_players(run, grouping, segmentations);

    MaskingBaseline baseline = baseline_from_background(
        run.config.baseline_mode, run.dataset.background, run.config.noise_seed);
    AttributionResult attr =
        shapley_permutation(*run.predictor, run.window, players, run.config.attribution_m,
                            baseline, run.config.attribution_seed);
    ImportanceMap map = project_to_cells(attr, players);

    // Conservation check on the emitted map.
    double map_sum = map.values.sum();
    double phi_sum = attr.phi.sum();
    if (std::abs(map_sum - phi_sum) > 1e-9 * std::max(1.0, std::abs(phi_sum))) {
        throw std::runtime_error("evaluate: importance map does not conserve attributions");
    }

    DeletionCurve curve = deletion_curve(*run.predictor, run.window, map,
                                         run.pipeline.fractions, baseline, run.pipeline.loss);
    fs::path curve_csv = run.config.output_dir / (run.config.run_id + "_deletion_curve.csv");
    atomic_write(curve_csv, deletion_curve_to_csv(curve));
    note(args, curve_csv);
    fs::path curve_json = run.config.output_dir / (run.config.run_id + "_deletion_curve.json");
    atomic_write(curve_json, deletion_curve_to_json(curve));
    note(args, curve_json);

    json auc;
    auc["delta_auc"] = delta_auc(curve);
    auc["grouping_method"] = to_string(run.config.grouping_method);
    fs::path auc_path = run.config.output_dir / (run.config.run_id + "_delta_auc.json");
    atomic_write(auc_path, auc.dump(2) + "\n");
    note(args, auc_path);

    // Grouping-strategy comparison.
    if (!run.config.evaluation.strategies.empty()) {
        auto results = grouping_comparison(
            *run.predictor, run.dataset.background,
            std::span<const Window>(&run.window, 1), run.config.evaluation.strategies,
            run.pipeline);
        std::string table = "strategy,delta_auc\n";
        json jt = json::array();
        for (const auto& r : results) {
            table += to_string(r.strategy) + "," + csv_double(r.delta_auc_value) + "\n";
            jt.push_back({{"strategy", to_string(r.strategy)},
                          {"delta_auc", r.delta_auc_value}});
            fs::path strategy_csv =
                run.config.output_dir /
                (run.config.run_id + "_curve_" + to_string(r.strategy) + ".csv");
            atomic_write(strategy_csv, deletion_curve_to_csv(r.mean_curve));
            note(args, strategy_csv);
        }
        fs::path cmp_csv =
            run.config.output_dir / (run.config.run_id + "_grouping_comparison.csv");
        atomic_write(cmp_csv, table);
        note(args, cmp_csv);
        fs::path cmp_json =
            run.config.output_dir / (run.config.run_id + "_grouping_comparison.json");
        atomic_write(cmp_json, jt.dump(2) + "\n");
        note(args, cmp_json);
    }

    // Background-resampling robustness.
    if (run.config.evaluation.robustness_runs >= 2) {
        int pool = static_cast<int>(run.dataset.background.size());
        int subset = run.config.evaluation.background_subset;
        if (subset < 1) subset = std::max(1, pool / 2);
        auto report = robustness_cosine(*run.predictor, run.window, players,
                                        run.dataset.background,
                                        run.config.evaluation.robustness_runs, subset,
                                        run.pipeline, run.config.attribution_seed);
        json jr;
        auto pairwise = json::array();
        for (const auto& p : report.pairwise) {
            if (p) {
                pairwise.push_back(*p);
            } else {
                pairwise.push_back(nullptr);
            }
        }
        jr["pairwise"] = std::move(pairwise);
        jr["min"] = report.min;
        jr["mean"] = report.mean;
        jr["max"] = report.max;
        jr["defined_pairs"] = report.defined_pairs;
        fs::path rob_path = run.config.output_dir / (run.config.run_id + "_robustness.json");
        atomic_write(rob_path, jr.dump(2) + "\n");
        note(args, rob_path);
    }

    // Sensitivity sweeps.
    auto write_sensitivity = [&](SensitivityAxis axis, std::span<const std::string> values,
                                 const std::string& tag) {
        auto rows = sensitivity_sweep(*run.predictor, run.dataset.background, run.window, axis,
                                      values, run.pipeline);
        std::string table = "value,delta_auc,delta_loss_at_060\n";
        json jt = json::array();
        for (const auto& r : rows) {
            table += r.value + "," + csv_double(r.delta_auc_value) + "," +
                     csv_double(r.delta_loss_at_060) + "\n";
            jt.push_back({{"value", r.value},
                          {"delta_auc", r.delta_auc_value},
                          {"delta_loss_at_060", r.delta_loss_at_060}});
        }
        fs::path csv_path =
            run.config.output_dir / (run.config.run_id + "_sensitivity_" + tag + ".csv");
        atomic_write(csv_path, table);
        note(args, csv_path);
        fs::path json_path =
            run.config.output_dir / (run.config.run_id + "_sensitivity_" + tag + ".json");
        atomic_write(json_path, jt.dump(2) + "\n");
        note(args, json_path);
    };
    if (!run.config.evaluation.l_min_values.empty()) {
        std::vector<std::string> values;
        for (int v : run.config.evaluation.l_min_values) values.push_back(std::to_string(v));
        write_sensitivity(SensitivityAxis::l_min, values, "lmin");
    }
    if (!run.config.evaluation.masking_modes.empty()) {
        write_sensitivity(SensitivityAxis::masking_mode, run.config.evaluation.masking_modes,
                          "masking");
    }
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    LoadedRun run = prepare(args, true);

    BenchSchemeParams scheme_params;
    scheme_params.baseline = run.config.players.params;
    bool needs_grouping = false;
    for (PlayerScheme m : run.config.bench.methods) {
        if (m == PlayerScheme::group_segment) needs_grouping = true;
        if (m == PlayerScheme::window && scheme_params.baseline.window_len < 1) {
            scheme_params.baseline.window_len = std::max(1, run.dataset.T / 8);
        }
        if (m == PlayerScheme::subsequence && scheme_params.baseline.n_subseq < 1) {
            scheme_params.baseline.n_subseq = std::min(run.dataset.T, 8);
        }
    }
    if (needs_grouping) {
        Grouping grouping = run_grouping(run);
        scheme_params.grouping = std::move(grouping);
    }

    auto records = runtime_bench(*run.predictor, run.dataset.windows, run.config.bench.methods,
                                 run.config.bench.budgets, run.config.bench.n_samples,
                                 run.pipeline, scheme_params);

    std::string table =
        "method,M,mean_seconds,std_seconds,n_samples,calls_mean,calls_min,calls_max,n_players\n";
    json jt = json::array();
    for (const auto& r : records) {
        table += r.method_tag + "," + std::to_string(r.budget_m) + "," +
                 csv_double(r.mean_seconds) + "," + csv_double(r.std_seconds) + "," +
                 std::to_string(r.n_samples) + "," + csv_double(r.calls_mean) + "," +
                 std::to_string(r.calls_min) + "," + std::to_string(r.calls_max) + "," +
                 std::to_string(r.n_players) + "\n";
        jt.push_back({{"method", r.method_tag},
                      {"M", r.budget_m},
                      {"mean_seconds", r.mean_seconds},
                      {"std_seconds", r.std_seconds},
                      {"n_samples", r.n_samples},
                      {"calls_mean", r.calls_mean},
                      {"calls_min", r.calls_min},
                      {"calls_max", r.calls_max},
                      {"n_players", r.n_players}});
    }
    fs::path csv_path = run.config.output_dir / (run.config.run_id + "_bench.csv");
    atomic_write(csv_path, table);
    note(args, csv_path);
    fs::path json_path = run.config.output_dir / (run.config.run_id + "_bench.json");
    atomic_write(json_path, jt.dump(2) + "\n");
    note(args, json_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shapley attribution for multivariate time series"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset on disk");
    std::string synth_kind;
    std::string synth_out;
    std::int64_t synth_seed = -1;
    std::string synth_params = "{}";
    bool synth_quiet = false;
    synth->add_option("--kind", synth_kind, "planted_blocks | mean_shift | player_fixture")
        ->required();
    synth->add_option("--out", synth_out, "target directory")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--params", synth_params, "JSON object of generator parameters");
    synth->add_flag("--quiet", synth_quiet, "suppress progress output");

    CommonArgs group_args;
    CommonArgs segment_args;
    CommonArgs explain_args;
    CommonArgs evaluate_args;
    CommonArgs bench_args;
    auto* group = app.add_subcommand("group", "emit the variable grouping");
    add_common(group, group_args);
    auto* segment = app.add_subcommand("segment", "emit per-group temporal segmentations");
    add_common(segment, segment_args);
    auto* explain = app.add_subcommand("explain", "run the attribution pipeline end to end");
    add_common(explain, explain_args);
    auto* evaluate = app.add_subcommand("evaluate",
                                        "deletion curves, comparisons, robustness, sensitivity");
    add_common(evaluate, evaluate_args);
    auto* bench = app.add_subcommand("bench", "runtime-vs-budget benchmark");
    add_common(bench, bench_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) {
            std::cerr << "ERROR 1: " << e.what() << "\n";
            return 1;
        }
        return app.exit(e);
    }

    try {
        if (synth->parsed()) {
            if (synth_seed < 0) throw std::invalid_argument("synth: seed must be non-negative");
            return cmd_synth(synth_kind, synth_out,
                             static_cast<std::uint64_t>(synth_seed),
                             json::parse(synth_params), synth_quiet);
        }
        if (group->parsed()) return cmd_group(group_args);
        if (segment->parsed()) return cmd_segment(segment_args);
        if (explain->parsed()) return cmd_explain(explain_args);
        if (evaluate->parsed()) return cmd_evaluate(evaluate_args);
        if (bench->parsed()) return cmd_bench(bench_args);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "ERROR 1: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "ERROR 1: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "ERROR 1: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR 2: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
