#include "tsattr/config.hpp"

#include <stdexcept>

namespace tsattr {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<Preset> lookup_preset(const std::string& name) {
    if (name == "har") return Preset{96, 10};
    if (name == "ettm1") return Preset{128, 13};
    if (name == "ptbxl") return Preset{1000, 100};
    if (name == "sp500") return Preset{20, 4};
    return std::nullopt;
}

namespace {

std::uint64_t require_seed(const json& section, const char* name) {
    if (!section.contains("seed")) {
        throw std::invalid_argument(std::string("config: ") + name +
                                    ".seed is required (no entropy defaults)");
    }
    return section.at("seed").get<std::uint64_t>();
}

SyntheticSpec parse_synthetic(const json& j) {
    SyntheticSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.seed = require_seed(j, "dataset.synthetic");
    const json params = j.value("params", json::object());
    if (spec.kind == "planted_blocks") {
        spec.planted.T = params.value("T", spec.planted.T);
        spec.planted.n_windows = params.value("n_windows", spec.planted.n_windows);
        spec.planted.D = params.value("D", spec.planted.D);
        spec.planted.n_latents = params.value("n_latents", spec.planted.n_latents);
        spec.planted.noise = params.value("noise", spec.planted.noise);
    } else if (spec.kind == "mean_shift") {
        spec.shift.T = params.value("T", spec.shift.T);
        spec.shift.D = params.value("D", spec.shift.D);
        spec.shift.n_windows = params.value("n_windows", spec.shift.n_windows);
        spec.shift.shift_t = params.value("shift_t", spec.shift.shift_t);
        spec.shift.magnitude = params.value("magnitude", spec.shift.magnitude);
        spec.shift.noise_sigma = params.value("noise_sigma", spec.shift.noise_sigma);
    } else if (spec.kind == "player_fixture") {
        spec.fixture.T = params.value("T", spec.fixture.T);
        spec.fixture.D = params.value("D", spec.fixture.D);
        spec.fixture.n_background = params.value("n_background", spec.fixture.n_background);
        spec.fixture.split_groups = params.value("split_groups", spec.fixture.split_groups);
    } else {
        throw std::invalid_argument("config: unknown synthetic kind: " + spec.kind);
    }
    return spec;
}

}  // namespace

RunConfig load_run_config(const fs::path& path, const ConfigOverrides& overrides) {
    json j = json::parse(read_text_file(path));
    RunConfig cfg;
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    cfg.run_id = j.value("run_id", std::string("run"));

    if (!j.contains("dataset")) throw std::invalid_argument("config: dataset is required");
    const json& ds = j.at("dataset");
    if (ds.contains("manifest")) {
        cfg.manifest = cfg.base_dir / ds.at("manifest").get<std::string>();
        if (!fs::exists(*cfg.manifest)) {
            throw std::invalid_argument("config: dataset manifest does not exist: " +
                                        cfg.manifest->string());
        }
    } else if (ds.contains("synthetic")) {
        cfg.synthetic = parse_synthetic(ds.at("synthetic"));
    } else {
        throw std::invalid_argument("config: dataset needs 'manifest' or 'synthetic'");
    }

    if (!j.contains("predictor")) throw std::invalid_argument("config: predictor is required");
    cfg.predictor = j.at("predictor");
    if (cfg.predictor.contains("players")) {
        fs::path p = cfg.base_dir / cfg.predictor.at("players").get<std::string>();
        if (!fs::exists(p)) {
            throw std::invalid_argument("config: predictor players file does not exist: " +
                                        p.string());
        }
    }
    if (cfg.predictor.contains("weights_csv")) {
        fs::path p = cfg.base_dir / cfg.predictor.at("weights_csv").get<std::string>();
        if (!fs::exists(p)) {
            throw std::invalid_argument("config: predictor weights file does not exist: " +
                                        p.string());
        }
    }

    const json grouping = j.value("grouping", json::object());
    cfg.grouping.seed = require_seed(grouping, "grouping");
    cfg.grouping.n_hsic_subsample = grouping.value("n_hsic_subsample", 3000);
    cfg.grouping.k_max = grouping.value("k_max", 6);
    cfg.grouping.quality_threshold = grouping.value("quality_threshold", 1e-3);
    cfg.grouping.max_refine_depth = grouping.value("max_refine_depth", 5);
    cfg.grouping_method = grouping_method_from_string(grouping.value("method", "hsic"));
    cfg.k_hint = grouping.value("k_hint", 0);

    const json segmentation = j.value("segmentation", json::object());
    cfg.segmentation.seed = require_seed(segmentation, "segmentation");
    if (!segmentation.contains("l_min")) {
        throw std::invalid_argument("config: segmentation.l_min is required");
    }
    cfg.segmentation.l_min = segmentation.at("l_min").get<int>();
    cfg.segmentation.j_max = segmentation.value("j_max", 8);
    cfg.segmentation.alpha = segmentation.value("alpha", 0.05);
    cfg.segmentation.num_permutations = segmentation.value("num_permutations", 200);
    std::string mode = segmentation.value("threshold_mode", "per_top_level");
    if (mode == "per_top_level") {
        cfg.segmentation.threshold_mode = ThresholdMode::per_top_level;
    } else if (mode == "per_interval") {
        cfg.segmentation.threshold_mode = ThresholdMode::per_interval;
    } else {
        throw std::invalid_argument("config: unknown threshold_mode: " + mode);
    }

    const json attribution = j.value("attribution", json::object());
    cfg.attribution_seed = require_seed(attribution, "attribution");
    cfg.attribution_m = attribution.value("m", 50);
    cfg.baseline_mode = masking_mode_from_string(attribution.value("baseline", "mean"));
    cfg.noise_seed = attribution.value("noise_seed", cfg.attribution_seed);

    const json players = j.value("players", json::object());
    const std::string scheme = players.value("scheme", "group_segment");
    if (scheme == "fixture") {
        cfg.players.source = PlayersSettings::Source::fixture;
    } else if (scheme == "file") {
        cfg.players.source = PlayersSettings::Source::file;
        cfg.players.file = cfg.base_dir / players.at("path").get<std::string>();
        if (!fs::exists(cfg.players.file)) {
            throw std::invalid_argument("config: players file does not exist: " +
                                        cfg.players.file.string());
        }
    } else {
        cfg.players.scheme = player_scheme_from_string(scheme);
    }
    cfg.players.params.window_len = players.value("window_len", 0);
    cfg.players.params.n_subseq = players.value("n_subseq", 0);

    const json evaluation = j.value("evaluation", json::object());
    if (evaluation.contains("fractions")) {
        cfg.evaluation.fractions = evaluation.at("fractions").get<std::vector<double>>();
    }
    cfg.evaluation.loss_mode = evaluation.value("loss_mode", "output_deviation");
    if (cfg.evaluation.loss_mode != "output_deviation" && cfg.evaluation.loss_mode != "label") {
        throw std::invalid_argument("config: unknown loss_mode: " + cfg.evaluation.loss_mode);
    }
    cfg.evaluation.task = evaluation.value("task", "regression");
    cfg.evaluation.explain_index = evaluation.value("explain_index", 0);
    if (evaluation.contains("strategies")) {
        cfg.evaluation.strategies.clear();
        for (const auto& s : evaluation.at("strategies")) {
            cfg.evaluation.strategies.push_back(
                grouping_method_from_string(s.get<std::string>()));
        }
    }
    if (evaluation.contains("l_min_values")) {
        cfg.evaluation.l_min_values = evaluation.at("l_min_values").get<std::vector<int>>();
    }
    if (evaluation.contains("masking_modes")) {
        cfg.evaluation.masking_modes =
            evaluation.at("masking_modes").get<std::vector<std::string>>();
    }
    cfg.evaluation.robustness_runs = evaluation.value("robustness_runs", 10);
    cfg.evaluation.background_subset = evaluation.value("background_subset", 0);

    const json bench = j.value("bench", json::object());
    if (bench.contains("methods")) {
        cfg.bench.methods.clear();
        for (const auto& m : bench.at("methods")) {
            cfg.bench.methods.push_back(player_scheme_from_string(m.get<std::string>()));
        }
    }
    if (bench.contains("budgets")) {
        cfg.bench.budgets = bench.at("budgets").get<std::vector<int>>();
    }
    cfg.bench.n_samples = bench.value("n_samples", 30);

    cfg.output_dir = cfg.base_dir / j.value("output_dir", std::string("out"));

    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    if (overrides.seed_override) {
        cfg.grouping.seed = *overrides.seed_override;
        cfg.segmentation.seed = *overrides.seed_override;
        cfg.attribution_seed = *overrides.seed_override;
        cfg.noise_seed = *overrides.seed_override;
        if (cfg.synthetic) cfg.synthetic->seed = *overrides.seed_override;
    }
    if (overrides.preset) {
        auto preset = lookup_preset(*overrides.preset);
        if (!preset) throw std::invalid_argument("unknown preset: " + *overrides.preset);
        cfg.segmentation.l_min = preset->l_min;
    }
    return cfg;
}

Dataset resolve_dataset(const RunConfig& config) {
    if (config.manifest) return load_dataset(*config.manifest);

    const SyntheticSpec& spec = *config.synthetic;
    Dataset ds;
    if (spec.kind == "planted_blocks") {
        PlantedBlocks data = make_planted_blocks(spec.planted, spec.seed);
        ds.windows = std::move(data.windows);
    } else if (spec.kind == "mean_shift") {
        ds.windows = make_mean_shift(spec.shift, spec.seed);
    } else {
        PlayerFixture fx = make_player_fixture(spec.fixture, spec.seed);
        ds.windows = {fx.window};
        ds.background = fx.background;
        ds.variable_names = fx.grouping.variable_names;
    }
    if (ds.background.empty()) ds.background = ds.windows;
    ds.T = static_cast<int>(ds.windows.front().rows());
    ds.D = static_cast<int>(ds.windows.front().cols());
    if (ds.variable_names.empty()) {
        for (int d = 1; d <= ds.D; ++d) ds.variable_names.push_back("x" + std::to_string(d));
    }
    return ds;
}

std::shared_ptr<Predictor> make_predictor(const RunConfig& config, const Dataset& dataset) {
    const json& spec = config.predictor;
    const std::string kind = spec.at("kind").get<std::string>();

    auto load_players = [&]() {
        fs::path p = config.base_dir / spec.at("players").get<std::string>();
        return std::make_shared<const PlayerSet>(player_set_from_json(read_text_file(p)));
    };
    auto load_vector = [&](const char* key) {
        auto v = spec.at(key).get<std::vector<double>>();
        return Eigen::VectorXd(
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };

    if (kind == "linear") {
        Eigen::MatrixXd w;
        if (spec.contains("weights_csv")) {
            w = read_window_csv(config.base_dir / spec.at("weights_csv").get<std::string>());
        } else {
            auto rows = spec.at("weights").get<std::vector<std::vector<double>>>();
            w.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
            for (std::size_t t = 0; t < rows.size(); ++t) {
                for (std::size_t d = 0; d < rows[t].size(); ++d) {
                    w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = rows[t][d];
                }
            }
        }
        return std::make_shared<LinearPredictor>(std::move(w));
    }
    if (kind == "player_additive") {
        return std::make_shared<PlayerAdditivePredictor>(load_vector("weights"), load_players(),
                                                         load_vector("mu"));
    }
    if (kind == "player_interaction") {
        std::vector<PlayerPairTerm> pairs;
        for (const auto& p : spec.at("pairs")) {
            pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<double>()});
        }
        return std::make_shared<PlayerInteractionPredictor>(load_vector("weights"),
                                                            std::move(pairs), load_players(),
                                                            load_vector("mu"));
    }
    if (kind == "external") {
        ExternalPredictorOptions opts;
        opts.command = spec.at("command").get<std::vector<std::string>>();
        if (spec.contains("env")) {
            for (const auto& [key, value] : spec.at("env").items()) {
                opts.env.emplace_back(key, value.get<std::string>());
            }
        }
        opts.timeout_seconds = spec.value("timeout_seconds", 30.0);
        opts.concurrency_safe = spec.value("concurrency_safe", false);
        return std::make_shared<ExternalPredictor>(std::move(opts));
    }
    if (kind == "fixture") {
        if (!config.synthetic || config.synthetic->kind != "player_fixture") {
            throw std::invalid_argument(
                "config: predictor kind 'fixture' needs a synthetic player_fixture dataset");
        }
        PlayerFixture fx = make_player_fixture(config.synthetic->fixture, config.synthetic->seed);
        (void)dataset;
        return fixture_predictor(fx);
    }
    throw std::invalid_argument("config: unknown predictor kind: " + kind);
}

PipelineConfig pipeline_config(const RunConfig& config) {
    PipelineConfig pc;
    pc.grouping = config.grouping;
    pc.grouping_method = config.grouping_method;
    pc.random_k_hint = config.k_hint;
    pc.segmentation = config.segmentation;
    pc.attribution_m = config.attribution_m;
    pc.masking = config.baseline_mode;
    pc.attribution_seed = config.attribution_seed;
    pc.noise_seed = config.noise_seed;
    pc.fractions = config.evaluation.fractions;
    if (config.evaluation.loss_mode == "label") {
        pc.loss.kind = config.evaluation.task == "classification" ? LossKind::label_nll
                                                                  : LossKind::label_squared;
    }
    return pc;
}

}  // namespace tsattr
