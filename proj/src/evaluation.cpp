#include "tsattr/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

double apply_loss(const LossSpec& loss, double output, double original_output) {
    switch (loss.kind) {
        case LossKind::output_deviation: {
            double d = output - original_output;
            return d * d;
        }
        case LossKind::label_squared: {
            double d = output - loss.label;
            return d * d;
        }
        case LossKind::label_nll:
            return -std::log(std::max(output, 1e-12));
    }
    throw std::logic_error("unknown loss kind");
}

std::string format_double_csv(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double sample_std(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace

ImportanceMap project_to_cells(const AttributionResult& result, const PlayerSet& player_set) {
    if (result.phi.size() != player_set.size()) {
        throw std::invalid_argument("project_to_cells: phi length does not match player count");
    }
    Eigen::MatrixXd values(player_set.T, player_set.D);
    for (const auto& p : player_set.players) {
        double share = result.phi(p.id) / p.cell_count();
        for (int t = p.segment.start; t < p.segment.end; ++t) {
            for (int d : p.variables) values(t - 1, d - 1) = share;
        }
    }
    return {std::move(values)};
}

std::vector<double> default_fractions() {
    std::vector<double> f;
    f.reserve(21);
    for (int i = 0; i <= 20; ++i) f.push_back(static_cast<double>(i) / 20.0);
    return f;
}

DeletionCurve deletion_curve(Predictor& predictor, const Window& window,
                             const ImportanceMap& map, std::span<const double> fractions,
                             const MaskingBaseline& baseline, const LossSpec& loss) {
    const int t_len = static_cast<int>(window.rows());
    const int d_len = static_cast<int>(window.cols());
    if (map.values.rows() != t_len || map.values.cols() != d_len) {
        throw std::invalid_argument("deletion_curve: map shape mismatch");
    }
    if (fractions.empty() || fractions.front() != 0.0) {
        throw std::invalid_argument("deletion_curve: fractions must start at 0");
    }
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] < 0.0 || fractions[i] > 1.0) {
            throw std::invalid_argument("deletion_curve: fraction outside [0, 1]");
        }
        if (i > 0 && fractions[i] < fractions[i - 1]) {
            throw std::invalid_argument("deletion_curve: fractions must be ascending");
        }
    }

    // Cells ranked by importance descending; ties resolve row-major.
    const int n_cells = t_len * d_len;
    std::vector<int> order(static_cast<std::size_t>(n_cells));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double va = map.values(a / d_len, a % d_len);
        double vb = map.values(b / d_len, b % d_len);
        if (va != vb) return va > vb;
        return a < b;
    });

    const Window base = baseline_window(baseline, t_len, d_len);

    std::vector<Window> batch;
    batch.reserve(fractions.size() + 1);
    batch.push_back(window);  // reference output
    std::vector<int> masked_counts;
    masked_counts.reserve(fractions.size());
    for (double fraction : fractions) {
        int k = static_cast<int>(std::floor(fraction * n_cells));
        masked_counts.push_back(k);
        Window w = window;
        for (int i = 0; i < k; ++i) {
            int cell = order[static_cast<std::size_t>(i)];
            w(cell / d_len, cell % d_len) = base(cell / d_len, cell % d_len);
        }
        batch.push_back(std::move(w));
    }

    auto outputs = predictor.evaluate(batch);
    const double original = outputs.front();
    const double loss_at_zero = apply_loss(loss, outputs[1], original);

    DeletionCurve curve;
    curve.fractions.assign(fractions.begin(), fractions.end());
    curve.masked_cells = std::move(masked_counts);
    curve.delta_loss.reserve(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        double l = apply_loss(loss, outputs[i + 1], original);
        curve.delta_loss.push_back(std::max(0.0, l - loss_at_zero));
    }
    return curve;
}

double delta_auc(const DeletionCurve& curve) {
    if (curve.fractions.size() != curve.delta_loss.size()) {
        throw std::invalid_argument("delta_auc: malformed curve");
    }
    double area = 0.0;
    for (std::size_t i = 1; i < curve.fractions.size(); ++i) {
        area += 0.5 * (curve.delta_loss[i] + curve.delta_loss[i - 1]) *
                (curve.fractions[i] - curve.fractions[i - 1]);
    }
    return area;
}

PlayerSet build_pipeline_players(std::span<const Window> background, const Window& window,
                                 const PipelineConfig& config,
                                 std::vector<std::string> variable_names,
                                 Grouping* grouping_out, const Grouping* grouping_in) {
    Grouping grouping;
    if (grouping_in != nullptr) {
        grouping = *grouping_in;
    } else if (config.grouping_method == GroupingMethod::hsic) {
        grouping = group_features(background, config.grouping, std::move(variable_names));
    } else {
        int k_hint = config.random_k_hint;
        if (config.grouping_method == GroupingMethod::random && k_hint < 1) {
            k_hint = static_cast<int>(
                group_features(background, config.grouping, variable_names).groups.size());
        }
        grouping = alternative_grouping(background, config.grouping_method, k_hint,
                                        config.grouping, std::move(variable_names));
    }

    std::vector<Segmentation> segmentations;
    segmentations.reserve(grouping.groups.size());
    for (std::size_t k = 0; k < grouping.groups.size(); ++k) {
        Eigen::MatrixXd block(window.rows(), static_cast<Eigen::Index>(grouping.groups[k].size()));
        for (std::size_t j = 0; j < grouping.groups[k].size(); ++j) {
            block.col(static_cast<Eigen::Index>(j)) = window.col(grouping.groups[k][j] - 1);
        }
        segmentations.push_back(segment_group(block, config.segmentation, static_cast<int>(k)));
    }
    if (grouping_out != nullptr) *grouping_out = grouping;
    return build_players(grouping, segmentations, static_cast<int>(window.rows()),
                         static_cast<int>(window.cols()));
}

std::vector<StrategyResult> grouping_comparison(Predictor& predictor,
                                                std::span<const Window> background,
                                                std::span<const Window> explained,
                                                std::span<const GroupingMethod> strategies,
                                                const PipelineConfig& config) {
    if (explained.empty()) {
        throw std::invalid_argument("grouping_comparison: need at least one window");
    }
    // The HSIC grouping is shared by the hsic strategy and by the group-count
    // hint of the random strategy; compute it at most once.
    std::optional<Grouping> hsic_cache;
    auto hsic_grouping = [&]() -> const Grouping& {
        if (!hsic_cache) hsic_cache = group_features(background, config.grouping);
        return *hsic_cache;
    };

    std::vector<StrategyResult> results;
    for (GroupingMethod strategy : strategies) {
        PipelineConfig local = config;
        local.grouping_method = strategy;
        const Grouping* cached = nullptr;
        if (strategy == GroupingMethod::hsic) {
            cached = &hsic_grouping();
        } else if (strategy == GroupingMethod::random && local.random_k_hint < 1) {
            local.random_k_hint = static_cast<int>(hsic_grouping().groups.size());
        }

        DeletionCurve mean_curve;
        for (std::size_t i = 0; i < explained.size(); ++i) {
            const Window& window = explained[i];
            PlayerSet players =
                build_pipeline_players(background, window, local, {}, nullptr, cached);
            MaskingBaseline baseline =
                baseline_from_background(local.masking, background, local.noise_seed);
            AttributionResult attr = shapley_permutation(
                predictor, window, players, local.attribution_m, baseline,
                local.attribution_seed);
            ImportanceMap map = project_to_cells(attr, players);
            DeletionCurve curve =
                deletion_curve(predictor, window, map, local.fractions, baseline, local.loss);
            if (i == 0) {
                mean_curve = curve;
            } else {
                for (std::size_t j = 0; j < curve.delta_loss.size(); ++j) {
                    mean_curve.delta_loss[j] += curve.delta_loss[j];
                }
            }
        }
        for (auto& v : mean_curve.delta_loss) v /= static_cast<double>(explained.size());
        double auc = delta_auc(mean_curve);
        results.push_back({strategy, std::move(mean_curve), auc});
    }
    return results;
}

RobustnessReport robustness_cosine(Predictor& predictor, const Window& window,
                                   const PlayerSet& player_set,
                                   std::span<const Window> background_pool, int n_runs,
                                   int subset_size, const PipelineConfig& config,
                                   std::uint64_t resample_seed) {
    if (n_runs < 2) throw std::invalid_argument("robustness_cosine: need at least 2 runs");
    const int pool = static_cast<int>(background_pool.size());
    if (subset_size < 1 || subset_size > pool) {
        throw std::invalid_argument("robustness_cosine: subset size out of range");
    }

    std::vector<Eigen::VectorXd> maps;
    maps.reserve(static_cast<std::size_t>(n_runs));
    for (int run = 0; run < n_runs; ++run) {
        Rng rng(mix_seed(resample_seed, static_cast<std::uint64_t>(run)));
        auto idx = sample_without_replacement(pool, subset_size, rng);
        std::vector<Window> subset;
        subset.reserve(idx.size());
        for (int i : idx) subset.push_back(background_pool[static_cast<std::size_t>(i)]);

        MaskingBaseline baseline =
            baseline_from_background(config.masking, subset, config.noise_seed);
        AttributionResult attr = shapley_permutation(predictor, window, player_set,
                                                     config.attribution_m, baseline,
                                                     config.attribution_seed);
        ImportanceMap map = project_to_cells(attr, player_set);
        maps.push_back(Eigen::Map<const Eigen::VectorXd>(map.values.data(), map.values.size()));
    }

    RobustnessReport report;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_runs; ++i) {
        for (int j = i + 1; j < n_runs; ++j) {
            double ni = maps[static_cast<std::size_t>(i)].norm();
            double nj = maps[static_cast<std::size_t>(j)].norm();
            if (ni == 0.0 || nj == 0.0) {
                report.pairwise.push_back(std::nullopt);
                continue;
            }
            double cos = maps[static_cast<std::size_t>(i)].dot(maps[static_cast<std::size_t>(j)]) /
                         (ni * nj);
            report.pairwise.push_back(cos);
            sum += cos;
            lo = std::min(lo, cos);
            hi = std::max(hi, cos);
            ++report.defined_pairs;
        }
    }
    if (report.defined_pairs > 0) {
        report.min = lo;
        report.max = hi;
        report.mean = sum / report.defined_pairs;
    }
    return report;
}

std::vector<SensitivityRow> sensitivity_sweep(Predictor& predictor,
                                              std::span<const Window> background,
                                              const Window& window, SensitivityAxis axis,
                                              std::span<const std::string> values,
                                              const PipelineConfig& config) {
    if (values.empty()) throw std::invalid_argument("sensitivity_sweep: no values");

    auto grid_index_060 = [&](std::span<const double> fractions) {
        for (std::size_t i = 0; i < fractions.size(); ++i) {
            if (std::abs(fractions[i] - 0.60) < 1e-12) return i;
        }
        throw std::invalid_argument("sensitivity_sweep: 0.60 not on the deletion grid");
    };

    // Neither axis touches the grouping stage; compute it once.
    Grouping grouping;
    build_pipeline_players(background, window, config, {}, &grouping);

    std::vector<SensitivityRow> rows;
    for (const auto& value : values) {
        PipelineConfig local = config;
        if (axis == SensitivityAxis::l_min) {
            local.segmentation.l_min = std::stoi(value);
        } else {
            local.masking = masking_mode_from_string(value);
        }
        PlayerSet players = build_pipeline_players(background, window, local, {}, nullptr,
                                                   &grouping);
        MaskingBaseline baseline =
            baseline_from_background(local.masking, background, local.noise_seed);
        AttributionResult attr = shapley_permutation(predictor, window, players,
                                                     local.attribution_m, baseline,
                                                     local.attribution_seed);
        ImportanceMap map = project_to_cells(attr, players);
        DeletionCurve curve =
            deletion_curve(predictor, window, map, local.fractions, baseline, local.loss);
        std::size_t idx = grid_index_060(local.fractions);
        rows.push_back({value, delta_auc(curve), curve.delta_loss[idx]});
    }
    return rows;
}

std::vector<BenchRecord> runtime_bench(Predictor& predictor, std::span<const Window> samples,
                                       std::span<const PlayerScheme> methods,
                                       std::span<const int> budgets, int n_samples,
                                       const PipelineConfig& config,
                                       const BenchSchemeParams& scheme_params) {
    if (budgets.empty()) throw std::invalid_argument("runtime_bench: no budgets");
    if (samples.empty()) throw std::invalid_argument("runtime_bench: no samples");
    if (n_samples < 1) throw std::invalid_argument("runtime_bench: n_samples must be >= 1");

    using clock = std::chrono::steady_clock;
    MaskingBaseline baseline =
        baseline_from_background(config.masking, samples, config.noise_seed);

    struct Cell {
        PlayerScheme method;
        int budget;
        std::vector<double> seconds;
        long long calls_total = 0;
        long long calls_min = std::numeric_limits<long long>::max();
        long long calls_max = 0;
        int n_players = 0;
    };
    std::vector<Cell> cells;
    for (PlayerScheme method : methods) {
        for (int budget : budgets) cells.push_back({method, budget, {}, 0, 0, 0, 0});
    }
    for (auto& cell : cells) {
        cell.seconds.reserve(static_cast<std::size_t>(n_samples));
        cell.calls_min = std::numeric_limits<long long>::max();
    }

    auto measure_one = [&](Cell& cell, const Window& window) {
        predictor.reset_forward_calls();
        auto start = clock::now();

        PlayerSet players;
        if (cell.method == PlayerScheme::group_segment) {
            // Grouping is one-time preprocessing; segmentation and player
            // construction run per sample.
            const Grouping& grouping = scheme_params.grouping;
            std::vector<Segmentation> segs;
            segs.reserve(grouping.groups.size());
            for (std::size_t k = 0; k < grouping.groups.size(); ++k) {
                Eigen::MatrixXd block(window.rows(),
                                      static_cast<Eigen::Index>(grouping.groups[k].size()));
                for (std::size_t j = 0; j < grouping.groups[k].size(); ++j) {
                    block.col(static_cast<Eigen::Index>(j)) =
                        window.col(grouping.groups[k][j] - 1);
                }
                segs.push_back(segment_group(block, config.segmentation, static_cast<int>(k)));
            }
            players = build_players(grouping, segs, static_cast<int>(window.rows()),
                                    static_cast<int>(window.cols()));
        } else {
            players = baseline_players(cell.method, static_cast<int>(window.rows()),
                                       static_cast<int>(window.cols()), scheme_params.baseline);
        }
        AttributionResult attr = shapley_permutation(predictor, window, players, cell.budget,
                                                     baseline, config.attribution_seed);
        ImportanceMap map = project_to_cells(attr, players);
        (void)map;

        auto end = clock::now();
        cell.n_players = players.size();
        return std::chrono::duration<double>(end - start).count();
    };

    // Round-robin over the (method, budget) grid, one untimed warm-up round
    // first: slow machine phases spread over every cell instead of biasing
    // whichever budget happened to run during them.
    for (int round = -1; round < n_samples; ++round) {
        const Window& window =
            samples[static_cast<std::size_t>(std::max(round, 0)) % samples.size()];
        for (auto& cell : cells) {
            double elapsed = measure_one(cell, window);
            if (round < 0) continue;
            cell.seconds.push_back(elapsed);
            long long calls = predictor.forward_calls();
            cell.calls_total += calls;
            cell.calls_min = std::min(cell.calls_min, calls);
            cell.calls_max = std::max(cell.calls_max, calls);
        }
    }

    std::vector<BenchRecord> records;
    records.reserve(cells.size());
    for (const auto& cell : cells) {
        double mean = std::accumulate(cell.seconds.begin(), cell.seconds.end(), 0.0) /
                      static_cast<double>(cell.seconds.size());
        records.push_back({to_string(cell.method), cell.budget, mean,
                           sample_std(cell.seconds, mean), n_samples,
                           static_cast<double>(cell.calls_total) / n_samples, cell.calls_min,
                           cell.calls_max, cell.n_players});
    }
    return records;
}

std::string deletion_curve_to_csv(const DeletionCurve& curve) {
    std::string out = "fraction,delta_loss\n";
    for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
        out += format_double_csv(curve.fractions[i]);
        out += ',';
        out += format_double_csv(curve.delta_loss[i]);
        out += '\n';
    }
    return out;
}

std::string deletion_curve_to_json(const DeletionCurve& curve) {
    nlohmann::json j;
    j["fractions"] = curve.fractions;
    j["delta_loss"] = curve.delta_loss;
    return j.dump(2) + "\n";
}

}  // namespace tsattr
