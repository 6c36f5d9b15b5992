// Acceptance suite: one criterion per block, one PASS/FAIL line each, with
// every tolerance pinned in code. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "tsattr/attribution.hpp"
#include "tsattr/evaluation.hpp"
#include "tsattr/grouping.hpp"
#include "tsattr/io.hpp"
#include "tsattr/kernels.hpp"
#include "tsattr/players.hpp"
#include "tsattr/predictors.hpp"
#include "tsattr/rng.hpp"
#include "tsattr/segmentation.hpp"
#include "tsattr/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsattr;
using tsattr::test::linear_fit_r2;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

// Random group-segment player set with |P| in [min_players, max_players].
PlayerSet random_players(int t_len, Rng& rng, int min_players, int max_players) {
    for (;;) {
        int d = 2 + static_cast<int>(rng.next_below(4));  // 2..5 variables
        int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::min(3, d))));
        auto order = random_permutation(d, rng);
        Grouping grouping;
        grouping.groups.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < d; ++i) {
            std::size_t target = i < k ? static_cast<std::size_t>(i)
                                       : static_cast<std::size_t>(rng.next_below(
                                             static_cast<std::uint64_t>(k)));
            grouping.groups[target].push_back(order[static_cast<std::size_t>(i)] + 1);
        }
        for (auto& g : grouping.groups) std::sort(g.begin(), g.end());
        std::sort(grouping.groups.begin(), grouping.groups.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });

        std::vector<Segmentation> segmentations;
        int total = 0;
        for (int g = 0; g < k; ++g) {
            int n_segments = 1 + static_cast<int>(rng.next_below(3));
            auto cuts = sample_without_replacement(t_len - 1, n_segments - 1, rng);
            Segmentation seg;
            seg.group_index = g;
            int start = 1;
            for (int c : cuts) {
                seg.segments.push_back({start, c + 2});
                start = c + 2;
            }
            seg.segments.push_back({start, t_len + 1});
            total += static_cast<int>(seg.segments.size());
            segmentations.push_back(std::move(seg));
        }
        if (total < min_players || total > max_players) continue;
        return build_players(grouping, segmentations, t_len, d);
    }
}

Window random_window(int t_len, int d, Rng& rng) {
    Window w(t_len, d);
    for (int t = 0; t < t_len; ++t) {
        for (int c = 0; c < d; ++c) w(t, c) = rng.next_gaussian();
    }
    return w;
}

// An 8-player fixture: four variable pairs, every group split mid-window.
PlayerFixture eight_player_fixture(std::uint64_t seed) {
    return make_player_fixture({.T = 16, .D = 8, .n_background = 4, .split_groups = 4}, seed);
}

// Test-only sum of two predictors.
class SumPredictor : public Predictor {
public:
    SumPredictor(Predictor& f, Predictor& g) : f_(f), g_(g) {}

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override {
        auto a = f_.evaluate(windows);
        auto b = g_.evaluate(windows);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        return a;
    }

private:
    Predictor& f_;
    Predictor& g_;
};

// Deliberately non-trivial per-call cost so the bench cost model has a
// measurable slope at desk scale.
class SlowLinearPredictor : public Predictor {
public:
    explicit SlowLinearPredictor(Eigen::MatrixXd weights) : weights_(std::move(weights)) {}

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override {
        std::vector<double> out;
        out.reserve(windows.size());
        for (const auto& w : windows) {
            double acc = (weights_.array() * w.array()).sum();
            for (int pass = 1; pass <= 8; ++pass) {
                acc += (w.array() * (0.1 * pass)).tanh().sum();
            }
            out.push_back(acc);
        }
        return out;
    }

private:
    Eigen::MatrixXd weights_;
};

// ---------------------------------------------------------------------------
// CLI helpers
// ---------------------------------------------------------------------------

struct CliResult {
    int exit_code = -1;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    fs::path err_file = scratch / "stderr.txt";
    std::string cmd = std::string(TSATTR_CLI_PATH) + " " + args + " >/dev/null 2>" +
                      err_file.string();
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

fs::path scratch_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() /
                   ("tsattr_acceptance_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json fixture_run_config(std::uint64_t seed) {
    json cfg;
    cfg["run_id"] = "acc";
    cfg["dataset"] = {{"synthetic", {{"kind", "player_fixture"},
                                     {"seed", seed},
                                     {"params", {{"T", 8}, {"D", 3}}}}}};
    cfg["predictor"] = {{"kind", "fixture"}};
    cfg["players"] = {{"scheme", "fixture"}};
    cfg["grouping"] = {{"method", "none"}, {"seed", 11}};
    cfg["segmentation"] = {{"l_min", 2}, {"seed", 12}, {"num_permutations", 20}};
    cfg["attribution"] = {{"m", 5}, {"baseline", "mean"}, {"seed", 13}};
    cfg["evaluation"] = {{"robustness_runs", 3},
                         {"background_subset", 2},
                         {"l_min_values", json::array({2, 3})},
                         {"strategies", json::array({"none"})}};
    cfg["bench"] = {{"methods", json::array({"group_segment", "cell"})},
                    {"budgets", json::array({2, 4})},
                    {"n_samples", 2}};
    cfg["output_dir"] = "out";
    return cfg;
}

// ---------------------------------------------------------------------------
// AC-1: efficiency axiom
// ---------------------------------------------------------------------------

Outcome ac1() {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    const int m_grid[3] = {1, 5, 50};
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        Rng rng(mix_seed(20250808, static_cast<std::uint64_t>(i)));
        const int t_len = 8 + static_cast<int>(rng.next_below(5));
        PlayerSet players = random_players(t_len, rng, 2, 10);
        const int d = players.D;
        Window window = random_window(t_len, d, rng);

        std::shared_ptr<const PlayerSet> shared = std::make_shared<const PlayerSet>(players);
        Eigen::VectorXd mu(d);
        for (int c = 0; c < d; ++c) mu(c) = rng.next_gaussian();
        std::shared_ptr<Predictor> predictor;
        switch (i % 3) {
            case 0:
                predictor = std::make_shared<LinearPredictor>(random_window(t_len, d, rng));
                break;
            case 1: {
                Eigen::VectorXd w(players.size());
                for (int p = 0; p < players.size(); ++p) w(p) = rng.next_gaussian();
                predictor = std::make_shared<PlayerAdditivePredictor>(w, shared, mu);
                break;
            }
            default: {
                Eigen::VectorXd w(players.size());
                for (int p = 0; p < players.size(); ++p) w(p) = rng.next_gaussian();
                std::vector<PlayerPairTerm> pairs;
                for (int pair = 0; pair < 2; ++pair) {
                    int a = static_cast<int>(
                        rng.next_below(static_cast<std::uint64_t>(players.size())));
                    int b = static_cast<int>(
                        rng.next_below(static_cast<std::uint64_t>(players.size())));
                    pairs.push_back({a, b, rng.next_gaussian()});
                }
                predictor = std::make_shared<PlayerInteractionPredictor>(w, pairs, shared, mu);
                break;
            }
        }

        MaskingMode mode = i % 9 < 3   ? MaskingMode::mean
                           : i % 9 < 6 ? MaskingMode::zero
                                       : MaskingMode::noise;
        std::vector<Window> background{random_window(t_len, d, rng),
                                       random_window(t_len, d, rng)};
        MaskingBaseline baseline = baseline_from_background(mode, background, rng.next_u64());

        AttributionResult r = shapley_permutation(*predictor, window, players, m_grid[i % 3],
                                                  baseline, rng.next_u64());
        worst = std::max(worst, std::abs(r.phi.sum() - (r.f_full - r.f_empty)));
    }
    double elapsed = seconds_since(start);
    if (worst > 1e-9) out.fail("max efficiency residual " + fmt(worst) + " > 1e-9");
    if (elapsed >= 10.0) out.fail("runtime " + fmt(elapsed) + " s >= 10 s");
    out.detail = "max residual " + fmt(worst) + " over 200 fixtures, " + fmt(elapsed) + " s";
    return out;
}

// ---------------------------------------------------------------------------
// AC-2: oracle equivalence
// ---------------------------------------------------------------------------

Outcome ac2() {
    auto start = std::chrono::steady_clock::now();
    Outcome out;

    // Player-additive fixture: sampled values equal the weights for any M.
    double worst_fixture = 0.0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        PlayerFixture fx = make_player_fixture({.T = 8, .D = 3}, seed);
        auto predictor = fixture_predictor(fx);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);
        for (int m : {1, 5, 50}) {
            AttributionResult r = shapley_permutation(*predictor, fx.window, *fx.players, m,
                                                      baseline, seed + m);
            worst_fixture = std::max(worst_fixture, (r.phi - fx.weights).cwiseAbs().maxCoeff());
        }
    }
    if (worst_fixture > 1e-9) {
        out.fail("fixture deviation " + fmt(worst_fixture) + " > 1e-9");
    }

    // Randomized 8-player polynomial predictor against exact enumeration.
    double worst_ratio = 0.0;
    std::vector<double> mean_dev{0.0, 0.0, 0.0};
    const int m_grid[3] = {125, 250, 500};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        PlayerFixture fx = eight_player_fixture(100 + seed);
        Rng rng(mix_seed(42, seed));
        Eigen::VectorXd w(8);
        for (int p = 0; p < 8; ++p) {
            w(p) = (1.0 + 2.0 * rng.next_double()) * (rng.next_double() < 0.5 ? -1.0 : 1.0);
        }
        std::vector<PlayerPairTerm> pairs;
        for (int pair = 0; pair < 4; ++pair) {
            int a = static_cast<int>(rng.next_below(8));
            int b = static_cast<int>(rng.next_below(8));
            pairs.push_back({a, b, 0.6 * rng.next_double() - 0.3});
        }
        PlayerInteractionPredictor predictor(w, pairs, fx.players, fx.mu);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);

        AttributionResult exact = shapley_exact(predictor, fx.window, *fx.players, baseline);
        double range = exact.phi.maxCoeff() - exact.phi.minCoeff();
        for (int g = 0; g < 3; ++g) {
            AttributionResult sampled = shapley_permutation(
                predictor, fx.window, *fx.players, m_grid[g], baseline, seed * 7 + g);
            double dev = (sampled.phi - exact.phi).cwiseAbs().maxCoeff();
            mean_dev[static_cast<std::size_t>(g)] += dev / 20.0;
            if (g == 2) worst_ratio = std::max(worst_ratio, dev / range);
        }
    }
    if (worst_ratio > 0.05) {
        out.fail("M=500 deviation ratio " + fmt(worst_ratio) + " > 0.05");
    }
    if (!(mean_dev[1] <= mean_dev[0] && mean_dev[2] <= mean_dev[1])) {
        out.fail("mean deviation not non-increasing in M: " + fmt(mean_dev[0]) + ", " +
                 fmt(mean_dev[1]) + ", " + fmt(mean_dev[2]));
    }

    double elapsed = seconds_since(start);
    if (elapsed >= 60.0) out.fail("runtime " + fmt(elapsed) + " s >= 60 s");
    out.detail = "fixture dev " + fmt(worst_fixture) + ", M=500 ratio " + fmt(worst_ratio) +
                 ", mean devs " + fmt(mean_dev[0]) + "/" + fmt(mean_dev[1]) + "/" +
                 fmt(mean_dev[2]) + ", " + fmt(elapsed) + " s";
    return out;
}

// ---------------------------------------------------------------------------
// AC-3: axioms
// ---------------------------------------------------------------------------

Outcome ac3() {
    Outcome out;

    // Dummy: a zero-weight player gets exactly zero under both estimators.
    {
        PlayerFixture fx = make_player_fixture({.T = 8, .D = 3}, 31);
        Eigen::VectorXd w(3);
        w << 3.0, 0.0, -2.0;
        PlayerAdditivePredictor predictor(w, fx.players, fx.mu);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);
        AttributionResult exact = shapley_exact(predictor, fx.window, *fx.players, baseline);
        AttributionResult sampled =
            shapley_permutation(predictor, fx.window, *fx.players, 9, baseline, 5);
        if (exact.phi(1) != 0.0) out.fail("dummy player non-zero under exact estimator");
        if (sampled.phi(1) != 0.0) out.fail("dummy player non-zero under sampling");
    }

    // Symmetry: interchangeable players receive equal values within 1e-12.
    {
        PlayerFixture fx = make_player_fixture({.T = 8, .D = 2}, 32);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);
        PlayerInteractionPredictor and_game(Eigen::VectorXd::Zero(2), {{0, 1, 1.0}},
                                            fx.players, fx.mu);
        AttributionResult r = shapley_exact(and_game, fx.window, *fx.players, baseline);
        if (std::abs(r.phi(0) - 0.5) > 1e-12 || std::abs(r.phi(1) - 0.5) > 1e-12) {
            out.fail("AND game values deviate from (0.5, 0.5)");
        }
        Eigen::VectorXd equal_w = Eigen::VectorXd::Constant(2, 1.25);
        PlayerAdditivePredictor twin(equal_w, fx.players, fx.mu);
        AttributionResult tr = shapley_exact(twin, fx.window, *fx.players, baseline);
        if (std::abs(tr.phi(0) - tr.phi(1)) > 1e-12) out.fail("symmetric players differ");
    }

    // Linearity within 1e-10 on 6-player instances.
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        PlayerFixture fx = make_player_fixture({.T = 12, .D = 5, .split_groups = 3}, 33 + seed);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);
        Rng rng(mix_seed(77, seed));
        Eigen::VectorXd wf(6);
        Eigen::VectorXd wg(6);
        for (int p = 0; p < 6; ++p) {
            wf(p) = rng.next_gaussian();
            wg(p) = rng.next_gaussian();
        }
        PlayerAdditivePredictor f(wf, fx.players, fx.mu);
        PlayerInteractionPredictor g(wg, {{0, 4, 0.8}, {1, 5, -0.5}}, fx.players, fx.mu);
        SumPredictor sum(f, g);
        AttributionResult rf = shapley_exact(f, fx.window, *fx.players, baseline);
        AttributionResult rg = shapley_exact(g, fx.window, *fx.players, baseline);
        AttributionResult rs = shapley_exact(sum, fx.window, *fx.players, baseline);
        worst = std::max(worst, (rs.phi - rf.phi - rg.phi).cwiseAbs().maxCoeff());
    }
    if (worst > 1e-10) out.fail("linearity residual " + fmt(worst) + " > 1e-10");

    out.detail = "dummy exact-zero, symmetry <= 1e-12, linearity residual " + fmt(worst);
    return out;
}

// ---------------------------------------------------------------------------
// AC-4: structure recovery
// ---------------------------------------------------------------------------

Outcome ac4() {
    auto start = std::chrono::steady_clock::now();
    Outcome out;

    int ari_hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        PlantedBlocksParams params;
        params.T = 50;
        params.n_windows = 20;
        params.D = 6;
        params.n_latents = 2;
        PlantedBlocks data = make_planted_blocks(params, 9000 + seed);
        GroupingConfig cfg;
        cfg.seed = 1000 + seed;
        Grouping g = group_features(data.windows, cfg);
        if (std::abs(tsattr::test::adjusted_rand_index(g.groups, data.groups) - 1.0) < 1e-12) {
            ++ari_hits;
        }
    }
    if (ari_hits < 48) {
        out.fail("grouping ARI 1.0 in only " + std::to_string(ari_hits) + "/50 seeds");
    }

    int shift_hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        MeanShiftParams params;
        params.T = 128;
        params.shift_t = 64;
        params.magnitude = 3.0;
        Eigen::MatrixXd block = make_mean_shift(params, 500 + seed).front();
        SegmentationConfig cfg;
        cfg.l_min = 13;  // the 128-step window pairs with minimum length 13
        cfg.seed = 2000 + seed;
        Segmentation seg = segment_group(block, cfg);
        if (seg.segments.size() == 2 && std::abs(seg.segments[0].end - 64) <= 2) ++shift_hits;
    }
    if (shift_hits < 48) {
        out.fail("shift recovery in only " + std::to_string(shift_hits) + "/50 seeds");
    }

    int noise_hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        MeanShiftParams params;
        params.T = 128;
        params.magnitude = 0.0;  // plain i.i.d. noise
        Eigen::MatrixXd block = make_mean_shift(params, 700 + seed).front();
        SegmentationConfig cfg;
        cfg.l_min = 13;
        cfg.seed = 3000 + seed;
        Segmentation seg = segment_group(block, cfg);
        if (seg.segments.size() == 1) ++noise_hits;
    }
    if (noise_hits < 45) {
        out.fail("noise left whole in only " + std::to_string(noise_hits) + "/50 seeds");
    }

    double elapsed = seconds_since(start);
    if (elapsed >= 120.0) out.fail("runtime " + fmt(elapsed) + " s >= 120 s");
    out.detail = "ARI " + std::to_string(ari_hits) + "/50, shift " + std::to_string(shift_hits) +
                 "/50, noise " + std::to_string(noise_hits) + "/50, " + fmt(elapsed) + " s";
    return out;
}

// ---------------------------------------------------------------------------
// AC-5: faithfulness ordering
// ---------------------------------------------------------------------------

Outcome ac5() {
    Outcome out;

    // Exact-phi importance maps dominate uniform-random maps by >= 2x.
    double auc_exact_sum = 0.0;
    double auc_random_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        PlayerFixture fx = make_player_fixture({.T = 8, .D = 3}, 5000 + seed);
        auto predictor = fixture_predictor(fx);
        MaskingBaseline baseline = baseline_from_background(MaskingMode::mean, fx.background);
        AttributionResult exact = shapley_exact(*predictor, fx.window, *fx.players, baseline);
        ImportanceMap map = project_to_cells(exact, *fx.players);
        auto fractions = default_fractions();
        auc_exact_sum +=
            delta_auc(deletion_curve(*predictor, fx.window, map, fractions, baseline));

        Rng rng(mix_seed(31337, seed));
        Eigen::MatrixXd noise_map(8, 3);
        for (int t = 0; t < 8; ++t) {
            for (int d = 0; d < 3; ++d) noise_map(t, d) = rng.next_double();
        }
        auc_random_sum += delta_auc(
            deletion_curve(*predictor, fx.window, {noise_map}, fractions, baseline));
    }
    if (!(auc_exact_sum >= 2.0 * auc_random_sum)) {
        out.fail("exact-map AUC " + fmt(auc_exact_sum / 20) + " < 2x random-map AUC " +
                 fmt(auc_random_sum / 20));
    }

    // HSIC grouping beats random grouping on the planted synthetic. The
    // predictor responds to the two latent groups with opposite signs, so
    // players that mix variables across groups cancel their own evidence.
    double auc_hsic = 0.0;
    double auc_random_grouping = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        PlantedBlocksParams params;
        params.T = 32;
        params.n_windows = 8;
        params.D = 6;
        params.n_latents = 2;
        PlantedBlocks data = make_planted_blocks(params, 6000 + seed);

        Grouping truth;
        truth.groups = data.groups;
        Segmentation whole;
        whole.segments = {{1, 33}};
        std::vector<Segmentation> segs(2, whole);
        segs[0].group_index = 0;
        segs[1].group_index = 1;
        auto true_players =
            std::make_shared<const PlayerSet>(build_players(truth, segs, 32, 6));
        MaskingBaseline stats = baseline_from_background(MaskingMode::mean, data.windows);
        Eigen::VectorXd weights(2);
        weights << 4.0, -3.0;
        PlayerAdditivePredictor predictor(weights, true_players, stats.mu);

        // Explained window: the background mean plus a unit bump everywhere,
        // so every player's mean feature is exactly one.
        Window bump(32, 6);
        bump.rowwise() = stats.mu.transpose();
        bump.array() += 1.0;

        PipelineConfig pc;
        pc.grouping.seed = 100 + seed;
        pc.segmentation.l_min = 8;
        pc.segmentation.num_permutations = 50;
        pc.segmentation.seed = 200 + seed;
        pc.attribution_m = 20;
        pc.attribution_seed = 300 + seed;

        std::span<const Window> explained(&bump, 1);
        std::vector<GroupingMethod> strategies{GroupingMethod::hsic, GroupingMethod::random};
        auto table = grouping_comparison(predictor, data.windows, explained, strategies, pc);
        auc_hsic += table[0].delta_auc_value;
        auc_random_grouping += table[1].delta_auc_value;
    }
    if (!(auc_hsic > auc_random_grouping)) {
        out.fail("mean AUC hsic " + fmt(auc_hsic / 20) + " <= random " +
                 fmt(auc_random_grouping / 20));
    }

    out.detail = "map ratio " + fmt(auc_exact_sum / std::max(auc_random_sum, 1e-300)) +
                 "x, grouping AUC " + fmt(auc_hsic / 20) + " vs " +
                 fmt(auc_random_grouping / 20);
    return out;
}

// ---------------------------------------------------------------------------
// AC-6: sensitivity protocol
// ---------------------------------------------------------------------------

// Closed-form deletion oracle for the T=8, D=3 player fixture explained with
// per-variable players: per-cell deltas are w_owner/8 under mean masking and
// w_owner*(1+mu_d)/8 under zero masking.
double ac6_oracle_auc(const PlayerFixture& fx, bool zero_mode) {
    const int t_len = 8;
    const int d_len = 3;
    const int mid = t_len / 2 + 1;
    auto owner_weight = [&](int t, int d) {
        if (d <= 2) return t < mid ? fx.weights(0) : fx.weights(1);
        return fx.weights(2);
    };
    auto cell_delta = [&](int t, int d) {
        return zero_mode ? owner_weight(t, d) * (1.0 + fx.mu(d - 1)) / 8.0
                         : owner_weight(t, d) / 8.0;
    };

    // Per-variable players: phi_q sums the column's deltas, the projected map
    // value is phi_q / 8.
    std::vector<double> column_phi(static_cast<std::size_t>(d_len), 0.0);
    for (int d = 1; d <= d_len; ++d) {
        for (int t = 1; t <= t_len; ++t) {
            column_phi[static_cast<std::size_t>(d - 1)] += cell_delta(t, d);
        }
    }

    struct Cell {
        double map_value;
        double delta;
        int row_major;
    };
    std::vector<Cell> cells;
    for (int t = 1; t <= t_len; ++t) {
        for (int d = 1; d <= d_len; ++d) {
            cells.push_back({column_phi[static_cast<std::size_t>(d - 1)] / 8.0,
                             cell_delta(t, d), (t - 1) * d_len + (d - 1)});
        }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.map_value != b.map_value) return a.map_value > b.map_value;
        return a.row_major < b.row_major;
    });

    auto fractions = default_fractions();
    std::vector<double> delta_loss;
    for (double f : fractions) {
        int k = static_cast<int>(std::floor(f * t_len * d_len));
        double drop = 0.0;
        for (int i = 0; i < k; ++i) drop += cells[static_cast<std::size_t>(i)].delta;
        delta_loss.push_back(drop * drop);
    }
    double area = 0.0;
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        area += 0.5 * (delta_loss[i] + delta_loss[i - 1]) * (fractions[i] - fractions[i - 1]);
    }
    return area;
}

Outcome ac6() {
    Outcome out;

    PlayerFixture fx = make_player_fixture({.T = 8, .D = 3}, 777);
    auto predictor = fixture_predictor(fx);
    PipelineConfig pc;
    pc.grouping_method = GroupingMethod::none;
    pc.grouping.seed = 1;
    pc.segmentation.l_min = 2;
    pc.segmentation.num_permutations = 20;
    pc.segmentation.seed = 2;
    pc.attribution_m = 5;
    pc.attribution_seed = 3;

    // Masking-baseline sweep: 3 rows of (delta AUC, delta loss at 0.60).
    std::vector<std::string> modes{"mean", "zero", "noise"};
    auto masking = sensitivity_sweep(*predictor, fx.background, fx.window,
                                     SensitivityAxis::masking_mode, modes, pc);
    if (masking.size() != 3) out.fail("masking sweep rows != 3");
    auto masking_again = sensitivity_sweep(*predictor, fx.background, fx.window,
                                           SensitivityAxis::masking_mode, modes, pc);
    for (std::size_t i = 0; i < masking.size(); ++i) {
        if (masking[i].delta_auc_value != masking_again[i].delta_auc_value ||
            masking[i].delta_loss_at_060 != masking_again[i].delta_loss_at_060) {
            out.fail("masking sweep not deterministic");
            break;
        }
    }

    // Minimum-segment-length sweep: 6 rows.
    PlayerFixture wide = make_player_fixture({.T = 32, .D = 4}, 778);
    auto wide_predictor = fixture_predictor(wide);
    std::vector<std::string> lmins{"4", "6", "8", "10", "12", "16"};
    auto lmin_rows = sensitivity_sweep(*wide_predictor, wide.background, wide.window,
                                       SensitivityAxis::l_min, lmins, pc);
    if (lmin_rows.size() != 6) out.fail("l_min sweep rows != 6");
    auto lmin_again = sensitivity_sweep(*wide_predictor, wide.background, wide.window,
                                        SensitivityAxis::l_min, lmins, pc);
    for (std::size_t i = 0; i < lmin_rows.size(); ++i) {
        if (lmin_rows[i].delta_auc_value != lmin_again[i].delta_auc_value) {
            out.fail("l_min sweep not deterministic");
            break;
        }
    }

    // Mean vs zero masking: engine values against the hand-computed oracle.
    // Mean masking nullifies masked terms exactly; zero masking leaves a
    // -mu_d residue per cell, so the two AUCs must differ, in the direction
    // the oracle computes.
    double oracle_mean = ac6_oracle_auc(fx, false);
    double oracle_zero = ac6_oracle_auc(fx, true);
    double engine_mean = masking[0].delta_auc_value;
    double engine_zero = masking[1].delta_auc_value;
    if (std::abs(engine_mean - oracle_mean) > 1e-9) {
        out.fail("mean-mode AUC " + fmt(engine_mean) + " != oracle " + fmt(oracle_mean));
    }
    if (std::abs(engine_zero - oracle_zero) > 1e-9) {
        out.fail("zero-mode AUC " + fmt(engine_zero) + " != oracle " + fmt(oracle_zero));
    }
    if (oracle_zero == oracle_mean) out.fail("oracle gives equal mean/zero AUC");
    if (engine_zero == engine_mean) out.fail("engine gives equal mean/zero AUC");
    if ((engine_zero > engine_mean) != (oracle_zero > oracle_mean)) {
        out.fail("engine direction disagrees with the oracle");
    }

    out.detail = "mean AUC " + fmt(engine_mean) + ", zero AUC " + fmt(engine_zero) +
                 " (oracle " + fmt(oracle_mean) + ", " + fmt(oracle_zero) + ")";
    return out;
}

// ---------------------------------------------------------------------------
// AC-7: runtime protocol
// ---------------------------------------------------------------------------

Outcome ac7() {
    Outcome out;

    PlantedBlocksParams params;
    params.T = 48;
    params.n_windows = 30;
    params.D = 6;
    params.n_latents = 2;
    PlantedBlocks data = make_planted_blocks(params, 8080);

    SlowLinearPredictor predictor(Eigen::MatrixXd::Ones(48, 6));

    PipelineConfig pc;
    pc.grouping.seed = 1;
    pc.segmentation.l_min = 8;
    pc.segmentation.num_permutations = 25;
    pc.segmentation.seed = 2;
    pc.attribution_seed = 3;

    BenchSchemeParams scheme;
    scheme.grouping = group_features(data.windows, pc.grouping);

    std::vector<PlayerScheme> methods{PlayerScheme::group_segment, PlayerScheme::cell};
    std::vector<int> budgets{10, 20, 30, 50};
    auto records = runtime_bench(predictor, data.windows, methods, budgets, 30, pc, scheme);
    if (records.size() != 8) out.fail("expected 8 bench records");

    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            const BenchRecord& r = records[m * budgets.size() + b];
            x.push_back(r.calls_mean);
            y.push_back(r.mean_seconds);
            if (b > 0 && r.mean_seconds < records[m * budgets.size() + b - 1].mean_seconds) {
                out.fail(r.method_tag + " mean runtime not monotone at M=" +
                         std::to_string(r.budget_m));
            }
        }
        double r2 = linear_fit_r2(x, y);
        if (r2 < 0.95) {
            out.fail(records[m * budgets.size()].method_tag + " cost-model R^2 " + fmt(r2) +
                     " < 0.95");
        } else {
            out.detail += records[m * budgets.size()].method_tag + " R^2 " + fmt(r2) + "; ";
        }
    }

    // Exact call counting: fewer calls for group-segment players at equal M.
    for (std::size_t b = 0; b < budgets.size(); ++b) {
        const BenchRecord& gs = records[b];
        const BenchRecord& cell = records[budgets.size() + b];
        if (cell.calls_min != cell.calls_max ||
            cell.calls_min != static_cast<long long>(cell.budget_m) * (48 * 6 + 1)) {
            out.fail("cell scheme call count mismatch at M=" + std::to_string(cell.budget_m));
        }
        if (!(gs.calls_max < cell.calls_min)) {
            out.fail("group-segment calls not below cell calls at M=" +
                     std::to_string(gs.budget_m));
        }
    }

    out.detail += "gs calls " + fmt(records[0].calls_mean) + ".." + fmt(records[3].calls_mean) +
                  ", cell calls " + fmt(records[4].calls_mean) + ".." +
                  fmt(records[7].calls_mean);
    return out;
}

// ---------------------------------------------------------------------------
// AC-8: determinism and formats
// ---------------------------------------------------------------------------

Outcome ac8() {
    Outcome out;
    fs::path dir = scratch_dir("ac8");
    std::ofstream(dir / "config.json") << fixture_run_config(77).dump(2);

    auto artifacts = [&](const fs::path& out_dir) {
        std::vector<fs::path> files;
        if (fs::exists(out_dir)) {
            for (const auto& entry : fs::directory_iterator(out_dir)) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    };

    // Every subcommand runs twice; artifacts must be byte-identical. The
    // measured seconds columns of bench are physical and checked structurally.
    for (const std::string sub : {"group", "segment", "explain", "evaluate"}) {
        fs::path out_a = dir / (sub + "_a");
        fs::path out_b = dir / (sub + "_b");
        CliResult ra = run_cli(sub + " --config " + (dir / "config.json").string() +
                                   " --output-dir " + out_a.string() + " --quiet",
                               dir);
        CliResult rb = run_cli(sub + " --config " + (dir / "config.json").string() +
                                   " --output-dir " + out_b.string() + " --quiet",
                               dir);
        if (ra.exit_code != 0 || rb.exit_code != 0) {
            out.fail(sub + " exited non-zero: " + ra.err + rb.err);
            continue;
        }
        auto files_a = artifacts(out_a);
        auto files_b = artifacts(out_b);
        if (files_a.empty() || files_a.size() != files_b.size()) {
            out.fail(sub + " artifact sets differ");
            continue;
        }
        for (std::size_t i = 0; i < files_a.size(); ++i) {
            std::string text_a = read_text_file(files_a[i]);
            std::string text_b = read_text_file(files_b[i]);
            if (text_a != text_b) {
                out.fail(sub + " artifact not byte-reproducible: " +
                         files_a[i].filename().string());
            }
            if (files_a[i].extension() == ".json") {
                if (json::parse(text_a).dump(2) + "\n" != text_a) {
                    out.fail(sub + " JSON artifact does not round-trip: " +
                             files_a[i].filename().string());
                }
            }
        }
    }

    // synth is byte-reproducible per seed.
    {
        CliResult ra = run_cli("synth --kind planted_blocks --out " + (dir / "ds_a").string() +
                                   " --seed 5 --quiet",
                               dir);
        CliResult rb = run_cli("synth --kind planted_blocks --out " + (dir / "ds_b").string() +
                                   " --seed 5 --quiet",
                               dir);
        if (ra.exit_code != 0 || rb.exit_code != 0) {
            out.fail("synth exited non-zero");
        } else {
            for (const auto& entry : fs::directory_iterator(dir / "ds_a")) {
                if (read_text_file(entry.path()) !=
                    read_text_file(dir / "ds_b" / entry.path().filename())) {
                    out.fail("synth artifact not byte-reproducible: " +
                             entry.path().filename().string());
                }
            }
        }
    }

    // bench: deterministic fields are stable across reruns.
    {
        fs::path out_a = dir / "bench_a";
        fs::path out_b = dir / "bench_b";
        CliResult ra = run_cli("bench --config " + (dir / "config.json").string() +
                                   " --output-dir " + out_a.string() + " --quiet",
                               dir);
        CliResult rb = run_cli("bench --config " + (dir / "config.json").string() +
                                   " --output-dir " + out_b.string() + " --quiet",
                               dir);
        if (ra.exit_code != 0 || rb.exit_code != 0) {
            out.fail("bench exited non-zero: " + ra.err + rb.err);
        } else {
            json a = json::parse(read_text_file(out_a / "acc_bench.json"));
            json b = json::parse(read_text_file(out_b / "acc_bench.json"));
            if (a.size() != b.size()) out.fail("bench record counts differ");
            for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
                for (const char* key : {"method", "M", "n_samples", "calls_mean", "calls_min",
                                        "calls_max", "n_players"}) {
                    if (a[i].at(key) != b[i].at(key)) {
                        out.fail(std::string("bench deterministic field differs: ") + key);
                    }
                }
            }
        }
    }

    // Structured round-trips through the typed parsers.
    {
        fs::path out_dir = dir / "explain_a";
        std::string grouping_text = read_text_file(dir / "group_a" / "acc_grouping.json");
        if (grouping_to_json(grouping_from_json(grouping_text)) != grouping_text) {
            out.fail("grouping JSON does not round-trip through the parser");
        }
        std::string players_text = read_text_file(out_dir / "acc_players.json");
        if (player_set_to_json(player_set_from_json(players_text)) != players_text) {
            out.fail("players JSON does not round-trip through the parser");
        }
        std::string attr_text = read_text_file(out_dir / "acc_attribution.json");
        if (attribution_to_json(attribution_from_json(attr_text)) != attr_text) {
            out.fail("attribution JSON does not round-trip through the parser");
        }
    }

    // External-predictor protocol conformance against the echo-sum child.
    {
        {
            ExternalPredictorOptions opts;
            opts.command = {ECHO_SUM_CHILD_PATH};
            ExternalPredictor f(opts);
            if (f.evaluate_one(Window::Ones(2, 2)) != 4.0) {
                out.fail("echo-sum child returned a wrong sum");
            }
            std::vector<Window> batch{Window::Constant(2, 2, 1.0), Window::Constant(2, 2, 2.0)};
            auto outputs = f.evaluate(batch);
            if (outputs != std::vector<double>{4.0, 8.0}) out.fail("batch order violated");
            if (!f.evaluate(std::vector<Window>{}).empty()) out.fail("empty batch mishandled");
        }
        {
            ExternalPredictorOptions opts;
            opts.command = {ECHO_SUM_CHILD_PATH, "--malformed-after", "1"};
            ExternalPredictor f(opts);
            try {
                f.evaluate_one(Window::Ones(1, 1));
                out.fail("malformed reply not rejected");
            } catch (const std::runtime_error& e) {
                if (std::string(e.what()).find("this is not json") == std::string::npos) {
                    out.fail("malformed reply error lacks the offending line");
                }
            }
        }
        {
            ExternalPredictorOptions opts;
            opts.command = {ECHO_SUM_CHILD_PATH, "--sleep-ms", "2000"};
            opts.timeout_seconds = 0.2;
            ExternalPredictor f(opts);
            try {
                f.evaluate_one(Window::Ones(1, 1));
                out.fail("timeout not enforced");
            } catch (const std::runtime_error& e) {
                if (std::string(e.what()).find("timeout") == std::string::npos) {
                    out.fail("timeout error has the wrong shape");
                }
            }
        }
        {
            ExternalPredictorOptions opts;
            opts.command = {ECHO_SUM_CHILD_PATH, "--wrong-id"};
            ExternalPredictor f(opts);
            try {
                f.evaluate_one(Window::Ones(1, 1));
                out.fail("id mismatch not rejected");
            } catch (const std::runtime_error&) {
            }
        }
        {
            ExternalPredictorOptions opts;
            opts.command = {ECHO_SUM_CHILD_PATH, "--exit-after", "1"};
            ExternalPredictor f(opts);
            if (f.evaluate_one(Window::Ones(2, 2)) != 4.0 ||
                f.evaluate_one(Window::Ones(2, 2)) != 4.0) {
                out.fail("restart-once policy failed");
            }
        }
    }

    if (out.detail.empty()) {
        out.detail = "subcommands byte-stable, JSON round-trips, protocol conformance clean";
    }
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        const char* label;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"AC-1", "efficiency axiom", ac1},
        {"AC-2", "oracle equivalence", ac2},
        {"AC-3", "Shapley axioms", ac3},
        {"AC-4", "structure recovery", ac4},
        {"AC-5", "faithfulness ordering", ac5},
        {"AC-6", "sensitivity protocol", ac6},
        {"AC-7", "runtime protocol", ac7},
        {"AC-8", "determinism and formats", ac8},
    };

    bool all_pass = true;
    for (const auto& c : criteria) {
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %s: %s (%s)\n", c.name, c.label, out.pass ? "PASS" : "FAIL",
                    out.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && out.pass;
    }
    return all_pass ? 0 : 1;
}
