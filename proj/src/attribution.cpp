#include "tsattr/attribution.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

void restore_player(Window& masked, const Window& original, const Player& p) {
    for (int t = p.segment.start; t < p.segment.end; ++t) {
        for (int d : p.variables) {
            masked(t - 1, d - 1) = original(t - 1, d - 1);
        }
    }
}

void check_shapes(const Window& window, const PlayerSet& ps, const MaskingBaseline& baseline) {
    if (window.rows() != ps.T || window.cols() != ps.D) {
        throw std::invalid_argument("attribution: window shape does not match player set");
    }
    if (baseline.mode != MaskingMode::zero && baseline.mu.size() != ps.D) {
        throw std::invalid_argument("attribution: baseline mu length mismatch");
    }
    if (baseline.mode == MaskingMode::noise && baseline.sigma.size() != ps.D) {
        throw std::invalid_argument("attribution: baseline sigma length mismatch");
    }
}

}  // namespace

std::string to_string(MaskingMode m) {
    switch (m) {
        case MaskingMode::mean: return "mean";
        case MaskingMode::zero: return "zero";
        case MaskingMode::noise: return "noise";
    }
    throw std::logic_error("unknown masking mode");
}

MaskingMode masking_mode_from_string(const std::string& s) {
    if (s == "mean") return MaskingMode::mean;
    if (s == "zero") return MaskingMode::zero;
    if (s == "noise") return MaskingMode::noise;
    throw std::invalid_argument("unknown masking mode: " + s);
}

MaskingBaseline baseline_from_background(MaskingMode mode, std::span<const Window> background,
                                         std::uint64_t seed) {
    if (background.empty()) {
        throw std::invalid_argument("baseline_from_background: empty background set");
    }
    const Eigen::Index d = background.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
    long long count = 0;
    for (const auto& w : background) {
        if (w.cols() != d) {
            throw std::invalid_argument("baseline_from_background: variable count mismatch");
        }
        sum += w.colwise().sum().transpose();
        sum_sq += w.array().square().colwise().sum().matrix().transpose();
        count += w.rows();
    }
    MaskingBaseline b;
    b.mode = mode;
    b.seed = seed;
    b.mu = sum / static_cast<double>(count);
    b.sigma = (sum_sq / static_cast<double>(count) - b.mu.array().square().matrix())
                  .cwiseMax(0.0)
                  .cwiseSqrt();
    return b;
}

Window baseline_window(const MaskingBaseline& baseline, int T, int D) {
    switch (baseline.mode) {
        case MaskingMode::zero:
            return Window::Zero(T, D);
        case MaskingMode::mean: {
            Window w(T, D);
            w.rowwise() = baseline.mu.transpose();
            return w;
        }
        case MaskingMode::noise: {
            Window w(T, D);
            for (int t = 1; t <= T; ++t) {
                for (int d = 1; d <= D; ++d) {
                    std::uint64_t key = mix_seed(
                        mix_seed(baseline.seed, static_cast<std::uint64_t>(t)),
                        static_cast<std::uint64_t>(d));
                    w(t - 1, d - 1) =
                        baseline.mu(d - 1) + baseline.sigma(d - 1) * keyed_gaussian(key);
                }
            }
            return w;
        }
    }
    throw std::logic_error("unknown masking mode");
}

Window mask(const Window& window, const Coalition& coalition, const PlayerSet& player_set,
            const MaskingBaseline& baseline) {
    check_shapes(window, player_set, baseline);
    if (static_cast<int>(coalition.bits.size()) != player_set.size()) {
        throw std::invalid_argument("mask: coalition length does not match player count");
    }
    Window masked = baseline_window(baseline, player_set.T, player_set.D);
    for (const auto& p : player_set.players) {
        if (coalition.bits[static_cast<std::size_t>(p.id)]) {
            restore_player(masked, window, p);
        }
    }
    return masked;
}

double marginal_contribution(Predictor& predictor, const Window& window, int player,
                             const Coalition& preceding, const PlayerSet& player_set,
                             const MaskingBaseline& baseline) {
    if (player < 0 || player >= player_set.size()) {
        throw std::invalid_argument("marginal_contribution: player id out of range");
    }
    if (preceding.bits[static_cast<std::size_t>(player)]) {
        throw std::invalid_argument("marginal_contribution: player already in coalition");
    }
    Window without = mask(window, preceding, player_set, baseline);
    Window with = without;
    restore_player(with, window, player_set.players[static_cast<std::size_t>(player)]);
    std::vector<Window> batch{std::move(without), std::move(with)};
    auto outputs = predictor.evaluate(batch);
    return outputs[1] - outputs[0];
}

AttributionResult shapley_permutation(Predictor& predictor, const Window& window,
                                      const PlayerSet& player_set, int m,
                                      const MaskingBaseline& baseline, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("shapley_permutation: M must be >= 1");
    check_shapes(window, player_set, baseline);

    const int n = player_set.size();
    const Window empty = baseline_window(baseline, player_set.T, player_set.D);

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    double f_full = 0.0;
    double f_empty = 0.0;

    std::vector<Window> batch;
    batch.reserve(static_cast<std::size_t>(n) + 1);
    for (int perm = 0; perm < m; ++perm) {
        // Independent sub-stream per permutation index.
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(perm)));
        auto order = random_permutation(n, rng);

        batch.clear();
        batch.push_back(empty);
        Window current = empty;
        for (int idx : order) {
            restore_player(current, window, player_set.players[static_cast<std::size_t>(idx)]);
            batch.push_back(current);
        }
        auto outputs = predictor.evaluate(batch);
        for (int i = 0; i < n; ++i) {
            phi(order[static_cast<std::size_t>(i)]) +=
                outputs[static_cast<std::size_t>(i) + 1] - outputs[static_cast<std::size_t>(i)];
        }
        if (perm == 0) {
            f_empty = outputs.front();
            f_full = outputs.back();
        }
    }
    phi /= static_cast<double>(m);

    AttributionResult r;
    r.phi = std::move(phi);
    r.m_used = m;
    r.f_full = f_full;
    r.f_empty = f_empty;
    r.baseline_mode = baseline.mode;
    r.seed = seed;
    return r;
}

AttributionResult shapley_exact(Predictor& predictor, const Window& window,
                                const PlayerSet& player_set, const MaskingBaseline& baseline) {
    const int n = player_set.size();
    if (n > 20) {
        throw std::invalid_argument("shapley_exact: player set too large (|P| > 20)");
    }
    check_shapes(window, player_set, baseline);

    const std::size_t n_coalitions = std::size_t{1} << n;
    const Window empty = baseline_window(baseline, player_set.T, player_set.D);

    // All coalition values, evaluated in batches.
    std::vector<double> value(n_coalitions);
    constexpr std::size_t kBatch = 256;
    std::vector<Window> batch;
    batch.reserve(kBatch);
    std::size_t base = 0;
    for (std::size_t s = 0; s < n_coalitions; ++s) {
        Window w = empty;
        for (int p = 0; p < n; ++p) {
            if (s & (std::size_t{1} << p)) {
                restore_player(w, window, player_set.players[static_cast<std::size_t>(p)]);
            }
        }
        batch.push_back(std::move(w));
        if (batch.size() == kBatch || s + 1 == n_coalitions) {
            auto outputs = predictor.evaluate(batch);
            for (std::size_t i = 0; i < outputs.size(); ++i) value[base + i] = outputs[i];
            base += batch.size();
            batch.clear();
        }
    }

    // w(s) = s! (n-1-s)! / n! = 1 / (n * C(n-1, s)).
    std::vector<double> weight(static_cast<std::size_t>(n));
    double binom = 1.0;
    for (int s = 0; s < n; ++s) {
        if (s > 0) binom = binom * (n - s) / s;
        weight[static_cast<std::size_t>(s)] = 1.0 / (n * binom);
    }

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    for (std::size_t s = 0; s < n_coalitions; ++s) {
        const int size = std::popcount(s);
        for (int p = 0; p < n; ++p) {
            const std::size_t bit = std::size_t{1} << p;
            if (s & bit) continue;
            phi(p) += weight[static_cast<std::size_t>(size)] * (value[s | bit] - value[s]);
        }
    }

    AttributionResult r;
    r.phi = std::move(phi);
    r.m_used = 0;
    r.f_full = value[n_coalitions - 1];
    r.f_empty = value[0];
    r.baseline_mode = baseline.mode;
    r.seed = 0;
    return r;
}

std::string attribution_to_json(const AttributionResult& r) {
    nlohmann::json j;
    j["phi"] = std::vector<double>(r.phi.data(), r.phi.data() + r.phi.size());
    j["M"] = r.m_used;
    j["f_full"] = r.f_full;
    j["f_empty"] = r.f_empty;
    j["baseline"] = {{"mode", to_string(r.baseline_mode)}};
    j["players_ref"] = r.players_ref;
    j["seed"] = r.seed;
    return j.dump(2) + "\n";
}

AttributionResult attribution_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    AttributionResult r;
    auto phi = j.at("phi").get<std::vector<double>>();
    r.phi = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
    r.m_used = j.at("M").get<int>();
    r.f_full = j.at("f_full").get<double>();
    r.f_empty = j.at("f_empty").get<double>();
    r.baseline_mode = masking_mode_from_string(j.at("baseline").at("mode").get<std::string>());
    r.players_ref = j.at("players_ref").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

}  // namespace tsattr
