#include "tsattr/synth.hpp"

#include <stdexcept>

#include <json.hpp>

#include "tsattr/io.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace fs = std::filesystem;

PlantedBlocks make_planted_blocks(const PlantedBlocksParams& params, std::uint64_t seed) {
    if (params.D < params.n_latents || params.n_latents < 1) {
        throw std::invalid_argument("planted_blocks: need D >= n_latents >= 1");
    }
    if (params.T < 1 || params.n_windows < 1) {
        throw std::invalid_argument("planted_blocks: need T >= 1 and n_windows >= 1");
    }

    PlantedBlocks out;
    out.groups.resize(static_cast<std::size_t>(params.n_latents));
    std::vector<int> latent_of(static_cast<std::size_t>(params.D));
    for (int d = 0; d < params.D; ++d) {
        int g = d % params.n_latents;  // round-robin keeps group sizes balanced
        latent_of[static_cast<std::size_t>(d)] = g;
        out.groups[static_cast<std::size_t>(g)].push_back(d + 1);
    }

    Rng rng(seed);
    // Per-variable loading on its latent, kept away from zero.
    std::vector<double> loading(static_cast<std::size_t>(params.D));
    for (int d = 0; d < params.D; ++d) {
        double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        loading[static_cast<std::size_t>(d)] = sign * (0.7 + 0.6 * rng.next_double());
    }

    for (int w = 0; w < params.n_windows; ++w) {
        Window window(params.T, params.D);
        for (int t = 0; t < params.T; ++t) {
            Eigen::VectorXd latents(params.n_latents);
            for (int g = 0; g < params.n_latents; ++g) latents(g) = rng.next_gaussian();
            for (int d = 0; d < params.D; ++d) {
                window(t, d) = loading[static_cast<std::size_t>(d)] *
                                   latents(latent_of[static_cast<std::size_t>(d)]) +
                               params.noise * rng.next_gaussian();
            }
        }
        out.windows.push_back(std::move(window));
    }
    return out;
}

std::vector<Window> make_mean_shift(const MeanShiftParams& params, std::uint64_t seed) {
    if (params.T < 1 || params.D < 1 || params.n_windows < 1) {
        throw std::invalid_argument("mean_shift: invalid dimensions");
    }
    if (params.shift_t < 1 || params.shift_t > params.T + 1) {
        throw std::invalid_argument("mean_shift: shift_t outside [1, T+1]");
    }
    Rng rng(seed);
    std::vector<Window> windows;
    windows.reserve(static_cast<std::size_t>(params.n_windows));
    const double step = params.magnitude * params.noise_sigma;
    for (int w = 0; w < params.n_windows; ++w) {
        Window window(params.T, params.D);
        for (int t = 1; t <= params.T; ++t) {
            double level = t >= params.shift_t ? step : 0.0;
            for (int d = 0; d < params.D; ++d) {
                window(t - 1, d) = level + params.noise_sigma * rng.next_gaussian();
            }
        }
        windows.push_back(std::move(window));
    }
    return windows;
}

PlayerFixture make_player_fixture(const PlayerFixtureParams& params, std::uint64_t seed) {
    if (params.T < 8 || params.D < 2 || params.n_background < 1) {
        throw std::invalid_argument("player_fixture: need T >= 8, D >= 2, n_background >= 1");
    }

    PlayerFixture fx;

    // Pairs of variables plus a trailing singleton for odd D.
    fx.grouping.method = GroupingMethod::none;
    fx.grouping.seed = seed;
    for (int d = 1; d <= params.D; d += 2) {
        if (d + 1 <= params.D) {
            fx.grouping.groups.push_back({d, d + 1});
        } else {
            fx.grouping.groups.push_back({d});
        }
    }
    for (int d = 1; d <= params.D; ++d) {
        fx.grouping.variable_names.push_back("x" + std::to_string(d));
    }

    // The leading split_groups groups get a mid-window split, the rest are
    // single-segment.
    const int mid = params.T / 2 + 1;
    std::vector<Segmentation> segmentations;
    for (std::size_t k = 0; k < fx.grouping.groups.size(); ++k) {
        Segmentation seg;
        seg.group_index = static_cast<int>(k);
        if (static_cast<int>(k) < params.split_groups) {
            seg.segments = {{1, mid}, {mid, params.T + 1}};
        } else {
            seg.segments = {{1, params.T + 1}};
        }
        segmentations.push_back(std::move(seg));
    }
    auto players = std::make_shared<PlayerSet>(
        build_players(fx.grouping, segmentations, params.T, params.D));

    fx.mu = Eigen::VectorXd::LinSpaced(params.D, 1.0, static_cast<double>(params.D));

    fx.background.reserve(static_cast<std::size_t>(params.n_background));
    for (int i = 0; i < params.n_background; ++i) {
        Window b(params.T, params.D);
        b.rowwise() = fx.mu.transpose();
        fx.background.push_back(std::move(b));
    }

    // One unit above the background everywhere: every player's mean feature
    // is exactly 1, so exact Shapley values equal the weights.
    fx.window = fx.background.front().array() + 1.0;

    // Distinct magnitudes with alternating signs: a random importance map
    // sees heavy cancellation while the true map does not.
    Rng rng(seed);
    std::vector<double> pool(static_cast<std::size_t>(players->size()));
    for (int i = 0; i < players->size(); ++i) {
        pool[static_cast<std::size_t>(i)] = (i + 1.0) * (i % 2 == 1 ? -1.0 : 1.0);
    }
    shuffle(pool, rng);
    fx.weights = Eigen::Map<const Eigen::VectorXd>(pool.data(),
                                                   static_cast<Eigen::Index>(pool.size()));
    fx.players = std::move(players);
    return fx;
}

std::shared_ptr<PlayerAdditivePredictor> fixture_predictor(const PlayerFixture& fixture) {
    return std::make_shared<PlayerAdditivePredictor>(fixture.weights, fixture.players,
                                                     fixture.mu);
}

namespace {

std::vector<std::string> numbered_names(int d) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(d));
    for (int i = 1; i <= d; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

DatasetManifest write_windows(const fs::path& dir, const std::vector<Window>& windows,
                              const std::vector<std::string>& names, const char* stem) {
    DatasetManifest manifest;
    manifest.variable_names = names;
    manifest.T = static_cast<int>(windows.front().rows());
    manifest.D = static_cast<int>(windows.front().cols());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03zu.csv", stem, i);
        fs::path p = dir / name;
        write_window_csv(p, windows[i], names);
        manifest.windows.push_back(p);
    }
    return manifest;
}

}  // namespace

void write_planted_blocks(const fs::path& dir, const PlantedBlocksParams& params,
                          std::uint64_t seed) {
    PlantedBlocks data = make_planted_blocks(params, seed);
    auto names = numbered_names(params.D);
    DatasetManifest manifest = write_windows(dir, data.windows, names, "window");
    write_manifest(dir / "manifest.json", manifest);

    nlohmann::json plant;
    plant["groups"] = data.groups;
    plant["seed"] = seed;
    atomic_write(dir / "plant.json", plant.dump(2) + "\n");
}

void write_mean_shift(const fs::path& dir, const MeanShiftParams& params, std::uint64_t seed) {
    auto windows = make_mean_shift(params, seed);
    auto names = numbered_names(params.D);
    DatasetManifest manifest = write_windows(dir, windows, names, "window");
    write_manifest(dir / "manifest.json", manifest);

    nlohmann::json info;
    info["shift_t"] = params.shift_t;
    info["magnitude"] = params.magnitude;
    info["noise_sigma"] = params.noise_sigma;
    info["seed"] = seed;
    atomic_write(dir / "shift.json", info.dump(2) + "\n");
}

void write_player_fixture(const fs::path& dir, const PlayerFixtureParams& params,
                          std::uint64_t seed) {
    PlayerFixture fx = make_player_fixture(params, seed);
    auto names = fx.grouping.variable_names;

    DatasetManifest manifest;
    manifest.variable_names = names;
    manifest.T = params.T;
    manifest.D = params.D;
    fs::path window_path = dir / "window_000.csv";
    write_window_csv(window_path, fx.window, names);
    manifest.windows.push_back(window_path);
    for (std::size_t i = 0; i < fx.background.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "background_%03zu.csv", i);
        fs::path p = dir / name;
        write_window_csv(p, fx.background[i], names);
        manifest.background.push_back(p);
    }
    write_manifest(dir / "manifest.json", manifest);

    atomic_write(dir / "players.json", player_set_to_json(*fx.players));

    nlohmann::json predictor;
    predictor["kind"] = "player_additive";
    predictor["weights"] =
        std::vector<double>(fx.weights.data(), fx.weights.data() + fx.weights.size());
    predictor["players"] = "players.json";
    predictor["mu"] = std::vector<double>(fx.mu.data(), fx.mu.data() + fx.mu.size());
    atomic_write(dir / "predictor.json", predictor.dump(2) + "\n");
}

}  // namespace tsattr
