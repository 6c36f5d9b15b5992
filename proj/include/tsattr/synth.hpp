#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "tsattr/grouping.hpp"
#include "tsattr/players.hpp"
#include "tsattr/predictors.hpp"
#include "tsattr/types.hpp"

namespace tsattr {

// Variables driven by independent latent factors, one latent per planted
// group. Recovering the plant is the grouping ground truth.
struct PlantedBlocksParams {
    int T = 50;
    int n_windows = 20;
    int D = 6;
    int n_latents = 2;
    double noise = 0.3;
};

struct PlantedBlocks {
    std::vector<Window> windows;
    std::vector<std::vector<int>> groups;  // 1-based variable indices per latent
};

PlantedBlocks make_planted_blocks(const PlantedBlocksParams& params, std::uint64_t seed);

// Gaussian noise with one mean step of `magnitude` standard deviations at
// shift_t (magnitude 0 gives plain i.i.d. noise).
struct MeanShiftParams {
    int T = 128;
    int D = 1;
    int n_windows = 1;
    int shift_t = 64;       // 1-based first time step of the shifted regime
    double magnitude = 3.0; // in units of noise_sigma
    double noise_sigma = 1.0;
};

std::vector<Window> make_mean_shift(const MeanShiftParams& params, std::uint64_t seed);

// A window set plus a player-additive predictor with known weights: the
// background columns are constant at mu, the explained window sits exactly
// one unit above it, and every player's mean feature is 1, so the exact
// Shapley values equal the weights under mean masking.
struct PlayerFixtureParams {
    int T = 8;
    int D = 3;
    int n_background = 4;
    int split_groups = 1;  // leading groups that get a mid-window segment split
};

struct PlayerFixture {
    std::vector<Window> background;
    Window window;
    Grouping grouping;
    std::shared_ptr<const PlayerSet> players;
    Eigen::VectorXd weights;
    Eigen::VectorXd mu;
};

PlayerFixture make_player_fixture(const PlayerFixtureParams& params, std::uint64_t seed);

std::shared_ptr<PlayerAdditivePredictor> fixture_predictor(const PlayerFixture& fixture);

// Writes a generated dataset (window CSVs + manifest, plus the plant record
// or fixture predictor spec) under `dir`. Byte-identical for equal seeds.
void write_planted_blocks(const std::filesystem::path& dir, const PlantedBlocksParams& params,
                          std::uint64_t seed);
void write_mean_shift(const std::filesystem::path& dir, const MeanShiftParams& params,
                      std::uint64_t seed);
void write_player_fixture(const std::filesystem::path& dir, const PlayerFixtureParams& params,
                          std::uint64_t seed);

}  // namespace tsattr
