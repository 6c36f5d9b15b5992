#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsattr/attribution.hpp"
#include "tsattr/evaluation.hpp"
#include "tsattr/grouping.hpp"
#include "tsattr/io.hpp"
#include "tsattr/players.hpp"
#include "tsattr/predictors.hpp"
#include "tsattr/segmentation.hpp"
#include "tsattr/synth.hpp"

namespace tsattr {

// (T, l_min) pairings shipped for the standard window sizes.
struct Preset {
    int T = 0;
    int l_min = 0;
};

std::optional<Preset> lookup_preset(const std::string& name);

struct SyntheticSpec {
    std::string kind;  // planted_blocks | mean_shift | player_fixture
    std::uint64_t seed = 0;
    PlantedBlocksParams planted;
    MeanShiftParams shift;
    PlayerFixtureParams fixture;
};

struct EvaluationSettings {
    std::vector<double> fractions = default_fractions();
    std::string loss_mode = "output_deviation";  // or "label"
    std::string task = "regression";             // label mode: regression | classification
    int explain_index = 0;
    std::vector<GroupingMethod> strategies = {GroupingMethod::hsic, GroupingMethod::random};
    std::vector<int> l_min_values = {4, 6, 8, 10, 12, 16};
    std::vector<std::string> masking_modes = {"mean", "zero", "noise"};
    int robustness_runs = 10;
    int background_subset = 0;  // 0: half of the pool
};

struct BenchSettings {
    std::vector<PlayerScheme> methods = {PlayerScheme::group_segment, PlayerScheme::cell};
    std::vector<int> budgets = {10, 20, 30, 50};
    int n_samples = 30;
};

struct PlayersSettings {
    // Players usually come from a scheme; "fixture" reuses a synthetic
    // player_fixture's own player set and "file" loads a serialized one.
    enum class Source { scheme, fixture, file };
    Source source = Source::scheme;
    PlayerScheme scheme = PlayerScheme::group_segment;
    BaselineSchemeParams params;
    std::filesystem::path file;
};

struct RunConfig {
    std::string run_id = "run";
    std::optional<std::filesystem::path> manifest;
    std::optional<SyntheticSpec> synthetic;
    nlohmann::json predictor;
    GroupingConfig grouping;
    GroupingMethod grouping_method = GroupingMethod::hsic;
    int k_hint = 0;
    SegmentationConfig segmentation;
    int attribution_m = 50;
    MaskingMode baseline_mode = MaskingMode::mean;
    std::uint64_t attribution_seed = 0;
    std::uint64_t noise_seed = 0;
    PlayersSettings players;
    EvaluationSettings evaluation;
    BenchSettings bench;
    std::filesystem::path output_dir;
    std::filesystem::path base_dir;  // config file's directory
};

struct ConfigOverrides {
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed_override;  // replaces every section seed
    std::optional<std::string> preset;           // replaces segmentation.l_min
};

// Parses and validates a run config. Seeds have no entropy defaults: the
// grouping, segmentation and attribution sections must each carry one.
RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides);

// Materializes the configured dataset (manifest load or seeded generation).
Dataset resolve_dataset(const RunConfig& config);

// Builds the configured predictor. The fixture kind regenerates the
// player-additive predictor of a synthetic player_fixture dataset.
std::shared_ptr<Predictor> make_predictor(const RunConfig& config, const Dataset& dataset);

// The pipeline settings shared by explain / evaluate / bench.
PipelineConfig pipeline_config(const RunConfig& config);

}  // namespace tsattr
