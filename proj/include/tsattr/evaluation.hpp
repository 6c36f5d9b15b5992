#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsattr/attribution.hpp"
#include "tsattr/grouping.hpp"
#include "tsattr/players.hpp"
#include "tsattr/predictors.hpp"
#include "tsattr/segmentation.hpp"
#include "tsattr/types.hpp"

namespace tsattr {

// Cell-level importance at input resolution, same shape as the window.
struct ImportanceMap {
    Eigen::MatrixXd values;
};

// Loss increase as a function of deleted cell fraction. delta_loss is clipped
// at zero and starts at exactly 0.
struct DeletionCurve {
    std::vector<double> fractions;
    std::vector<double> delta_loss;
    std::vector<int> masked_cells;  // exact masked-cell count per fraction
};

enum class LossKind { output_deviation, label_squared, label_nll };

struct LossSpec {
    LossKind kind = LossKind::output_deviation;
    double label = 0.0;
};

// Spreads each player's attribution uniformly over its cells.
ImportanceMap project_to_cells(const AttributionResult& result, const PlayerSet& player_set);

// Deletion protocol: cells ranked by map value descending (ties row-major),
// the top floor(fraction * T * D) cells masked with the baseline per step.
DeletionCurve deletion_curve(Predictor& predictor, const Window& window,
                             const ImportanceMap& map, std::span<const double> fractions,
                             const MaskingBaseline& baseline, const LossSpec& loss = {});

// Trapezoidal area under the delta-loss curve.
double delta_auc(const DeletionCurve& curve);

// The default 0.00 .. 1.00 step 0.05 deletion grid.
std::vector<double> default_fractions();

// Everything a full explanation run needs. The harness operations re-run this
// pipeline while varying exactly one ingredient.
struct PipelineConfig {
    GroupingConfig grouping;
    GroupingMethod grouping_method = GroupingMethod::hsic;
    int random_k_hint = 0;  // 0: reuse the HSIC group count
    SegmentationConfig segmentation;
    int attribution_m = 50;
    MaskingMode masking = MaskingMode::mean;
    std::uint64_t attribution_seed = 0;
    std::uint64_t noise_seed = 0;
    std::vector<double> fractions = default_fractions();
    LossSpec loss;
};

// Grouping + per-group segmentation + players for one window. A precomputed
// grouping short-circuits the grouping stage (the sweeps vary axes that do
// not touch it).
PlayerSet build_pipeline_players(std::span<const Window> background, const Window& window,
                                 const PipelineConfig& config,
                                 std::vector<std::string> variable_names = {},
                                 Grouping* grouping_out = nullptr,
                                 const Grouping* grouping_in = nullptr);

struct StrategyResult {
    GroupingMethod strategy;
    DeletionCurve mean_curve;
    double delta_auc_value = 0.0;
};

// Re-runs the pipeline varying only the grouping strategy; all seeds and
// other settings held fixed. Curves are averaged over the explained windows.
std::vector<StrategyResult> grouping_comparison(Predictor& predictor,
                                                std::span<const Window> background,
                                                std::span<const Window> explained,
                                                std::span<const GroupingMethod> strategies,
                                                const PipelineConfig& config);

struct RobustnessReport {
    // Cosine similarity for every run pair (i < j); nullopt marks pairs where
    // a zero-vector map made the similarity undefined.
    std::vector<std::optional<double>> pairwise;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    int defined_pairs = 0;
};

// Fixes the explained window and player set and varies only the background
// subset feeding the masking statistics; reports the cosine-similarity
// distribution of the resulting cell maps.
RobustnessReport robustness_cosine(Predictor& predictor, const Window& window,
                                   const PlayerSet& player_set,
                                   std::span<const Window> background_pool, int n_runs,
                                   int subset_size, const PipelineConfig& config,
                                   std::uint64_t resample_seed);

enum class SensitivityAxis { l_min, masking_mode };

struct SensitivityRow {
    std::string value;
    double delta_auc_value = 0.0;
    double delta_loss_at_060 = 0.0;
};

// Re-runs the pipeline varying one axis (minimum segment length or masking
// baseline); reports delta-AUC and the delta-loss at deletion fraction 0.60.
std::vector<SensitivityRow> sensitivity_sweep(Predictor& predictor,
                                              std::span<const Window> background,
                                              const Window& window, SensitivityAxis axis,
                                              std::span<const std::string> values,
                                              const PipelineConfig& config);

struct BenchRecord {
    std::string method_tag;
    int budget_m = 0;
    double mean_seconds = 0.0;
    double std_seconds = 0.0;
    int n_samples = 0;
    double calls_mean = 0.0;    // forward calls per sample, averaged
    long long calls_min = 0;    // exact per-sample bounds
    long long calls_max = 0;
    int n_players = 0;          // player count of the last sample
};

struct BenchSchemeParams {
    BaselineSchemeParams baseline;
    Grouping grouping;  // precomputed, reused across samples for group_segment
};

// Wall-clock seconds per sample for each (method, budget M) pair, including
// player construction and masked-sample generation. Runs are serial.
std::vector<BenchRecord> runtime_bench(Predictor& predictor, std::span<const Window> samples,
                                       std::span<const PlayerScheme> methods,
                                       std::span<const int> budgets, int n_samples,
                                       const PipelineConfig& config,
                                       const BenchSchemeParams& scheme_params);

std::string deletion_curve_to_csv(const DeletionCurve& curve);
std::string deletion_curve_to_json(const DeletionCurve& curve);

}  // namespace tsattr
