#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsattr/players.hpp"
#include "tsattr/predictors.hpp"
#include "tsattr/types.hpp"

namespace tsattr {

enum class MaskingMode { mean, zero, noise };

std::string to_string(MaskingMode m);
MaskingMode masking_mode_from_string(const std::string& s);

// Replacement rule for cells outside the active coalition. Noise draws are
// keyed by (seed, t, d), so the same coalition always masks to the same
// window within a run.
struct MaskingBaseline {
    MaskingMode mode = MaskingMode::mean;
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
    std::uint64_t seed = 0;
};

// Feature-wise mean (and population standard deviation, for the noise mode)
// over all cells of the background windows.
MaskingBaseline baseline_from_background(MaskingMode mode, std::span<const Window> background,
                                         std::uint64_t seed = 0);

// The fully masked window: the value every cell takes when its owner is
// excluded from the coalition.
Window baseline_window(const MaskingBaseline& baseline, int T, int D);

// Membership bits over the player set: bits[p] == 1 keeps player p's cells.
struct Coalition {
    std::vector<std::uint8_t> bits;

    static Coalition none(int n) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)}; }
    static Coalition all(int n) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)}; }
};

// Element-wise coalition masking: a cell keeps its value iff its owner is in
// the coalition, and takes the baseline value otherwise.
Window mask(const Window& window, const Coalition& coalition, const PlayerSet& player_set,
            const MaskingBaseline& baseline);

struct AttributionResult {
    Eigen::VectorXd phi;
    int m_used = 0;
    double f_full = 0.0;
    double f_empty = 0.0;
    std::string players_ref;
    MaskingMode baseline_mode = MaskingMode::mean;
    std::uint64_t seed = 0;
};

// f(mask(preceding + p)) - f(mask(preceding)). `preceding` must not contain p.
double marginal_contribution(Predictor& predictor, const Window& window, int player,
                             const Coalition& preceding, const PlayerSet& player_set,
                             const MaskingBaseline& baseline);

// Permutation-sampled Shapley values: M seeded permutations, each walked with
// exactly |P| + 1 predictor calls (the coalition grows incrementally and the
// walk is evaluated as one batch). phi averages the per-player marginals.
AttributionResult shapley_permutation(Predictor& predictor, const Window& window,
                                      const PlayerSet& player_set, int m,
                                      const MaskingBaseline& baseline, std::uint64_t seed);

// Exact Shapley values by full coalition enumeration; |P| <= 20. Reference
// oracle for the permutation estimator.
AttributionResult shapley_exact(Predictor& predictor, const Window& window,
                                const PlayerSet& player_set, const MaskingBaseline& baseline);

std::string attribution_to_json(const AttributionResult& r);
AttributionResult attribution_from_json(const std::string& text);

}  // namespace tsattr
