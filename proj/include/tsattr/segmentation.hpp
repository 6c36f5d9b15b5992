#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsattr/types.hpp"

namespace tsattr {

// Half-open time interval [start, end). 1-based, end <= T + 1.
struct Segment {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool contains(int t) const { return t >= start && t < end; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

// Per-group partition of the time axis into contiguous segments covering
// [1, T+1). `under_length` marks the T < l_min fallback single segment.
struct Segmentation {
    int group_index = 0;
    std::vector<Segment> segments;
    bool under_length = false;
};

enum class ThresholdMode {
    per_top_level,  // threshold calibrated once on [1, T+1) and reused while recursing
    per_interval,   // recalibrated on every interval
};

struct SegmentationConfig {
    int l_min = 2;
    int j_max = 8;
    double alpha = 0.05;
    int num_permutations = 200;
    std::uint64_t seed = 0;
    ThresholdMode threshold_mode = ThresholdMode::per_top_level;
};

struct SplitCandidate {
    int t = 0;        // 1-based split position: left rows cover [s, t)
    double stat = 0;  // unbiased MMD^2 at the split
};

// Best split of interval [s, e) of `block` (full T x d matrix; 1-based
// interval bounds): scans t in [s + l_min, e - l_min], maximizing the unbiased
// MMD^2 between the two sides under the given RBF bandwidth; ties take the
// smallest t. Returns nothing when the interval is shorter than 2 * l_min.
std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& block, int s, int e,
                                         int l_min, double sigma_sq);

// (1 - alpha) nearest-rank (ceiling) quantile of the permutation null of the
// maximal-split statistic over the same candidate set as best_split.
double permutation_threshold(const Eigen::MatrixXd& block, int s, int e, int l_min,
                             double alpha, int num_permutations, std::uint64_t seed,
                             double sigma_sq);

// Recursive binary segmentation of a T x d block (depth-first, left interval
// first). A split is accepted only when its statistic exceeds the permutation
// threshold and the segment budget j_max allows it.
Segmentation segment_group(const Eigen::MatrixXd& block, const SegmentationConfig& config,
                           int group_index = 0);

std::string segmentation_to_json(const Segmentation& s, const SegmentationConfig& config);
Segmentation segmentation_from_json(const std::string& text);

}  // namespace tsattr
