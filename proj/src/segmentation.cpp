#include "tsattr/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tsattr/kernels.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

void check_interval(const Eigen::MatrixXd& block, int s, int e, int l_min) {
    if (l_min < 2) throw std::invalid_argument("segmentation: l_min must be >= 2");
    if (s < 1 || e > static_cast<int>(block.rows()) + 1 || s >= e) {
        throw std::invalid_argument("segmentation: invalid interval");
    }
}

// Maximal split statistic for one ordering of the interval rows. The gram
// matrix is fixed; a permutation only changes which indices fall on each side,
// so every scan is an O(n^2) sweep that moves one row from right to left per
// step and updates the three MMD sums incrementally.
double max_split_stat(const Eigen::MatrixXd& gram, const std::vector<int>& order,
                      int l_min, int* best_left_size) {
    const int n = static_cast<int>(gram.rows());
    // Row sums excluding the diagonal.
    Eigen::VectorXd row_tot = gram.rowwise().sum() - gram.diagonal();

    double s_rr = row_tot.sum();  // ordered-pair sum over the full interval
    double s_ll = 0.0;
    double s_lr = 0.0;

    double best = -std::numeric_limits<double>::infinity();
    int best_size = -1;

    std::vector<int> left;
    left.reserve(static_cast<std::size_t>(n));
    for (int step = 0; step < n - 1; ++step) {
        const int x = order[static_cast<std::size_t>(step)];
        double to_left = 0.0;
        for (int i : left) to_left += gram(x, i);
        const double to_right = row_tot(x) - to_left;

        s_ll += 2.0 * to_left;
        s_rr -= 2.0 * to_right;
        s_lr += to_right - to_left;
        left.push_back(x);

        const int n_l = step + 1;
        const int n_r = n - n_l;
        if (n_l < l_min || n_r < l_min) continue;
        double stat = s_ll / (static_cast<double>(n_l) * (n_l - 1)) +
                      s_rr / (static_cast<double>(n_r) * (n_r - 1)) -
                      2.0 * s_lr / (static_cast<double>(n_l) * n_r);
        if (stat > best) {
            best = stat;
            best_size = n_l;
        }
    }
    if (best_left_size != nullptr) *best_left_size = best_size;
    return best;
}

Eigen::MatrixXd interval_gram(const Eigen::MatrixXd& block, int s, int e, double sigma_sq) {
    return rbf_kernel_matrix(Eigen::MatrixXd(block.middleRows(s - 1, e - s)), sigma_sq);
}

std::optional<SplitCandidate> best_split_on_gram(const Eigen::MatrixXd& gram, int s, int e,
                                                 int l_min) {
    if (e - s < 2 * l_min) return std::nullopt;
    const int n = e - s;
    std::vector<int> identity(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) identity[static_cast<std::size_t>(i)] = i;
    int best_size = -1;
    double stat = max_split_stat(gram, identity, l_min, &best_size);
    return SplitCandidate{s + best_size, stat};
}

double threshold_on_gram(const Eigen::MatrixXd& gram, int s, int e, int l_min, double alpha,
                         int num_permutations, std::uint64_t seed) {
    if (num_permutations < 1) {
        throw std::invalid_argument("permutation_threshold: need at least 1 permutation");
    }
    if (e - s < 2 * l_min) {
        throw std::invalid_argument("permutation_threshold: interval has no candidate splits");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("permutation_threshold: alpha must be in (0, 1)");
    }
    const int n = e - s;
    std::vector<double> null_stats(static_cast<std::size_t>(num_permutations));
    // Sub-stream per permutation index: reproducible regardless of scheduling.
#pragma omp parallel for schedule(static)
    for (int b = 0; b < num_permutations; ++b) {
        Rng rng(mix_seed(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(s)),
                                  static_cast<std::uint64_t>(e)),
                         static_cast<std::uint64_t>(b)));
        auto order = random_permutation(n, rng);
        null_stats[static_cast<std::size_t>(b)] = max_split_stat(gram, order, l_min, nullptr);
    }
    std::sort(null_stats.begin(), null_stats.end());
    // Nearest-rank ceiling quantile.
    int rank = static_cast<int>(std::ceil((1.0 - alpha) * num_permutations));
    rank = std::clamp(rank, 1, num_permutations);
    return null_stats[static_cast<std::size_t>(rank - 1)];
}

}  // namespace

std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& block, int s, int e,
                                         int l_min, double sigma_sq) {
    check_interval(block, s, e, l_min);
    if (e - s < 2 * l_min) return std::nullopt;
    return best_split_on_gram(interval_gram(block, s, e, sigma_sq), s, e, l_min);
}

double permutation_threshold(const Eigen::MatrixXd& block, int s, int e, int l_min,
                             double alpha, int num_permutations, std::uint64_t seed,
                             double sigma_sq) {
    check_interval(block, s, e, l_min);
    return threshold_on_gram(interval_gram(block, s, e, sigma_sq), s, e, l_min, alpha,
                             num_permutations, seed);
}

Segmentation segment_group(const Eigen::MatrixXd& block, const SegmentationConfig& config,
                           int group_index) {
    const int t_len = static_cast<int>(block.rows());
    if (t_len < 1) throw std::invalid_argument("segment_group: empty block");
    if (config.l_min < 2) throw std::invalid_argument("segment_group: l_min must be >= 2");
    if (config.j_max < 1) throw std::invalid_argument("segment_group: j_max must be >= 1");

    Segmentation result;
    result.group_index = group_index;
    if (t_len < config.l_min) {
        result.segments = {{1, t_len + 1}};
        result.under_length = true;
        return result;
    }

    int count = 1;
    // In per_top_level mode the whole calibration context is reused while
    // recursing: one bandwidth and one threshold, both from the top interval.
    // A threshold compared against statistics on a different kernel scale
    // loses its level, so bandwidth and threshold travel together.
    std::optional<double> shared_tau;
    std::optional<double> shared_sigma_sq;

    // Depth-first, left interval first; splits accepted in discovery order.
    auto recurse = [&](auto&& self, int s, int e) -> void {
        if (e - s < 2 * config.l_min || count >= config.j_max) {
            result.segments.push_back({s, e});
            return;
        }
        double sigma_sq;
        if (config.threshold_mode == ThresholdMode::per_interval || !shared_sigma_sq) {
            sigma_sq =
                median_bandwidth_sq(Eigen::MatrixXd(block.middleRows(s - 1, e - s))).sigma_sq;
            if (config.threshold_mode == ThresholdMode::per_top_level) {
                shared_sigma_sq = sigma_sq;
            }
        } else {
            sigma_sq = *shared_sigma_sq;
        }
        Eigen::MatrixXd gram = interval_gram(block, s, e, sigma_sq);
        auto split = best_split_on_gram(gram, s, e, config.l_min);

        double tau;
        if (config.threshold_mode == ThresholdMode::per_interval) {
            tau = threshold_on_gram(gram, s, e, config.l_min, config.alpha,
                                    config.num_permutations, config.seed);
        } else {
            if (!shared_tau) {
                shared_tau = threshold_on_gram(gram, s, e, config.l_min, config.alpha,
                                               config.num_permutations, config.seed);
            }
            tau = *shared_tau;
        }

        if (split && split->stat > tau) {
            ++count;
            self(self, s, split->t);
            self(self, split->t, e);
        } else {
            result.segments.push_back({s, e});
        }
    };
    recurse(recurse, 1, t_len + 1);
    return result;
}

std::string segmentation_to_json(const Segmentation& s, const SegmentationConfig& config) {
    nlohmann::json j;
    j["group"] = s.group_index;
    auto segs = nlohmann::json::array();
    for (const auto& seg : s.segments) segs.push_back({seg.start, seg.end});
    j["segments"] = segs;
    j["l_min"] = config.l_min;
    j["alpha"] = config.alpha;
    j["seed"] = config.seed;
    return j.dump(2) + "\n";
}

Segmentation segmentation_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Segmentation s;
    s.group_index = j.at("group").get<int>();
    for (const auto& seg : j.at("segments")) {
        s.segments.push_back({seg.at(0).get<int>(), seg.at(1).get<int>()});
    }
    return s;
}

}  // namespace tsattr
