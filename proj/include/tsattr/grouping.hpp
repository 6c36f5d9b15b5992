#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsattr/types.hpp"

namespace tsattr {

enum class GroupingMethod { hsic, pearson, random, none };

std::string to_string(GroupingMethod m);
GroupingMethod grouping_method_from_string(const std::string& s);

// Pairwise affinity between variables. Symmetric, non-negative, zero diagonal.
struct AffinityMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::string> variable_names;
};

// Exact partition of the variable indices {1..D}. Groups are ordered by their
// smallest member and members are ascending.
struct Grouping {
    std::vector<std::vector<int>> groups;  // 1-based variable indices
    GroupingMethod method = GroupingMethod::hsic;
    std::vector<std::string> variable_names;
    std::uint64_t seed = 0;

    int n_variables() const;
    // 0-based group index owning 1-based variable d.
    int group_of(int d) const;
};

struct GroupingConfig {
    int n_hsic_subsample = 3000;
    int k_max = 6;
    double quality_threshold = 1e-3;
    int max_refine_depth = 5;
    std::uint64_t seed = 0;
};

// Pools every time step of every window into one row-aligned sample matrix
// (n x D), subsampling rows without replacement down to the configured cap.
// The same row selection applies to all variables.
Eigen::MatrixXd pooled_background_samples(std::span<const Window> windows,
                                          const GroupingConfig& config);

// Pairwise HSIC between all variable columns of an aligned sample matrix.
AffinityMatrix hsic_affinity(const Eigen::MatrixXd& samples,
                             std::vector<std::string> variable_names = {});

// Absolute Pearson correlation affinity over the same alignment.
AffinityMatrix pearson_affinity(const Eigen::MatrixXd& samples,
                                std::vector<std::string> variable_names = {});

// L = I - Deg^{-1/2} A Deg^{-1/2}. Every row of `affinity` must have positive
// degree; zero-degree variables are split out by the callers beforehand.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity);

// Splits variable indices (0-based, local) into rows with positive degree and
// zero-degree rows that become forced singletons.
void split_zero_degree(const Eigen::MatrixXd& affinity, std::vector<int>& active,
                       std::vector<int>& singletons);

// Number of clusters by the largest consecutive eigenvalue gap, searched over
// k in {1 .. min(k_max, len-1)}; ties break to the smallest k.
int eigengap_k(const Eigen::VectorXd& eigenvalues_ascending, int k_max);

// Spectral clustering of a D x D affinity into k clusters: forced singletons
// for zero-degree rows, Laplacian eigenvector embedding for the rest, rows
// normalized to unit length, seeded k-means. Returns a partition of the
// 0-based local indices ordered by smallest member.
std::vector<std::vector<int>> spectral_cluster(const Eigen::MatrixXd& affinity,
                                               int k, std::uint64_t seed);

// Full HSIC grouping pipeline including eigengap model selection and the
// within-cluster quality refinement with its recursion cap.
Grouping group_features(std::span<const Window> windows, const GroupingConfig& config,
                        std::vector<std::string> variable_names = {});

// Comparison strategies: pearson runs the same clustering path on a
// correlation affinity, random deals variables into k_hint non-empty groups,
// none yields singletons. k_hint is only read by random.
Grouping alternative_grouping(std::span<const Window> windows, GroupingMethod method,
                              int k_hint, const GroupingConfig& config,
                              std::vector<std::string> variable_names = {});

std::string grouping_to_json(const Grouping& g);
Grouping grouping_from_json(const std::string& text);

}  // namespace tsattr
