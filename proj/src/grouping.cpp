#include "tsattr/grouping.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tsattr/kernels.hpp"
#include "tsattr/rng.hpp"

namespace tsattr {

namespace {

// Cache centered per-variable grams only while they fit comfortably in
// memory (~128 MB); above that, pairs recompute one gram at a time.
constexpr std::size_t kMaxCachedGramEntries = 16u * 1000 * 1000;

std::vector<std::string> default_names(int d) {
    std::vector<std::string> names(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) names[static_cast<std::size_t>(i)] = "x" + std::to_string(i + 1);
    return names;
}

bool is_constant(const Eigen::VectorXd& v) {
    return (v.array() == v(0)).all();
}

Eigen::MatrixXd centered_gram_for(const Eigen::VectorXd& column) {
    Bandwidth bw = median_bandwidth_sq(column);
    return center_gram(rbf_kernel_matrix(column, bw.sigma_sq));
}

// Sorts members ascending and groups by smallest member.
void canonicalize(std::vector<std::vector<int>>& groups) {
    for (auto& g : groups) std::sort(g.begin(), g.end());
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

double mean_abs_offdiag(const Eigen::MatrixXd& affinity, const std::vector<int>& members) {
    const std::size_t m = members.size();
    if (m < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            sum += std::abs(affinity(members[i], members[j]));
        }
    }
    return sum / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

// Seeded k-means over embedding rows: greedy farthest-point initialization,
// at most 100 iterations, all ties broken by lowest index.
std::vector<std::vector<int>> kmeans_clusters(const Eigen::MatrixXd& points, int k,
                                              std::uint64_t seed) {
    const int n = static_cast<int>(points.rows());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: k out of range");

    Rng rng(seed);
    std::vector<int> centers;
    centers.reserve(static_cast<std::size_t>(k));
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    int first = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    centers.push_back(first);
    chosen[static_cast<std::size_t>(first)] = 1;

    Eigen::VectorXd min_dist(n);
    for (int i = 0; i < n; ++i) {
        min_dist(i) = (points.row(i) - points.row(first)).squaredNorm();
    }
    while (static_cast<int>(centers.size()) < k) {
        int best = -1;
        double best_dist = -1.0;
        for (int i = 0; i < n; ++i) {
            if (chosen[static_cast<std::size_t>(i)]) continue;
            if (min_dist(i) > best_dist) {
                best_dist = min_dist(i);
                best = i;
            }
        }
        centers.push_back(best);
        chosen[static_cast<std::size_t>(best)] = 1;
        for (int i = 0; i < n; ++i) {
            double d = (points.row(i) - points.row(best)).squaredNorm();
            if (d < min_dist(i)) min_dist(i) = d;
        }
    }

    Eigen::MatrixXd centroids(k, points.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = points.row(centers[static_cast<std::size_t>(c)]);

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (points.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best_c) {
                assign[static_cast<std::size_t>(i)] = best_c;
                changed = true;
            }
        }

        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];

        // Re-seed any emptied cluster with the point farthest from its own
        // centroid among clusters that can spare one.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] != 0) continue;
            int best = -1;
            double best_d = -1.0;
            for (int i = 0; i < n; ++i) {
                int ci = assign[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(ci)] < 2) continue;
                double d = (points.row(i) - centroids.row(ci)).squaredNorm();
                if (d > best_d) {
                    best_d = d;
                    best = i;
                }
            }
            if (best < 0) throw std::runtime_error("kmeans: cannot repair empty cluster");
            --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(best)])];
            assign[static_cast<std::size_t>(best)] = c;
            ++counts[static_cast<std::size_t>(c)];
            changed = true;
        }

        centroids.setZero();
        for (int i = 0; i < n; ++i) {
            centroids.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
        }
        for (int c = 0; c < k; ++c) centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

        if (!changed) break;
    }

    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) clusters[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])].push_back(i);
    clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                  [](const auto& c) { return c.empty(); }),
                   clusters.end());
    canonicalize(clusters);
    return clusters;
}

// Embedding + k-means on an affinity whose rows all have positive degree.
std::vector<std::vector<int>> embed_and_cluster(const Eigen::MatrixXd& affinity, int k,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(affinity.rows());
    if (k < 1 || k > n) throw std::invalid_argument("spectral_cluster: k out of range");
    if (n == 1) return {{0}};

    Eigen::MatrixXd lap = normalized_laplacian(affinity);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("spectral_cluster: eigendecomposition failed");
    }
    Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);
    for (int i = 0; i < n; ++i) {
        double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    return kmeans_clusters(embedding, k, seed);
}

// One clustering pass: forced singletons, eigengap model selection on the
// remaining block, spectral embedding and k-means. No quality refinement.
std::vector<std::vector<int>> spectral_pipeline(const Eigen::MatrixXd& affinity, int k_max,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(affinity.rows());
    if (n == 1) return {{0}};

    std::vector<int> active;
    std::vector<int> singles;
    split_zero_degree(affinity, active, singles);

    std::vector<std::vector<int>> groups;
    for (int s : singles) groups.push_back({s});

    if (active.size() == 1) {
        groups.push_back({active.front()});
    } else if (!active.empty()) {
        Eigen::MatrixXd sub = affinity(active, active);
        Eigen::MatrixXd lap = normalized_laplacian(sub);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("group_features: eigendecomposition failed");
        }
        int k = eigengap_k(solver.eigenvalues(), k_max);
        auto local = kmeans_clusters([&] {
            Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);
            for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
                double norm = embedding.row(i).norm();
                if (norm > 0.0) embedding.row(i) /= norm;
            }
            return embedding;
        }(), k, seed);
        for (auto& cluster : local) {
            std::vector<int> mapped;
            mapped.reserve(cluster.size());
            for (int idx : cluster) mapped.push_back(active[static_cast<std::size_t>(idx)]);
            groups.push_back(std::move(mapped));
        }
    }
    canonicalize(groups);
    return groups;
}

// Quality refinement: a cluster whose mean |off-diagonal| affinity falls below
// the threshold is re-clustered, recursing up to the configured depth cap, and
// dissolves into singletons when the cap is reached without improvement.
void refine_cluster(const Eigen::MatrixXd& affinity, std::vector<int> cluster,
                    const GroupingConfig& cfg, int depth,
                    std::vector<std::vector<int>>& out) {
    if (cluster.size() < 2 || mean_abs_offdiag(affinity, cluster) >= cfg.quality_threshold) {
        out.push_back(std::move(cluster));
        return;
    }
    if (depth >= cfg.max_refine_depth) {
        for (int v : cluster) out.push_back({v});
        return;
    }
    Eigen::MatrixXd sub = affinity(cluster, cluster);
    auto parts = spectral_pipeline(sub, cfg.k_max, cfg.seed);
    if (parts.size() <= 1) {
        // Re-clustering made no progress; deeper levels would only repeat it.
        for (int v : cluster) out.push_back({v});
        return;
    }
    for (auto& part : parts) {
        std::vector<int> mapped;
        mapped.reserve(part.size());
        for (int idx : part) mapped.push_back(cluster[static_cast<std::size_t>(idx)]);
        refine_cluster(affinity, std::move(mapped), cfg, depth + 1, out);
    }
}

Grouping cluster_affinity(const AffinityMatrix& affinity, GroupingMethod method,
                          const GroupingConfig& cfg) {
    auto clusters = spectral_pipeline(affinity.entries, cfg.k_max, cfg.seed);
    std::vector<std::vector<int>> refined;
    for (auto& cluster : clusters) {
        refine_cluster(affinity.entries, std::move(cluster), cfg, 0, refined);
    }
    canonicalize(refined);

    Grouping g;
    g.method = method;
    g.seed = cfg.seed;
    g.variable_names = affinity.variable_names;
    g.groups.reserve(refined.size());
    for (auto& cluster : refined) {
        std::vector<int> members;
        members.reserve(cluster.size());
        for (int v : cluster) members.push_back(v + 1);
        g.groups.push_back(std::move(members));
    }
    return g;
}

}  // namespace

std::string to_string(GroupingMethod m) {
    switch (m) {
        case GroupingMethod::hsic: return "hsic";
        case GroupingMethod::pearson: return "pearson";
        case GroupingMethod::random: return "random";
        case GroupingMethod::none: return "none";
    }
    throw std::logic_error("unknown grouping method");
}

GroupingMethod grouping_method_from_string(const std::string& s) {
    if (s == "hsic") return GroupingMethod::hsic;
    if (s == "pearson") return GroupingMethod::pearson;
    if (s == "random") return GroupingMethod::random;
    if (s == "none") return GroupingMethod::none;
    throw std::invalid_argument("unknown grouping method: " + s);
}

int Grouping::n_variables() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return static_cast<int>(n);
}

int Grouping::group_of(int d) const {
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (int v : groups[k]) {
            if (v == d) return static_cast<int>(k);
        }
    }
    throw std::out_of_range("Grouping::group_of: variable " + std::to_string(d));
}

Eigen::MatrixXd pooled_background_samples(std::span<const Window> windows,
                                          const GroupingConfig& config) {
    if (windows.empty()) {
        throw std::invalid_argument("pooled_background_samples: empty window set");
    }
    const Eigen::Index d = windows.front().cols();
    Eigen::Index total = 0;
    for (const auto& w : windows) {
        if (w.cols() != d) {
            throw std::invalid_argument("pooled_background_samples: variable count mismatch");
        }
        total += w.rows();
    }
    Eigen::MatrixXd pooled(total, d);
    Eigen::Index row = 0;
    for (const auto& w : windows) {
        pooled.middleRows(row, w.rows()) = w;
        row += w.rows();
    }
    if (total <= config.n_hsic_subsample) return pooled;

    Rng rng(config.seed);
    auto keep = sample_without_replacement(static_cast<int>(total), config.n_hsic_subsample, rng);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), d);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        sub.row(static_cast<Eigen::Index>(i)) = pooled.row(keep[i]);
    }
    return sub;
}

AffinityMatrix hsic_affinity(const Eigen::MatrixXd& samples,
                             std::vector<std::string> variable_names) {
    const Eigen::Index n = samples.rows();
    const int d = static_cast<int>(samples.cols());
    if (n < 4) throw std::invalid_argument("hsic_affinity: need at least 4 aligned samples");
    if (variable_names.empty()) variable_names = default_names(d);
    if (static_cast<int>(variable_names.size()) != d) {
        throw std::invalid_argument("hsic_affinity: variable name count mismatch");
    }

    std::vector<char> degenerate(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
        degenerate[static_cast<std::size_t>(i)] = is_constant(samples.col(i)) ? 1 : 0;
    }

    const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);

    const bool cache_all =
        static_cast<std::size_t>(d) * static_cast<std::size_t>(n) * static_cast<std::size_t>(n) <=
        kMaxCachedGramEntries;
    if (cache_all) {
        std::vector<Eigen::MatrixXd> grams(static_cast<std::size_t>(d));
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < d; ++i) {
            if (!degenerate[static_cast<std::size_t>(i)]) {
                grams[static_cast<std::size_t>(i)] = centered_gram_for(samples.col(i));
            }
        }
        for (int i = 0; i < d; ++i) {
            if (degenerate[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < d; ++j) {
                if (degenerate[static_cast<std::size_t>(j)]) continue;
                // tr(HKHL) = <HKH, HLH> since H is idempotent.
                double v = (grams[static_cast<std::size_t>(i)].array() *
                            grams[static_cast<std::size_t>(j)].array())
                               .sum() /
                           denom;
                a(i, j) = v;
                a(j, i) = v;
            }
        }
    } else {
        // Pairs are independent and write disjoint cells; results match the
        // serial order bit for bit.
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < d; ++i) {
            if (degenerate[static_cast<std::size_t>(i)]) continue;
            Eigen::MatrixXd gi = centered_gram_for(samples.col(i));
            for (int j = i + 1; j < d; ++j) {
                if (degenerate[static_cast<std::size_t>(j)]) continue;
                Eigen::MatrixXd gj = centered_gram_for(samples.col(j));
                double v = (gi.array() * gj.array()).sum() / denom;
                a(i, j) = v;
                a(j, i) = v;
            }
        }
    }
    return {std::move(a), std::move(variable_names)};
}

AffinityMatrix pearson_affinity(const Eigen::MatrixXd& samples,
                                std::vector<std::string> variable_names) {
    const Eigen::Index n = samples.rows();
    const int d = static_cast<int>(samples.cols());
    if (n < 2) throw std::invalid_argument("pearson_affinity: need at least 2 aligned samples");
    if (variable_names.empty()) variable_names = default_names(d);

    Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        if (norms(i) == 0.0) continue;
        for (int j = i + 1; j < d; ++j) {
            if (norms(j) == 0.0) continue;
            double v = std::abs(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)));
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return {std::move(a), std::move(variable_names)};
}

void split_zero_degree(const Eigen::MatrixXd& affinity, std::vector<int>& active,
                       std::vector<int>& singletons) {
    active.clear();
    singletons.clear();
    Eigen::VectorXd degrees = affinity.rowwise().sum();
    for (Eigen::Index i = 0; i < affinity.rows(); ++i) {
        if (degrees(i) > 0.0) {
            active.push_back(static_cast<int>(i));
        } else {
            singletons.push_back(static_cast<int>(i));
        }
    }
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity) {
    const Eigen::Index d = affinity.rows();
    if (affinity.cols() != d) throw std::invalid_argument("normalized_laplacian: matrix not square");
    Eigen::VectorXd degrees = affinity.rowwise().sum();
    if ((degrees.array() <= 0.0).any()) {
        throw std::invalid_argument(
            "normalized_laplacian: zero-degree variable; split it out as a singleton first");
    }
    Eigen::VectorXd inv_sqrt = degrees.array().rsqrt();
    Eigen::MatrixXd lap =
        Eigen::MatrixXd::Identity(d, d) -
        (inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
    return lap;
}

int eigengap_k(const Eigen::VectorXd& eigenvalues_ascending, int k_max) {
    const int len = static_cast<int>(eigenvalues_ascending.size());
    if (len < 2) return 1;
    const int upper = std::min(k_max, len - 1);
    int best_k = 1;
    double best_gap = eigenvalues_ascending(1) - eigenvalues_ascending(0);
    for (int k = 2; k <= upper; ++k) {
        double gap = eigenvalues_ascending(k) - eigenvalues_ascending(k - 1);
        if (gap > best_gap) {
            best_gap = gap;
            best_k = k;
        }
    }
    return best_k;
}

std::vector<std::vector<int>> spectral_cluster(const Eigen::MatrixXd& affinity, int k,
                                               std::uint64_t seed) {
    const int n = static_cast<int>(affinity.rows());
    if (k < 1 || k > n) throw std::invalid_argument("spectral_cluster: k out of range");

    std::vector<int> active;
    std::vector<int> singles;
    split_zero_degree(affinity, active, singles);

    std::vector<std::vector<int>> groups;
    for (int s : singles) groups.push_back({s});
    if (!active.empty()) {
        int k_sub = std::clamp(k - static_cast<int>(singles.size()), 1,
                               static_cast<int>(active.size()));
        Eigen::MatrixXd sub = affinity(active, active);
        auto local = active.size() == 1 ? std::vector<std::vector<int>>{{0}}
                                        : embed_and_cluster(sub, k_sub, seed);
        for (auto& cluster : local) {
            std::vector<int> mapped;
            mapped.reserve(cluster.size());
            for (int idx : cluster) mapped.push_back(active[static_cast<std::size_t>(idx)]);
            groups.push_back(std::move(mapped));
        }
    }
    canonicalize(groups);
    return groups;
}

Grouping group_features(std::span<const Window> windows, const GroupingConfig& config,
                        std::vector<std::string> variable_names) {
    Eigen::MatrixXd samples = pooled_background_samples(windows, config);
    if (samples.cols() == 1) {
        Grouping g;
        g.method = GroupingMethod::hsic;
        g.seed = config.seed;
        g.variable_names =
            variable_names.empty() ? default_names(1) : std::move(variable_names);
        g.groups = {{1}};
        return g;
    }
    AffinityMatrix affinity = hsic_affinity(samples, std::move(variable_names));
    return cluster_affinity(affinity, GroupingMethod::hsic, config);
}

Grouping alternative_grouping(std::span<const Window> windows, GroupingMethod method,
                              int k_hint, const GroupingConfig& config,
                              std::vector<std::string> variable_names) {
    if (windows.empty()) {
        throw std::invalid_argument("alternative_grouping: empty window set");
    }
    const int d = static_cast<int>(windows.front().cols());
    if (variable_names.empty()) variable_names = default_names(d);

    Grouping g;
    g.seed = config.seed;
    g.method = method;
    g.variable_names = variable_names;

    switch (method) {
        case GroupingMethod::hsic:
            return group_features(windows, config, std::move(variable_names));
        case GroupingMethod::pearson: {
            if (d == 1) {
                g.groups = {{1}};
                return g;
            }
            Eigen::MatrixXd samples = pooled_background_samples(windows, config);
            AffinityMatrix affinity = pearson_affinity(samples, std::move(variable_names));
            return cluster_affinity(affinity, GroupingMethod::pearson, config);
        }
        case GroupingMethod::random: {
            if (k_hint < 1 || k_hint > d) {
                throw std::invalid_argument("alternative_grouping: K_hint out of range");
            }
            Rng rng(config.seed);
            auto order = random_permutation(d, rng);
            std::vector<std::vector<int>> groups(static_cast<std::size_t>(k_hint));
            // First k_hint shuffled variables keep every group non-empty.
            for (int i = 0; i < d; ++i) {
                std::size_t target = i < k_hint
                                         ? static_cast<std::size_t>(i)
                                         : static_cast<std::size_t>(rng.next_below(
                                               static_cast<std::uint64_t>(k_hint)));
                groups[target].push_back(order[static_cast<std::size_t>(i)] + 1);
            }
            canonicalize(groups);
            g.groups = std::move(groups);
            return g;
        }
        case GroupingMethod::none: {
            for (int i = 1; i <= d; ++i) g.groups.push_back({i});
            return g;
        }
    }
    throw std::logic_error("unreachable");
}

std::string grouping_to_json(const Grouping& g) {
    nlohmann::json j;
    j["method"] = to_string(g.method);
    j["groups"] = g.groups;
    j["variable_names"] = g.variable_names;
    j["seed"] = g.seed;
    return j.dump(2) + "\n";
}

Grouping grouping_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Grouping g;
    g.method = grouping_method_from_string(j.at("method").get<std::string>());
    g.groups = j.at("groups").get<std::vector<std::vector<int>>>();
    g.variable_names = j.at("variable_names").get<std::vector<std::string>>();
    g.seed = j.at("seed").get<std::uint64_t>();
    return g;
}

}  // namespace tsattr
