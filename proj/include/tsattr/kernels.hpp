#pragma once

#include <Eigen/Dense>

namespace tsattr {

// Squared RBF bandwidth from the median heuristic. `degenerate` is set when
// every pairwise distance is zero and the fallback sigma_sq = 1 is returned.
struct Bandwidth {
    double sigma_sq = 1.0;
    bool degenerate = false;
};

// Median of all strictly positive pairwise squared Euclidean distances between
// the rows of `points`. Even-sized medians average the two central order
// statistics. Requires >= 2 finite points.
Bandwidth median_bandwidth_sq(const Eigen::MatrixXd& points);
Bandwidth median_bandwidth_sq(const Eigen::VectorXd& values);

// Gram matrix with k(x, y) = exp(-||x - y||^2 / (2 sigma_sq)). Rows of
// `points` are the samples. Symmetric with unit diagonal, entries in (0, 1].
Eigen::MatrixXd rbf_kernel_matrix(const Eigen::MatrixXd& points, double sigma_sq);
Eigen::MatrixXd rbf_kernel_matrix(const Eigen::VectorXd& values, double sigma_sq);

// Double centering H K H with H = I - (1/n) 1 1^T.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram);

// Biased HSIC estimator tr(H K H L) / (n - 1)^2 with per-variable
// median-heuristic RBF bandwidths. Constant inputs carry no dependence
// signal and yield exactly 0.
double hsic(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Same estimator with the bandwidths pinned by the caller.
double hsic_with_bandwidths(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            double sigma_sq_x, double sigma_sq_y);

// Three-term unbiased MMD^2 estimator between two samples of d-dimensional
// points (rows). May be negative. Each side needs >= 2 points.
double mmd2_unbiased(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                     double sigma_sq);

}  // namespace tsattr
