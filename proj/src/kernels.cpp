#include "tsattr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tsattr {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite input");
    }
}

// Median of v, averaging the two central elements for even sizes. Mutates v.
double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

}  // namespace

Bandwidth median_bandwidth_sq(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    if (n < 2) {
        throw std::invalid_argument("median_bandwidth_sq: need at least 2 points");
    }
    require_finite(points, "median_bandwidth_sq");

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d2 = (points.row(i) - points.row(j)).squaredNorm();
            if (d2 > 0.0) dists.push_back(d2);
        }
    }
    if (dists.empty()) return {1.0, true};
    return {median_inplace(dists), false};
}

Bandwidth median_bandwidth_sq(const Eigen::VectorXd& values) {
    return median_bandwidth_sq(Eigen::MatrixXd(values));
}

Eigen::MatrixXd rbf_kernel_matrix(const Eigen::MatrixXd& points, double sigma_sq) {
    if (!(sigma_sq > 0.0)) {
        throw std::invalid_argument("rbf_kernel_matrix: bandwidth_sq must be positive");
    }
    require_finite(points, "rbf_kernel_matrix");

    const Eigen::Index n = points.rows();
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_sq);
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d2 = (points.row(i) - points.row(j)).squaredNorm();
            double v = std::exp(-d2 * inv_two_sigma_sq);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::MatrixXd rbf_kernel_matrix(const Eigen::VectorXd& values, double sigma_sq) {
    return rbf_kernel_matrix(Eigen::MatrixXd(values), sigma_sq);
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram) {
    const double grand = gram.mean();
    Eigen::VectorXd row_means = gram.rowwise().mean();
    Eigen::VectorXd col_means = gram.colwise().mean();
    Eigen::MatrixXd centered = gram;
    centered.colwise() -= row_means;
    centered.rowwise() -= col_means.transpose();
    centered.array() += grand;
    return centered;
}

double hsic_with_bandwidths(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            double sigma_sq_x, double sigma_sq_y) {
    const Eigen::Index n = x.size();
    if (y.size() != n) {
        throw std::invalid_argument("hsic: samples must have equal length");
    }
    if (n < 4) {
        throw std::invalid_argument("hsic: need at least 4 observations");
    }
    Eigen::MatrixXd kc = center_gram(rbf_kernel_matrix(x, sigma_sq_x));
    Eigen::MatrixXd l = rbf_kernel_matrix(y, sigma_sq_y);
    // tr(H K H L) = <HKH, L> for symmetric L.
    double trace = (kc.array() * l.array()).sum();
    double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
    return trace / denom;
}

double hsic(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (y.size() != x.size()) {
        throw std::invalid_argument("hsic: samples must have equal length");
    }
    Bandwidth bx = median_bandwidth_sq(x);
    Bandwidth by = median_bandwidth_sq(y);
    // A constant variable carries no dependence signal.
    if (bx.degenerate || by.degenerate) return 0.0;
    return hsic_with_bandwidths(x, y, bx.sigma_sq, by.sigma_sq);
}

double mmd2_unbiased(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                     double sigma_sq) {
    const Eigen::Index n = left.rows();
    const Eigen::Index m = right.rows();
    if (n < 2 || m < 2) {
        throw std::invalid_argument("mmd2_unbiased: each sample needs at least 2 points");
    }
    if (left.cols() != right.cols()) {
        throw std::invalid_argument("mmd2_unbiased: dimension mismatch");
    }
    if (!(sigma_sq > 0.0)) {
        throw std::invalid_argument("mmd2_unbiased: bandwidth_sq must be positive");
    }
    require_finite(left, "mmd2_unbiased");
    require_finite(right, "mmd2_unbiased");

    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_sq);
    auto k = [&](const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                 Eigen::Index j) {
        return std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv_two_sigma_sq);
    };

    double s_ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) s_ll += k(left, i, left, j);
    }
    double s_rr = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) s_rr += k(right, i, right, j);
    }
    double s_lr = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) s_lr += k(left, i, right, j);
    }

    double nn = static_cast<double>(n);
    double mm = static_cast<double>(m);
    return 2.0 * s_ll / (nn * (nn - 1.0)) + 2.0 * s_rr / (mm * (mm - 1.0)) -
           2.0 * s_lr / (nn * mm);
}

}  // namespace tsattr
