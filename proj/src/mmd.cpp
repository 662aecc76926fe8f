#include "cpdp/mmd.hpp"

#include "cpdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace cpdp {

double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd pooled(a.rows() + b.rows(), a.cols());
    pooled << a, b;
    const Eigen::Index n = pooled.rows();
    if (n < 2) return 0.0;

    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((pooled.row(i) - pooled.row(j)).norm());
    }
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    const double upper = d[mid];
    if (d.size() % 2 == 1) return upper;
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Bandwidth bandwidth) {
    if (a.cols() != b.cols()) {
        throw Error("shape", "mmd: samples have " + std::to_string(a.cols()) + " and " +
                                 std::to_string(b.cols()) + " features");
    }
    if (a.rows() == 0 || b.rows() == 0) throw Error("data", "mmd: empty sample");

    double h = bandwidth ? *bandwidth : median_pairwise_distance(a, b);
    if (!(h > 0.0) || !std::isfinite(h)) {
        if (bandwidth) throw Error("config", "mmd: bandwidth must be positive");
        h = 1.0;  // all points coincide
    }
    const double gamma = 1.0 / (2.0 * h * h);
    const auto kernel = [gamma](const auto& x, const auto& y) {
        return std::exp(-gamma * (x - y).squaredNorm());
    };

    const auto within = [&](const Eigen::MatrixXd& x) {
        const Eigen::Index n = x.rows();
        if (n < 2) return 1.0;  // k(x, x)
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) s += kernel(x.row(i), x.row(j));
        }
        return 2.0 * s / static_cast<double>(n * (n - 1));
    };

    double cross = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) cross += kernel(a.row(i), b.row(j));
    }
    cross /= static_cast<double>(a.rows() * b.rows());

    const double value = within(a) + within(b) - 2.0 * cross;
    return std::max(0.0, value);
}

double mmd(const ProjectDataset& a, const ProjectDataset& b, Bandwidth bandwidth) {
    return mmd(a.feature_matrix(), b.feature_matrix(), bandwidth);
}

}  // namespace cpdp
