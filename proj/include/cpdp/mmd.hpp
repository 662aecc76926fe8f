#pragma once

#include "cpdp/dataset.hpp"

#include <Eigen/Dense>

#include <optional>

namespace cpdp {

/// Gaussian-kernel bandwidth. nullopt selects the median heuristic: the median
/// pairwise Euclidean distance over the pooled sample.
using Bandwidth = std::optional<double>;

inline constexpr Bandwidth kMedianHeuristic = std::nullopt;

double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Squared maximum mean discrepancy between two samples (rows are points),
/// kernel exp(-|x - y|^2 / (2 h^2)). Within-sample terms exclude the diagonal
/// (unbiased U-statistic) when a sample has at least two points; negative
/// estimates are clipped to 0.
double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Bandwidth bandwidth = kMedianHeuristic);

double mmd(const ProjectDataset& a, const ProjectDataset& b, Bandwidth bandwidth = kMedianHeuristic);

}  // namespace cpdp
