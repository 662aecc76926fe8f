#include "cpdp/normrules.hpp"

#include "cpdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cpdp {

namespace {

struct ColumnStats {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd std;
    Eigen::RowVectorXd min;
    Eigen::RowVectorXd max;
};

ColumnStats column_stats(const Eigen::MatrixXd& x) {
    ColumnStats s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.std = ((x.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
    s.min = x.colwise().minCoeff();
    s.max = x.colwise().maxCoeff();
    return s;
}

// Degenerate columns (zero spread) map to 0.
Eigen::MatrixXd zscore(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean,
                       const Eigen::RowVectorXd& std) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (std(c) > 0.0) {
            out.col(c) = (x.col(c).array() - mean(c)) / std(c);
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

Eigen::MatrixXd min_max(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    if (x.rows() == 0) return out;
    const auto s = column_stats(x);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double range = s.max(c) - s.min(c);
        if (range > 0.0) {
            out.col(c) = (x.col(c).array() - s.min(c)) / range;
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(SimilarityLevel level) {
    switch (level) {
        case SimilarityLevel::MuchLess: return "MUCH-LESS";
        case SimilarityLevel::Less: return "LESS";
        case SimilarityLevel::Same: return "SAME";
        case SimilarityLevel::More: return "MORE";
        case SimilarityLevel::MuchMore: return "MUCH-MORE";
    }
    return "?";
}

std::string_view to_string(NormalizationChoice choice) {
    switch (choice) {
        case NormalizationChoice::NoNorm: return "NO-NORM";
        case NormalizationChoice::MinMax: return "MIN-MAX";
        case NormalizationChoice::ZscoreSourceStats: return "ZSCORE-SOURCE-STATS";
        case NormalizationChoice::ZscoreTargetStats: return "ZSCORE-TARGET-STATS";
        case NormalizationChoice::Zscore: return "ZSCORE";
    }
    return "?";
}

DistStats pairwise_dist(const ProjectDataset& dataset) {
    const std::size_t n = dataset.size();
    if (n < 2) throw Error("data", "pairwise distances need at least 2 instances, got " + std::to_string(n));

    const auto& inst = dataset.instances();
    std::vector<double> d;
    d.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < dataset.feature_count(); ++c) {
                const double diff = inst[i].features[c] - inst[j].features[c];
                sq += diff * diff;
            }
            d.push_back(std::sqrt(sq));
        }
    }
    // Reductions run over the sorted multiset so the result does not depend on
    // instance order.
    std::sort(d.begin(), d.end());

    DistStats s;
    s.n_instances = n;
    s.min = d.front();
    s.max = d.back();
    const std::size_t m = d.size();
    s.median = (m % 2 == 1) ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
    double sum = 0.0;
    for (double v : d) sum += v;
    s.mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double v : d) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(m));
    return s;
}

SimilarityLevel classify_ratio(double source_value, double target_value,
                               const SimilarityThresholds& t) {
    if (source_value == 0.0) {
        return target_value == 0.0 ? SimilarityLevel::Same : SimilarityLevel::MuchMore;
    }
    const double r = target_value / source_value;
    if (r < t.much_less) return SimilarityLevel::MuchLess;
    if (r < t.less) return SimilarityLevel::Less;
    if (r <= t.same_upper) return SimilarityLevel::Same;
    if (r <= t.more_upper) return SimilarityLevel::More;
    return SimilarityLevel::MuchMore;
}

DistComparison compare(const DistStats& source, const DistStats& target,
                       const SimilarityThresholds& t) {
    DistComparison c;
    c.mean = classify_ratio(source.mean, target.mean, t);
    c.median = classify_ratio(source.median, target.median, t);
    c.min = classify_ratio(source.min, target.min, t);
    c.max = classify_ratio(source.max, target.max, t);
    c.std = classify_ratio(source.std, target.std, t);
    c.n_instances = classify_ratio(static_cast<double>(source.n_instances),
                                   static_cast<double>(target.n_instances), t);
    return c;
}

RuleDecision select_rule(const DistComparison& levels, std::size_t n_source, std::size_t n_target) {
    using L = SimilarityLevel;
    const auto extreme = [](L l) { return l == L::MuchLess || l == L::MuchMore; };

    if (levels.mean == L::Same && levels.std == L::Same) {
        return {1, NormalizationChoice::NoNorm};
    }
    if (extreme(levels.min) && extreme(levels.max) && extreme(levels.n_instances)) {
        return {2, NormalizationChoice::MinMax};
    }
    if ((levels.std == L::MuchMore && n_target < n_source) ||
        (levels.std == L::MuchLess && n_target > n_source)) {
        return {3, NormalizationChoice::ZscoreSourceStats};
    }
    if ((levels.std == L::MuchMore && n_target > n_source) ||
        (levels.std == L::MuchLess && n_target < n_source)) {
        return {4, NormalizationChoice::ZscoreTargetStats};
    }
    return {5, NormalizationChoice::Zscore};
}

std::pair<ProjectDataset, ProjectDataset> apply_normalization(NormalizationChoice choice,
                                                              const ProjectDataset& source,
                                                              const ProjectDataset& target) {
    if (source.feature_count() != target.feature_count()) {
        throw Error("shape", "feature count mismatch: source has " +
                                 std::to_string(source.feature_count()) + " features, target has " +
                                 std::to_string(target.feature_count()));
    }
    if (choice == NormalizationChoice::NoNorm) return {source, target};

    const Eigen::MatrixXd xs = source.feature_matrix();
    const Eigen::MatrixXd xt = target.feature_matrix();

    switch (choice) {
        case NormalizationChoice::MinMax:
            return {source.with_features(min_max(xs)), target.with_features(min_max(xt))};
        case NormalizationChoice::Zscore: {
            if (source.empty() || target.empty()) throw Error("data", "z-score needs nonempty datasets");
            const auto ss = column_stats(xs);
            const auto st = column_stats(xt);
            return {source.with_features(zscore(xs, ss.mean, ss.std)),
                    target.with_features(zscore(xt, st.mean, st.std))};
        }
        case NormalizationChoice::ZscoreSourceStats:
        case NormalizationChoice::ZscoreTargetStats: {
            const bool use_source = choice == NormalizationChoice::ZscoreSourceStats;
            if ((use_source ? source : target).empty()) {
                throw Error("data", "z-score reference dataset is empty");
            }
            const auto ref = column_stats(use_source ? xs : xt);
            return {source.with_features(zscore(xs, ref.mean, ref.std)),
                    target.with_features(zscore(xt, ref.mean, ref.std))};
        }
        case NormalizationChoice::NoNorm:
            break;
    }
    return {source, target};
}

}  // namespace cpdp
