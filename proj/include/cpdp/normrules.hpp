#pragma once

#include "cpdp/dataset.hpp"

#include <string_view>
#include <utility>

namespace cpdp {

/// Summary of the multiset of pairwise Euclidean distances within a dataset.
struct DistStats {
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std = 0.0;  // population
    std::size_t n_instances = 0;
};

enum class SimilarityLevel { MuchLess, Less, Same, More, MuchMore };

enum class NormalizationChoice { NoNorm, MinMax, ZscoreSourceStats, ZscoreTargetStats, Zscore };

std::string_view to_string(SimilarityLevel level);
std::string_view to_string(NormalizationChoice choice);

/// Ratio bands for target/source: below much_less is MUCH-LESS, below less is
/// LESS, up to same_upper is SAME, up to more_upper is MORE, above that
/// MUCH-MORE.
struct SimilarityThresholds {
    double much_less = 0.4;
    double less = 0.9;
    double same_upper = 1.1;
    double more_upper = 2.5;
};

struct DistComparison {
    SimilarityLevel mean = SimilarityLevel::Same;
    SimilarityLevel median = SimilarityLevel::Same;
    SimilarityLevel min = SimilarityLevel::Same;
    SimilarityLevel max = SimilarityLevel::Same;
    SimilarityLevel std = SimilarityLevel::Same;
    SimilarityLevel n_instances = SimilarityLevel::Same;
};

struct RuleDecision {
    int rule_id = 5;
    NormalizationChoice choice = NormalizationChoice::Zscore;
};

DistStats pairwise_dist(const ProjectDataset& dataset);

SimilarityLevel classify_ratio(double source_value, double target_value,
                               const SimilarityThresholds& thresholds = {});

DistComparison compare(const DistStats& source, const DistStats& target,
                       const SimilarityThresholds& thresholds = {});

RuleDecision select_rule(const DistComparison& levels, std::size_t n_source, std::size_t n_target);

std::pair<ProjectDataset, ProjectDataset> apply_normalization(NormalizationChoice choice,
                                                              const ProjectDataset& source,
                                                              const ProjectDataset& target);

}  // namespace cpdp
