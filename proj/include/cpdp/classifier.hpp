#pragma once

#include "cpdp/dataset.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace cpdp {

struct FitOptions {
    // When `relative_floor` is set the floor for feature j is
    // variance_floor * (population variance of feature j over the whole
    // training set), falling back to variance_floor itself for constant
    // features.
    double variance_floor = 1e-9;
    bool relative_floor = true;
};

struct ClassParams {
    double log_prior = 0.0;
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Gaussian Naive Bayes over the two defect classes.
struct NbModel {
    std::vector<std::string> feature_names;
    ClassParams faulty;
    ClassParams clean;

    std::size_t feature_count() const { return feature_names.size(); }
};

struct Posterior {
    double faulty = 0.5;
    double clean = 0.5;
};

NbModel fit(const ProjectDataset& dataset, const FitOptions& options = {});

/// log P(class) + sum_j log N(x_j; mean, variance), for each class.
std::pair<double, double> log_joint(const NbModel& model, std::span<const double> features);

/// Normalises a pair of log scores with a max-shifted log-sum-exp.
Posterior normalize_log_scores(double log_faulty, double log_clean);

Posterior predict_proba(const NbModel& model, std::span<const double> features);
Posterior predict_proba(const NbModel& model, const MetricInstance& instance);

/// Argmax of the posterior; exact ties go to FAULTY.
Label decide(const Posterior& posterior);
Label predict(const NbModel& model, const MetricInstance& instance);
std::vector<Label> predict_all(const NbModel& model, const ProjectDataset& dataset);

nlohmann::json to_json(const NbModel& model);
NbModel nb_model_from_json(const nlohmann::json& j);

}  // namespace cpdp
