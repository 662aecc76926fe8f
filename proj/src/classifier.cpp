#include "cpdp/classifier.hpp"

#include "cpdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpdp {

namespace {

void check_width(const NbModel& model, std::size_t width) {
    if (width != model.feature_count()) {
        throw Error("shape", "instance has " + std::to_string(width) + " features, model expects " +
                                 std::to_string(model.feature_count()));
    }
}

double class_log_joint(const ClassParams& c, std::span<const double> x) {
    static const double log_two_pi = std::log(2.0 * std::numbers::pi);
    double s = c.log_prior;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - c.mean[j];
        s += -0.5 * (log_two_pi + std::log(c.variance[j])) - d * d / (2.0 * c.variance[j]);
    }
    return s;
}

nlohmann::json class_json(const ClassParams& c) {
    return {{"log_prior", c.log_prior}, {"mean", c.mean}, {"variance", c.variance}};
}

ClassParams class_from_json(const nlohmann::json& j, std::size_t width) {
    ClassParams c{j.at("log_prior").get<double>(), j.at("mean").get<std::vector<double>>(),
                  j.at("variance").get<std::vector<double>>()};
    if (c.mean.size() != width || c.variance.size() != width) {
        throw Error("parse", "class parameter arrays do not match feature_names");
    }
    if (std::any_of(c.variance.begin(), c.variance.end(), [](double v) { return !(v > 0.0); })) {
        throw Error("parse", "class variances must be positive");
    }
    return c;
}

}  // namespace

NbModel fit(const ProjectDataset& dataset, const FitOptions& options) {
    if (!(options.variance_floor > 0.0)) throw Error("config", "variance floor must be positive");
    const std::size_t f = dataset.feature_count();

    std::vector<double> sum[2] = {std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
    std::size_t count[2] = {0, 0};
    for (const auto& inst : dataset.instances()) {
        if (!inst.label) throw Error("data", "instance '" + inst.id + "' is unlabeled");
        const int k = *inst.label == Label::Faulty ? 0 : 1;
        ++count[k];
        for (std::size_t j = 0; j < f; ++j) sum[k][j] += inst.features[j];
    }
    if (count[0] == 0 || count[1] == 0) {
        throw Error("data", std::string("training set has no ") + (count[0] == 0 ? "FAULTY" : "CLEAN") +
                                " instances");
    }

    std::vector<double> mean[2];
    for (int k = 0; k < 2; ++k) {
        mean[k].resize(f);
        for (std::size_t j = 0; j < f; ++j) mean[k][j] = sum[k][j] / static_cast<double>(count[k]);
    }
    std::vector<double> ss[2] = {std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
    for (const auto& inst : dataset.instances()) {
        const int k = *inst.label == Label::Faulty ? 0 : 1;
        for (std::size_t j = 0; j < f; ++j) {
            const double d = inst.features[j] - mean[k][j];
            ss[k][j] += d * d;
        }
    }

    std::vector<double> floor(f, options.variance_floor);
    if (options.relative_floor) {
        const double n = static_cast<double>(dataset.size());
        for (std::size_t j = 0; j < f; ++j) {
            const double overall_mean = (sum[0][j] + sum[1][j]) / n;
            double v = 0.0;
            for (const auto& inst : dataset.instances()) {
                const double d = inst.features[j] - overall_mean;
                v += d * d;
            }
            v /= n;
            if (v > 0.0) floor[j] = options.variance_floor * v;
        }
    }

    const double n = static_cast<double>(dataset.size());
    NbModel model;
    model.feature_names = dataset.feature_names();
    ClassParams* params[2] = {&model.faulty, &model.clean};
    for (int k = 0; k < 2; ++k) {
        params[k]->log_prior = std::log(static_cast<double>(count[k]) / n);
        params[k]->mean = mean[k];
        params[k]->variance.resize(f);
        for (std::size_t j = 0; j < f; ++j) {
            params[k]->variance[j] = std::max(ss[k][j] / static_cast<double>(count[k]), floor[j]);
        }
    }
    return model;
}

std::pair<double, double> log_joint(const NbModel& model, std::span<const double> features) {
    check_width(model, features.size());
    return {class_log_joint(model.faulty, features), class_log_joint(model.clean, features)};
}

Posterior normalize_log_scores(double log_faulty, double log_clean) {
    const double top = std::max(log_faulty, log_clean);
    const double ef = std::exp(log_faulty - top);
    const double ec = std::exp(log_clean - top);
    const double z = ef + ec;
    return {ef / z, ec / z};
}

Posterior predict_proba(const NbModel& model, std::span<const double> features) {
    const auto [lf, lc] = log_joint(model, features);
    return normalize_log_scores(lf, lc);
}

Posterior predict_proba(const NbModel& model, const MetricInstance& instance) {
    return predict_proba(model, std::span<const double>(instance.features));
}

Label decide(const Posterior& posterior) {
    return posterior.faulty >= posterior.clean ? Label::Faulty : Label::Clean;
}

Label predict(const NbModel& model, const MetricInstance& instance) {
    return decide(predict_proba(model, instance));
}

std::vector<Label> predict_all(const NbModel& model, const ProjectDataset& dataset) {
    std::vector<Label> out;
    out.reserve(dataset.size());
    for (const auto& inst : dataset.instances()) out.push_back(predict(model, inst));
    return out;
}

nlohmann::json to_json(const NbModel& model) {
    return {{"feature_names", model.feature_names},
            {"faulty", class_json(model.faulty)},
            {"clean", class_json(model.clean)}};
}

NbModel nb_model_from_json(const nlohmann::json& j) {
    try {
        NbModel model;
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.faulty = class_from_json(j.at("faulty"), model.feature_names.size());
        model.clean = class_from_json(j.at("clean"), model.feature_names.size());
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error("parse", std::string("malformed Naive Bayes model JSON: ") + e.what());
    }
}

}  // namespace cpdp
