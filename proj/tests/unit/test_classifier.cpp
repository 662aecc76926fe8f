#include "cpdp/classifier.hpp"
#include "cpdp/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cpdp;

namespace {

ProjectDataset one_feature(std::vector<std::pair<double, Label>> rows) {
    std::vector<MetricInstance> inst;
    for (auto [x, y] : rows) inst.push_back({"r", {x}, y});
    return ProjectDataset("d", {"x"}, inst);
}

NbModel symmetric_model() {
    NbModel m;
    m.feature_names = {"x"};
    m.faulty = {std::log(0.5), {1.0}, {1.0}};
    m.clean = {std::log(0.5), {-1.0}, {1.0}};
    return m;
}

// Prior times the explicit product of Gaussian densities, normalised.
std::pair<double, double> brute_force(const NbModel& m, const std::vector<double>& x) {
    auto joint = [&](const ClassParams& c) {
        double p = std::exp(c.log_prior);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - c.mean[j];
            p *= std::exp(-d * d / (2.0 * c.variance[j])) / std::sqrt(2.0 * std::numbers::pi * c.variance[j]);
        }
        return p;
    };
    const double f = joint(m.faulty);
    const double c = joint(m.clean);
    return {f / (f + c), c / (f + c)};
}

}  // namespace

TEST(Fit, HandComputedFourInstanceModel) {
    const auto m = fit(one_feature({{1.0, Label::Faulty}, {3.0, Label::Faulty}, {-1.0, Label::Clean},
                                    {-3.0, Label::Clean}}));
    EXPECT_EQ(m.faulty.mean[0], 2.0);
    EXPECT_EQ(m.faulty.variance[0], 1.0);
    EXPECT_EQ(m.clean.mean[0], -2.0);
    EXPECT_EQ(m.clean.variance[0], 1.0);
    EXPECT_EQ(m.faulty.log_prior, std::log(0.5));
    EXPECT_EQ(m.clean.log_prior, std::log(0.5));
}

TEST(Fit, PriorsFollowClassFrequencies) {
    const auto m = fit(one_feature({{1, Label::Faulty}, {2, Label::Clean}, {3, Label::Clean}, {4, Label::Clean}}));
    EXPECT_NEAR(std::exp(m.faulty.log_prior), 0.25, 1e-15);
    EXPECT_NEAR(std::exp(m.faulty.log_prior) + std::exp(m.clean.log_prior), 1.0, 1e-15);
}

TEST(Fit, ConstantFeatureGetsTheFloor) {
    // Faulty column is constant; overall population variance of {5,5,1,3} is 2.75.
    const auto rel = fit(one_feature({{5, Label::Faulty}, {5, Label::Faulty}, {1, Label::Clean}, {3, Label::Clean}}));
    EXPECT_NEAR(rel.faulty.variance[0], 1e-9 * 2.75, 1e-24);
    const auto abs = fit(one_feature({{5, Label::Faulty}, {5, Label::Faulty}, {1, Label::Clean}, {3, Label::Clean}}),
                         FitOptions{1e-3, false});
    EXPECT_EQ(abs.faulty.variance[0], 1e-3);
    const auto flat = fit(one_feature({{5, Label::Faulty}, {5, Label::Clean}}));
    EXPECT_EQ(flat.faulty.variance[0], 1e-9);
    EXPECT_GT(flat.clean.variance[0], 0.0);
}

TEST(Fit, Rejections) {
    EXPECT_THROW(fit(one_feature({{1, Label::Faulty}, {2, Label::Faulty}})), Error);
    EXPECT_THROW(fit(ProjectDataset("d", {"x"}, {{"a", {1.0}, Label::Faulty}, {"b", {2.0}, std::nullopt}})), Error);
    EXPECT_THROW(fit(one_feature({{1, Label::Faulty}, {2, Label::Clean}}), FitOptions{0.0, true}), Error);
}

TEST(PredictProba, SymmetricModel) {
    const auto m = symmetric_model();
    const std::vector<double> zero{0.0};
    const auto p = predict_proba(m, zero);
    EXPECT_EQ(p.faulty, 0.5);
    EXPECT_EQ(p.clean, 0.5);
    const std::vector<double> one{1.0};
    EXPECT_GT(predict_proba(m, one).faulty, 0.5);
}

TEST(PredictProba, MatchesBruteForceBayes) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.2, 3.0);
    std::uniform_real_distribution<double> prior(0.05, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t f = 1 + rng() % 3;
        NbModel m;
        const double pf = prior(rng);
        m.faulty.log_prior = std::log(pf);
        m.clean.log_prior = std::log1p(-pf);
        for (std::size_t j = 0; j < f; ++j) {
            m.feature_names.push_back("m" + std::to_string(j));
            m.faulty.mean.push_back(u(rng));
            m.clean.mean.push_back(u(rng));
            m.faulty.variance.push_back(var(rng));
            m.clean.variance.push_back(var(rng));
        }
        std::vector<double> x(f);
        for (auto& v : x) v = u(rng);
        const auto got = predict_proba(m, x);
        const auto [bf, bc] = brute_force(m, x);
        EXPECT_NEAR(got.faulty, bf, 1e-9);
        EXPECT_NEAR(got.clean, bc, 1e-9);
        EXPECT_NEAR(got.faulty + got.clean, 1.0, 1e-12);
        EXPECT_EQ(predict(m, {"i", x, std::nullopt}), bf >= bc ? Label::Faulty : Label::Clean);
    }
}

TEST(PredictProba, FiniteFarFromBothClasses) {
    const auto m = symmetric_model();
    const std::vector<double> far{1e6};
    const auto p = predict_proba(m, far);
    EXPECT_TRUE(std::isfinite(p.faulty));
    EXPECT_EQ(p.faulty, 1.0);
    EXPECT_NEAR(p.faulty + p.clean, 1.0, 1e-12);
}

TEST(PredictProba, WidthMismatch) {
    const std::vector<double> two{1.0, 2.0};
    EXPECT_THROW(predict_proba(symmetric_model(), two), Error);
}

TEST(NormalizeLogScores, InvariantToCommonShift) {
    const auto base = normalize_log_scores(-3.2, -1.1);
    for (double c : {-1e4, -50.0, 0.0, 700.0, 1e5}) {
        const auto p = normalize_log_scores(-3.2 + c, -1.1 + c);
        EXPECT_NEAR(p.faulty, base.faulty, 1e-12);
        EXPECT_NEAR(p.clean, base.clean, 1e-12);
    }
}

TEST(Decide, ArgmaxWithFaultyTieBreak) {
    EXPECT_EQ(decide({0.9, 0.1}), Label::Faulty);
    EXPECT_EQ(decide({0.1, 0.9}), Label::Clean);
    EXPECT_EQ(decide({0.5, 0.5}), Label::Faulty);
}

TEST(Predict, SeparatedClassesAreLearnedPerfectly) {
    const auto ds = synthesize({300, 3, {6, 6, 6}, {0, 0, 0}, 1.0, 0.5, 77, "sep"});
    const auto nb = fit(ds);
    const auto pred = predict_all(nb, ds);
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(pred[i], *ds.instances()[i].label);
}

TEST(Serialization, JsonRoundTrip) {
    const auto nb = fit(synthesize({40, 2, {1, 1}, {0, 0}, 1.0, 0.5, 3, "s"}));
    const auto back = nb_model_from_json(nlohmann::json::parse(to_json(nb).dump()));
    EXPECT_EQ(back.feature_names, nb.feature_names);
    EXPECT_EQ(back.faulty.mean, nb.faulty.mean);
    EXPECT_EQ(back.clean.variance, nb.clean.variance);
    EXPECT_EQ(back.faulty.log_prior, nb.faulty.log_prior);
    auto j = to_json(nb);
    j["faulty"]["variance"][0] = 0.0;
    EXPECT_THROW(nb_model_from_json(j), Error);
    j.erase("clean");
    EXPECT_THROW(nb_model_from_json(j), Error);
}
