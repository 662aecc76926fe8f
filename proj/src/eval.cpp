#include "cpdp/eval.hpp"

#include "cpdp/error.hpp"
#include "cpdp/mmd.hpp"
#include "cpdp/text.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace cpdp {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json confusion_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) {
        throw Error("shape", "confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                                 std::to_string(truth.size()) + " labels");
    }
    if (predicted.empty()) throw Error("data", "confusion: nothing to score");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == Label::Faulty;
        const bool t = truth[i] == Label::Faulty;
        if (p && t) ++cm.tp;
        else if (p) ++cm.fp;
        else if (t) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

Scores f_measure(const ConfusionMatrix& cm) {
    Scores s;
    s.precision = ratio(cm.tp, cm.tp + cm.fp);
    s.recall = ratio(cm.tp, cm.tp + cm.fn);
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total()); }

std::string_view to_string(NormalizationMode mode) {
    switch (mode) {
        case NormalizationMode::AutoRules: return "auto-rules";
        case NormalizationMode::ZscoreSourceStats: return "zscore-source-stats";
        case NormalizationMode::None: return "none";
    }
    return "?";
}

NormalizationMode parse_normalization_mode(std::string_view s) {
    if (s == "auto-rules") return NormalizationMode::AutoRules;
    if (s == "zscore-source-stats") return NormalizationMode::ZscoreSourceStats;
    if (s == "none") return NormalizationMode::None;
    throw Error("config", "unknown normalization mode '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["normalization"] = to_string(c.normalization);
    j["thresholds"] = {{"much_less", c.thresholds.much_less},
                       {"less", c.thresholds.less},
                       {"same_upper", c.thresholds.same_upper},
                       {"more_upper", c.thresholds.more_upper}};
    j["gan"] = {{"epochs", c.gan.epochs},
                {"batch_size", c.gan.batch_size},
                {"d_steps_per_g_step", c.gan.d_steps_per_g_step},
                {"loss", gan::to_string(c.gan.loss_variant)},
                {"clamp_eps", c.gan.output_clamp_eps},
                {"hidden_dims", c.architecture.hidden_dims},
                {"generator_output", nn::to_string(c.architecture.generator_output)},
                {"generator_mode", gan::to_string(c.architecture.generator_mode)},
                {"center_generator", c.architecture.center_generator},
                {"r1_gamma", c.gan.r1_gamma},
                {"record_mmd", gan::to_string(c.gan.record_mmd)}};
    j["optimizer"] = {{"lr", c.gan.optimizer.lr},
                      {"beta1", c.gan.optimizer.beta1},
                      {"beta2", c.gan.optimizer.beta2},
                      {"eps", c.gan.optimizer.eps}};
    j["classifier"] = {{"variance_floor", c.classifier.variance_floor},
                       {"relative_floor", c.classifier.relative_floor}};
    if (c.expected_features) j["expected_features"] = *c.expected_features;
    j["seed"] = c.gan.seed;
    return j;
}

PipelineResult run_pipeline_detailed(const ProjectDataset& source, const ProjectDataset& target,
                                     const PipelineConfig& config) {
    if (source.feature_count() != target.feature_count()) {
        throw Error("shape", "feature count mismatch: source has " + std::to_string(source.feature_count()) +
                                 " features, target has " + std::to_string(target.feature_count()));
    }
    if (config.expected_features && source.feature_count() != *config.expected_features) {
        throw Error("shape", "expected " + std::to_string(*config.expected_features) +
                                 " features, datasets have " + std::to_string(source.feature_count()));
    }
    if (source.empty() || target.empty()) throw Error("data", "empty dataset");
    if (!source.fully_labeled()) throw Error("data", "source dataset '" + source.name() + "' is not fully labeled");
    if (!target.fully_labeled()) {
        throw Error("data", "target dataset '" + target.name() + "' needs labels for scoring");
    }

    // Everything up to scoring sees only the label-free view of the target.
    const ProjectDataset target_view = target.without_labels();

    EvaluationReport report;
    report.source_name = source.name();
    report.target_name = target.name();
    report.epochs = config.gan.epochs;
    report.seed = config.gan.seed;
    report.config = to_json(config);

    NormalizationChoice choice = NormalizationChoice::NoNorm;
    switch (config.normalization) {
        case NormalizationMode::None: break;
        case NormalizationMode::ZscoreSourceStats: choice = NormalizationChoice::ZscoreSourceStats; break;
        case NormalizationMode::AutoRules: {
            const auto levels =
                compare(pairwise_dist(source), pairwise_dist(target_view), config.thresholds);
            const auto decision = select_rule(levels, source.size(), target_view.size());
            choice = decision.choice;
            report.rule_id = decision.rule_id;
            break;
        }
    }
    report.normalization = choice;
    auto [source_norm, target_norm] = apply_normalization(choice, source, target_view);

    report.mmd_before = mmd(target_norm, source_norm);

    auto model = gan::build(source.feature_count(), config.architecture, config.gan.seed);
    if (config.architecture.center_generator) gan::center_generator(model, target_norm.feature_matrix());
    auto trained = gan::train(std::move(model), source_norm, target_norm, config.gan);
    const ProjectDataset adapted = gan::transform(trained.model, target_norm);
    report.mmd_after = mmd(adapted, source_norm);

    NbModel nb = fit(source_norm, config.classifier);
    const auto predicted = predict_all(nb, adapted);

    std::vector<Label> truth;
    truth.reserve(target.size());
    for (const auto& inst : target.instances()) truth.push_back(*inst.label);

    report.confusion = confusion(predicted, truth);
    const auto scores = f_measure(report.confusion);
    report.precision = scores.precision;
    report.recall = scores.recall;
    report.f1 = scores.f1;
    report.accuracy = accuracy(report.confusion);

    return PipelineResult{std::move(report), std::move(trained.model), std::move(trained.trace), std::move(nb)};
}

EvaluationReport run_pipeline(const ProjectDataset& source, const ProjectDataset& target,
                              const PipelineConfig& config) {
    return run_pipeline_detailed(source, target, config).report;
}

std::vector<EvaluationReport> epoch_sweep(const ProjectDataset& source, const ProjectDataset& target,
                                          std::span<const std::size_t> epoch_list,
                                          const PipelineConfig& config) {
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<EvaluationReport> reports;
    reports.reserve(epoch_list.size());
    for (std::size_t start = 0; start < epoch_list.size(); start += workers) {
        const std::size_t end = std::min(epoch_list.size(), start + workers);
        std::vector<std::future<EvaluationReport>> pending;
        for (std::size_t i = start; i < end; ++i) {
            PipelineConfig point = config;
            point.gan.epochs = epoch_list[i];
            point.gan.seed = config.gan.seed + epoch_list[i];
            pending.push_back(std::async(std::launch::async, [&source, &target, point] {
                return run_pipeline(source, target, point);
            }));
        }
        for (auto& f : pending) reports.push_back(f.get());
    }
    return reports;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["source"] = r.source_name;
    j["target"] = r.target_name;
    j["epochs"] = r.epochs;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["accuracy"] = r.accuracy;
    j["confusion"] = confusion_json(r.confusion);
    j["mmd_before"] = r.mmd_before;
    j["mmd_after"] = r.mmd_after;
    j["normalization"] = to_string(r.normalization);
    if (r.rule_id) j["rule_id"] = *r.rule_id;
    j["seed"] = r.seed;
    j["config"] = r.config;
    return j;
}

std::string to_csv_row(const EvaluationReport& r) {
    std::ostringstream row;
    row << r.source_name << ',' << r.target_name << ',' << r.epochs << ',' << format_double(r.precision) << ','
        << format_double(r.recall) << ',' << format_double(r.f1) << ',' << format_double(r.accuracy) << ','
        << format_double(r.mmd_before) << ',' << format_double(r.mmd_after) << ',' << r.seed;
    return row.str();
}

void write_sweep_csv(std::span<const EvaluationReport> reports, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << kSweepCsvHeader << '\n';
    for (const auto& r : reports) out << to_csv_row(r) << '\n';
    if (!out) throw Error("io", "failed writing " + path.string());
}

}  // namespace cpdp
