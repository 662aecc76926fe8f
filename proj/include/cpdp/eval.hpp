#pragma once

#include "cpdp/classifier.hpp"
#include "cpdp/dataset.hpp"
#include "cpdp/gan.hpp"
#include "cpdp/normrules.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cpdp {

/// FAULTY is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// Zero denominators yield 0 rather than NaN.
Scores f_measure(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

enum class NormalizationMode { AutoRules, ZscoreSourceStats, None };

std::string_view to_string(NormalizationMode mode);
NormalizationMode parse_normalization_mode(std::string_view s);

struct PipelineConfig {
    NormalizationMode normalization = NormalizationMode::ZscoreSourceStats;
    SimilarityThresholds thresholds{};
    gan::Architecture architecture{};
    gan::GanConfig gan{};  // gan.seed seeds the whole run
    FitOptions classifier{};
    std::optional<std::size_t> expected_features;
};

nlohmann::ordered_json to_json(const PipelineConfig& config);

struct EvaluationReport {
    std::string source_name;
    std::string target_name;
    std::size_t epochs = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    double mmd_before = 0.0;
    double mmd_after = 0.0;
    NormalizationChoice normalization = NormalizationChoice::NoNorm;
    std::optional<int> rule_id;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;
};

struct PipelineResult {
    EvaluationReport report;
    gan::GanModel model;
    gan::TrainingTrace trace;
    NbModel classifier;
};

/// normalize -> train GAN -> transform target -> fit NB on source -> score
/// on the transformed target. Target labels are consulted only when scoring.
PipelineResult run_pipeline_detailed(const ProjectDataset& source, const ProjectDataset& target,
                                     const PipelineConfig& config);

EvaluationReport run_pipeline(const ProjectDataset& source, const ProjectDataset& target,
                              const PipelineConfig& config);

/// One independent run per entry of `epoch_list`, seeded with
/// config.gan.seed + epochs. Points may run concurrently; the result follows
/// the order of `epoch_list`.
std::vector<EvaluationReport> epoch_sweep(const ProjectDataset& source, const ProjectDataset& target,
                                          std::span<const std::size_t> epoch_list,
                                          const PipelineConfig& config);

nlohmann::ordered_json to_json(const EvaluationReport& report);

inline constexpr const char* kSweepCsvHeader =
    "source,target,epochs,precision,recall,f1,accuracy,mmd_before,mmd_after,seed";

std::string to_csv_row(const EvaluationReport& report);
void write_sweep_csv(std::span<const EvaluationReport> reports, const std::filesystem::path& path);

}  // namespace cpdp
