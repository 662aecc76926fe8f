#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cpdp {

enum class Label { Faulty, Clean };

std::string_view to_string(Label label);

/// Parses `1`/`0`/`faulty`/`clean` (case-insensitive). Returns nullopt for
/// anything else.
std::optional<Label> parse_label(std::string_view token);

struct MetricInstance {
    std::string id;
    std::vector<double> features;
    std::optional<Label> label;
};

/// A named table of software-metric vectors of a fixed width F.
///
/// Construction validates that every instance has exactly F finite features;
/// the object is immutable afterwards.
class ProjectDataset {
public:
    ProjectDataset(std::string name, std::vector<std::string> feature_names,
                   std::vector<MetricInstance> instances);

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<MetricInstance>& instances() const noexcept { return instances_; }

    std::size_t feature_count() const noexcept { return feature_names_.size(); }
    std::size_t size() const noexcept { return instances_.size(); }
    bool empty() const noexcept { return instances_.empty(); }

    bool fully_labeled() const noexcept;

    /// Row-major copy of the feature values, one row per instance.
    Eigen::MatrixXd feature_matrix() const;

    /// Same ids and labels, features replaced row by row. Throws on shape
    /// mismatch.
    ProjectDataset with_features(const Eigen::MatrixXd& features) const;

    /// Same instances with every label removed.
    ProjectDataset without_labels() const;

    ProjectDataset renamed(std::string name) const;

private:
    std::string name_;
    std::vector<std::string> feature_names_;
    std::vector<MetricInstance> instances_;
};

struct DatasetStats {
    std::size_t n_instances = 0;
    std::size_t n_faulty = 0;
    double buggy_rate = 0.0;  // percent, exact

    /// buggy_rate rounded half-away-from-zero to two decimals.
    double display_buggy_rate() const;
};

/// Reads a comma-separated metric table. An `id` column (matched by name) is
/// taken as the instance id; `label_column`, when given, must exist and hold
/// label tokens. All other columns become features in file order.
ProjectDataset load_csv(const std::filesystem::path& path,
                        const std::optional<std::string>& label_column = std::nullopt);

/// Writes `id,<features...>[,label_column]`. Labels are written as 1/0; the
/// label column is emitted only when `label_column` is given. Values use the
/// shortest decimal form that reads back to the same double.
void save_csv(const ProjectDataset& dataset, const std::filesystem::path& path,
              const std::optional<std::string>& label_column = std::nullopt);

DatasetStats stats(const ProjectDataset& dataset);

struct SynthesisSpec {
    std::size_t n = 0;
    std::size_t feature_count = 0;
    std::vector<double> faulty_mean;
    std::vector<double> clean_mean;
    double class_std = 1.0;
    double buggy_fraction = 0.0;
    std::uint64_t seed = 0;
    std::string name = "synthetic";
};

/// Draws floor(buggy_fraction * n) faulty instances around faulty_mean and
/// the remainder around clean_mean, each feature independently Gaussian.
/// Faulty rows come first.
ProjectDataset synthesize(const SynthesisSpec& spec);

/// Adds `offset` to every feature of every instance.
ProjectDataset shifted(const ProjectDataset& dataset, const std::vector<double>& offset,
                       std::string name);

}  // namespace cpdp
