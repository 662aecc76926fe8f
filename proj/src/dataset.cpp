#include "cpdp/dataset.hpp"

#include "cpdp/error.hpp"
#include "cpdp/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

namespace cpdp {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view to_string(Label label) {
    return label == Label::Faulty ? "FAULTY" : "CLEAN";
}

std::optional<Label> parse_label(std::string_view token) {
    const auto t = lower(trim(token));
    if (t == "1" || t == "faulty") return Label::Faulty;
    if (t == "0" || t == "clean") return Label::Clean;
    return std::nullopt;
}

ProjectDataset::ProjectDataset(std::string name, std::vector<std::string> feature_names,
                               std::vector<MetricInstance> instances)
    : name_(std::move(name)),
      feature_names_(std::move(feature_names)),
      instances_(std::move(instances)) {
    if (feature_names_.empty()) {
        throw Error("data", "dataset '" + name_ + "' has no feature columns");
    }
    for (std::size_t k = 0; k < instances_.size(); ++k) {
        const auto& inst = instances_[k];
        if (inst.features.size() != feature_names_.size()) {
            throw Error("shape", "instance " + std::to_string(k) + " of '" + name_ + "' has " +
                                     std::to_string(inst.features.size()) + " features, expected " +
                                     std::to_string(feature_names_.size()));
        }
        for (double v : inst.features) {
            if (!std::isfinite(v)) {
                throw Error("numeric", "instance " + std::to_string(k) + " of '" + name_ +
                                           "' has a non-finite feature value");
            }
        }
    }
}

bool ProjectDataset::fully_labeled() const noexcept {
    return std::all_of(instances_.begin(), instances_.end(),
                       [](const MetricInstance& i) { return i.label.has_value(); });
}

Eigen::MatrixXd ProjectDataset::feature_matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(feature_count()));
    for (std::size_t r = 0; r < size(); ++r) {
        for (std::size_t c = 0; c < feature_count(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = instances_[r].features[c];
        }
    }
    return m;
}

ProjectDataset ProjectDataset::with_features(const Eigen::MatrixXd& features) const {
    if (static_cast<std::size_t>(features.rows()) != size() ||
        static_cast<std::size_t>(features.cols()) != feature_count()) {
        throw Error("shape", "feature matrix is " + std::to_string(features.rows()) + "x" +
                                 std::to_string(features.cols()) + ", dataset '" + name_ + "' is " +
                                 std::to_string(size()) + "x" + std::to_string(feature_count()));
    }
    auto instances = instances_;
    for (std::size_t r = 0; r < instances.size(); ++r) {
        for (std::size_t c = 0; c < feature_count(); ++c) {
            instances[r].features[c] =
                features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
    return ProjectDataset(name_, feature_names_, std::move(instances));
}

ProjectDataset ProjectDataset::without_labels() const {
    auto instances = instances_;
    for (auto& inst : instances) inst.label.reset();
    return ProjectDataset(name_, feature_names_, std::move(instances));
}

ProjectDataset ProjectDataset::renamed(std::string name) const {
    return ProjectDataset(std::move(name), feature_names_, instances_);
}

double DatasetStats::display_buggy_rate() const {
    return std::round(buggy_rate * 100.0) / 100.0;
}

ProjectDataset load_csv(const std::filesystem::path& path,
                        const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error("data", "empty dataset: " + path.string() + " has no header row");

    std::optional<std::size_t> id_col;
    std::optional<std::size_t> label_col;
    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (label_column && header[c] == *label_column) {
            label_col = c;
        } else if (!id_col && lower(header[c]) == "id") {
            id_col = c;
        } else {
            feature_cols.push_back(c);
            feature_names.push_back(header[c]);
        }
    }
    if (label_column && !label_col) {
        throw Error("data", "label column '" + *label_column + "' not found in " + path.string());
    }
    if (feature_cols.empty()) throw Error("data", path.string() + " has no feature columns");

    std::vector<MetricInstance> instances;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw Error("parse", path.string() + ": row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        MetricInstance inst;
        inst.id = id_col ? cells[*id_col] : "row-" + std::to_string(row);
        if (label_col) {
            inst.label = parse_label(cells[*label_col]);
            if (!inst.label) {
                throw Error("parse", path.string() + ": row " + std::to_string(row) + ", column '" +
                                         *label_column + "': unknown label token '" +
                                         cells[*label_col] + "'");
            }
        }
        inst.features.reserve(feature_cols.size());
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            const auto v = parse_double(cells[feature_cols[k]]);
            if (!v) {
                throw Error("parse", path.string() + ": row " + std::to_string(row) + ", column '" +
                                         feature_names[k] + "': non-numeric value '" +
                                         cells[feature_cols[k]] + "'");
            }
            inst.features.push_back(*v);
        }
        instances.push_back(std::move(inst));
    }
    return ProjectDataset(path.stem().string(), std::move(feature_names), std::move(instances));
}

void save_csv(const ProjectDataset& dataset, const std::filesystem::path& path,
              const std::optional<std::string>& label_column) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << "id";
    for (const auto& name : dataset.feature_names()) out << ',' << name;
    if (label_column) out << ',' << *label_column;
    out << '\n';
    for (const auto& inst : dataset.instances()) {
        out << inst.id;
        for (double v : inst.features) out << ',' << format_double(v);
        if (label_column) {
            if (!inst.label) {
                throw Error("data", "instance '" + inst.id + "' has no label to write");
            }
            out << ',' << (*inst.label == Label::Faulty ? '1' : '0');
        }
        out << '\n';
    }
    if (!out) throw Error("io", "failed writing " + path.string());
}

DatasetStats stats(const ProjectDataset& dataset) {
    if (dataset.empty()) throw Error("data", "empty dataset");
    DatasetStats s;
    s.n_instances = dataset.size();
    for (const auto& inst : dataset.instances()) {
        if (!inst.label) throw Error("data", "instance '" + inst.id + "' is unlabeled");
        if (*inst.label == Label::Faulty) ++s.n_faulty;
    }
    s.buggy_rate = 100.0 * static_cast<double>(s.n_faulty) / static_cast<double>(s.n_instances);
    return s;
}

ProjectDataset synthesize(const SynthesisSpec& spec) {
    if (spec.n < 1) throw Error("config", "synthesize: n must be at least 1");
    if (spec.feature_count < 1) throw Error("config", "synthesize: feature count must be at least 1");
    if (!(spec.class_std > 0.0) || !std::isfinite(spec.class_std)) {
        throw Error("config", "synthesize: class_std must be positive");
    }
    if (!(spec.buggy_fraction >= 0.0 && spec.buggy_fraction <= 1.0)) {
        throw Error("config", "synthesize: buggy_fraction must lie in [0, 1]");
    }
    if (spec.faulty_mean.size() != spec.feature_count || spec.clean_mean.size() != spec.feature_count) {
        throw Error("config", "synthesize: class means must have one entry per feature");
    }

    const auto n_faulty = static_cast<std::size_t>(
        std::floor(spec.buggy_fraction * static_cast<double>(spec.n)));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.class_std);

    std::vector<std::string> names;
    for (std::size_t c = 0; c < spec.feature_count; ++c) names.push_back("m" + std::to_string(c));

    std::vector<MetricInstance> instances;
    instances.reserve(spec.n);
    for (std::size_t k = 0; k < spec.n; ++k) {
        const bool faulty = k < n_faulty;
        const auto& mean = faulty ? spec.faulty_mean : spec.clean_mean;
        MetricInstance inst;
        inst.id = "row-" + std::to_string(k + 1);
        inst.label = faulty ? Label::Faulty : Label::Clean;
        inst.features.resize(spec.feature_count);
        for (std::size_t c = 0; c < spec.feature_count; ++c) inst.features[c] = mean[c] + noise(rng);
        instances.push_back(std::move(inst));
    }
    return ProjectDataset(spec.name, std::move(names), std::move(instances));
}

ProjectDataset shifted(const ProjectDataset& dataset, const std::vector<double>& offset,
                       std::string name) {
    if (offset.size() != dataset.feature_count()) {
        throw Error("shape", "offset has " + std::to_string(offset.size()) + " entries, dataset has " +
                                 std::to_string(dataset.feature_count()) + " features");
    }
    auto instances = dataset.instances();
    for (auto& inst : instances) {
        for (std::size_t c = 0; c < offset.size(); ++c) inst.features[c] += offset[c];
    }
    return ProjectDataset(std::move(name), dataset.feature_names(), std::move(instances));
}

}  // namespace cpdp
