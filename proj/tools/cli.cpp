#include "cli.hpp"

#include "cpdp/error.hpp"
#include "cpdp/text.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

namespace cpdp::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kDefaultLabelColumn = "bug";
constexpr const char* kOutputDirEnv = "CPDP_OUTPUT_DIR";

// A JSON object whose keys must all be consumed; leftovers are reported as
// unknown so that typos in a config file do not pass silently.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail("", "must be an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    template <class T>
    std::optional<T> get(const char* key) {
        if (!j_.contains(key)) return std::nullopt;
        seen_.insert(key);
        const json& v = j_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(key, "expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) fail(key, "expected a number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(key, "expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
            if (!v.is_array()) fail(key, "expected an array of non-negative integers");
            std::vector<std::size_t> out;
            for (const auto& e : v) {
                if (!e.is_number_unsigned()) fail(key, "expected an array of non-negative integers");
                out.push_back(e.get<std::size_t>());
            }
            return out;
        } else {
            static_assert(sizeof(T) == 0, "unsupported config field type");
        }
    }

    Section child(const char* key) {
        seen_.insert(key);
        return Section(j_.at(key), where_.empty() ? key : where_ + "." + key);
    }

    void reject_unknown() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) fail(item.key().c_str(), "unknown key");
        }
    }

    [[noreturn]] void fail(const char* key, const std::string& what) const {
        std::string path = where_;
        if (*key) path += path.empty() ? key : std::string(".") + key;
        throw Error("config", (path.empty() ? std::string("top level") : path) + ": " + what);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

DatasetRef parse_dataset_ref(Section s, const std::filesystem::path& base_dir) {
    DatasetRef ref;
    const auto path = s.get<std::string>("path");
    if (!path || path->empty()) s.fail("path", "required");
    ref.path = base_dir / *path;
    if (s.has("label_column") && s.get<std::string>("label_column")->empty()) {
        ref.label_column.reset();
    } else {
        ref.label_column = s.get<std::string>("label_column").value_or(kDefaultLabelColumn);
    }
    s.reject_unknown();
    return ref;
}

template <class T>
void assign(std::optional<T> v, T& target) {
    if (v) target = *v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("io", "cannot write " + path.string());
    f << text;
    if (!f) throw Error("io", "failed writing " + path.string());
}

template <class J>
void write_json(const std::filesystem::path& path, const J& j) {
    write_text(path, j.dump(2) + "\n");
}

ordered_json dist_json(const DistStats& d) {
    return {{"mean", d.mean}, {"median", d.median}, {"min", d.min},
            {"max", d.max},   {"std", d.std},       {"n_instances", d.n_instances}};
}

ordered_json levels_json(const DistComparison& c) {
    return {{"mean", to_string(c.mean)}, {"median", to_string(c.median)},
            {"min", to_string(c.min)},   {"max", to_string(c.max)},
            {"std", to_string(c.std)},   {"n_instances", to_string(c.n_instances)}};
}

std::optional<std::string> label_option(const std::string& flag_value) {
    if (flag_value.empty()) return std::nullopt;
    return flag_value;
}

// Flag beats environment beats config file; the working directory is last.
std::filesystem::path resolve_output_dir(const std::string& flag, const RunConfig& config) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    if (config.output_dir) return *config.output_dir;
    return ".";
}

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create output directory " + dir.string() + ": " + ec.message());
}

// Error lines must stay on one line.
std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

struct Loaded {
    ProjectDataset source;
    ProjectDataset target;
};

Loaded load_pair(const RunConfig& config) {
    return {load_csv(config.source.path, config.source.label_column),
            load_csv(config.target.path, config.target.label_column)};
}

int cmd_stats(const std::string& path, const std::string& label_column, std::ostream& out) {
    if (label_column.empty()) throw Error("usage", "stats needs a label column");
    const auto s = stats(load_csv(path, label_column));
    ordered_json j{{"n", s.n_instances}, {"faulty", s.n_faulty}, {"buggy_rate", s.display_buggy_rate()}};
    out << j.dump() << '\n';
    return 0;
}

int cmd_norm_select(const std::string& source_path, const std::string& target_path,
                    const std::string& label_column, std::ostream& out) {
    const auto source = load_csv(source_path, label_option(label_column));
    const auto target = load_csv(target_path, label_option(label_column));
    if (source.feature_count() != target.feature_count()) {
        throw Error("shape", "feature count mismatch: source has " + std::to_string(source.feature_count()) +
                                 " features, target has " + std::to_string(target.feature_count()));
    }
    const auto ds = pairwise_dist(source);
    const auto dt = pairwise_dist(target);
    const auto levels = compare(ds, dt);
    const auto decision = select_rule(levels, source.size(), target.size());
    ordered_json j;
    j["source"] = dist_json(ds);
    j["target"] = dist_json(dt);
    j["levels"] = levels_json(levels);
    j["rule_id"] = decision.rule_id;
    j["choice"] = to_string(decision.choice);
    out << j.dump(2) << '\n';
    return 0;
}

struct RunFlags {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
};

RunConfig config_with_overrides(const RunFlags& flags) {
    RunConfig config = load_run_config(flags.config);
    if (flags.seed) config.pipeline.gan.seed = *flags.seed;
    if (flags.epochs) config.pipeline.gan.epochs = *flags.epochs;
    return config;
}

int cmd_train(const RunFlags& flags, std::ostream& out) {
    const RunConfig config = config_with_overrides(flags);
    const auto dir = resolve_output_dir(flags.output_dir, config);
    const auto data = load_pair(config);
    const auto result = run_pipeline_detailed(data.source, data.target, config.pipeline);

    prepare_dir(dir);
    write_json(dir / "model.json", gan::to_json(result.model));
    write_json(dir / "nb_model.json", to_json(result.classifier));
    gan::write_trace_csv(result.trace, dir / "trace.csv");
    const auto report = to_json(result.report);
    write_json(dir / "report.json", report);
    out << report.dump(2) << '\n';
    return 0;
}

int cmd_sweep(const RunFlags& flags, const std::string& epoch_text, std::ostream& out) {
    const auto epochs = parse_epoch_list(epoch_text);
    const RunConfig config = config_with_overrides(flags);
    const auto dir = resolve_output_dir(flags.output_dir, config);
    const auto data = load_pair(config);
    const auto reports = epoch_sweep(data.source, data.target, epochs, config.pipeline);

    prepare_dir(dir);
    write_sweep_csv(reports, dir / "sweep.csv");
    out << kSweepCsvHeader << '\n';
    for (const auto& r : reports) out << to_csv_row(r) << '\n';
    return 0;
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
    Section top(j, "");
    RunConfig config;
    auto& p = config.pipeline;

    const auto seed = top.get<std::uint64_t>("seed");
    if (!seed) top.fail("seed", "required (runs are seeded explicitly)");
    p.gan.seed = *seed;

    if (!top.has("source")) top.fail("source", "required");
    if (!top.has("target")) top.fail("target", "required");
    config.source = parse_dataset_ref(top.child("source"), base_dir);
    config.target = parse_dataset_ref(top.child("target"), base_dir);

    if (auto mode = top.get<std::string>("normalization")) p.normalization = parse_normalization_mode(*mode);
    if (auto n = top.get<std::size_t>("expected_features")) p.expected_features = *n;
    if (auto dir = top.get<std::string>("output_dir")) config.output_dir = base_dir / *dir;

    if (top.has("thresholds")) {
        auto s = top.child("thresholds");
        assign(s.get<double>("much_less"), p.thresholds.much_less);
        assign(s.get<double>("less"), p.thresholds.less);
        assign(s.get<double>("same_upper"), p.thresholds.same_upper);
        assign(s.get<double>("more_upper"), p.thresholds.more_upper);
        s.reject_unknown();
    }
    if (top.has("gan")) {
        auto s = top.child("gan");
        assign(s.get<std::size_t>("epochs"), p.gan.epochs);
        assign(s.get<std::size_t>("batch_size"), p.gan.batch_size);
        assign(s.get<std::size_t>("d_steps_per_g_step"), p.gan.d_steps_per_g_step);
        if (auto v = s.get<std::string>("loss")) p.gan.loss_variant = gan::parse_loss_variant(*v);
        assign(s.get<double>("clamp_eps"), p.gan.output_clamp_eps);
        assign(s.get<double>("r1_gamma"), p.gan.r1_gamma);
        assign(s.get<std::vector<std::size_t>>("hidden_dims"), p.architecture.hidden_dims);
        if (auto v = s.get<std::string>("generator_output")) {
            p.architecture.generator_output = nn::parse_activation(*v);
        }
        if (auto v = s.get<std::string>("generator_mode")) {
            p.architecture.generator_mode = gan::parse_generator_mode(*v);
        }
        assign(s.get<bool>("center_generator"), p.architecture.center_generator);
        if (auto v = s.get<std::string>("record_mmd")) p.gan.record_mmd = gan::parse_mmd_recording(*v);
        s.reject_unknown();
    }
    if (top.has("optimizer")) {
        auto s = top.child("optimizer");
        assign(s.get<double>("lr"), p.gan.optimizer.lr);
        assign(s.get<double>("beta1"), p.gan.optimizer.beta1);
        assign(s.get<double>("beta2"), p.gan.optimizer.beta2);
        assign(s.get<double>("eps"), p.gan.optimizer.eps);
        s.reject_unknown();
    }
    if (top.has("classifier")) {
        auto s = top.child("classifier");
        assign(s.get<double>("variance_floor"), p.classifier.variance_floor);
        assign(s.get<bool>("relative_floor"), p.classifier.relative_floor);
        s.reject_unknown();
    }
    top.reject_unknown();
    p.gan.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("io", "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw Error("parse", path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

std::vector<std::size_t> parse_epoch_list(const std::string& text) {
    const std::string usage = " (expected e.g. --epochs 25,50,75,100)";
    if (trim(text).empty()) throw Error("usage", "--epochs needs at least one value" + usage);
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto t = trim(item);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
            throw Error("usage", "--epochs: '" + std::string(t) + "' is not a non-negative integer" + usage);
        }
        out.push_back(v);
    }
    if (text.back() == ',') throw Error("usage", "--epochs: trailing comma" + usage);
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cross-project defect prediction with adversarial domain adaptation", "cpdp"};
    app.require_subcommand(1);

    std::string stats_path, stats_label = kDefaultLabelColumn;
    auto* stats_cmd = app.add_subcommand("stats", "Print instance count, faulty count and buggy rate");
    stats_cmd->add_option("path", stats_path, "Dataset CSV")->required();
    stats_cmd->add_option("--label-column", stats_label, "Label column name")->capture_default_str();

    std::string ns_source, ns_target, ns_label = kDefaultLabelColumn;
    auto* ns_cmd = app.add_subcommand("norm-select", "Compare distance statistics and pick a normalization rule");
    ns_cmd->add_option("source", ns_source, "Source dataset CSV")->required();
    ns_cmd->add_option("target", ns_target, "Target dataset CSV")->required();
    ns_cmd->add_option("--label-column", ns_label, "Label column to exclude from features; empty for none")
        ->capture_default_str();

    RunFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "Run the full pipeline once and write model, trace and report");
    train_cmd->add_option("--config", train_flags.config, "Run configuration JSON")->required();
    train_cmd->add_option("--output-dir", train_flags.output_dir,
                          std::string("Output directory (overrides ") + kOutputDirEnv + " and the config)");
    train_cmd->add_option("--seed", train_flags.seed, "Override the configured seed");
    train_cmd->add_option("--epochs", train_flags.epochs, "Override the configured epoch count");

    RunFlags sweep_flags;
    std::string sweep_epochs;
    auto* sweep_cmd = app.add_subcommand("sweep", "One pipeline run per epoch count; writes sweep.csv");
    sweep_cmd->add_option("--config", sweep_flags.config, "Run configuration JSON")->required();
    sweep_cmd->add_option("--epochs", sweep_epochs, "Comma-separated epoch counts, e.g. 25,50,75,100")
        ->required();
    sweep_cmd->add_option("--output-dir", sweep_flags.output_dir,
                          std::string("Output directory (overrides ") + kOutputDirEnv + " and the config)");
    sweep_cmd->add_option("--seed", sweep_flags.seed, "Override the configured seed");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << one_line(e.what()) << " (run with --help for usage)\n";
        return 2;
    }

    try {
        if (stats_cmd->parsed()) return cmd_stats(stats_path, stats_label, out);
        if (ns_cmd->parsed()) return cmd_norm_select(ns_source, ns_target, ns_label, out);
        if (train_cmd->parsed()) return cmd_train(train_flags, out);
        return cmd_sweep(sweep_flags, sweep_epochs, out);
    } catch (const Error& e) {
        err << "error: " << e.category() << ": " << one_line(e.what()) << '\n';
        return e.category() == "usage" ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << one_line(e.what()) << '\n';
        return 1;
    }
}

}  // namespace cpdp::cli
