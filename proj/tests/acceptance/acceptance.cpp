// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "cli.hpp"
#include "cpdp/classifier.hpp"
#include "cpdp/eval.hpp"
#include "cpdp/gan.hpp"
#include "cpdp/nn.hpp"
#include "cpdp/normrules.hpp"

#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace cpdp;
using cpdp::testing::read_file;
using cpdp::testing::TempDir;
using cpdp::testing::write_file;

namespace {

// Tolerances and budgets.
constexpr double kFdStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr double kEquilibriumTol = 1e-6;
constexpr double kMmdRatio = 0.5;
constexpr double kF1Gain = 0.15;
constexpr double kAdaptSeconds = 60.0;
constexpr std::size_t kAdaptEpochs = 200;
constexpr std::uint64_t kAdaptSeed = 42;
constexpr double kNbTol = 1e-9;
constexpr double kMetricTol = 1e-12;
constexpr double kSweepSeconds = 180.0;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << title << "  [" << detail
              << "]" << std::endl;
    if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// |a - f| / max(|a|, |f|, 1e-3); the floor keeps near-zero entries from
// dominating through finite-difference rounding.
double rel_error(const nn::GradientSet& a, const nn::GradientSet& f) {
    double worst = 0.0;
    auto scan = [&](const auto& x, const auto& y) {
        const auto scale = x.array().abs().max(y.array().abs()).max(1e-3);
        worst = std::max(worst, ((x - y).array().abs() / scale).maxCoeff());
    };
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
        scan(a.weights[k], f.weights[k]);
        scan(a.bias[k], f.bias[k]);
    }
    return worst;
}

// Distance of the closest ReLU pre-activation to its kink.
double kink_margin(const nn::Mlp& mlp, const Eigen::MatrixXd& x) {
    const auto t = nn::forward(mlp, x);
    double m = INFINITY;
    for (std::size_t k = 0; k < t.pre.size(); ++k) {
        if (mlp.layers()[k].activation == nn::Activation::Relu) m = std::min(m, t.pre[k].cwiseAbs().minCoeff());
    }
    return m;
}

void gradients() {
    Stopwatch clock;
    std::mt19937_64 rng(2024);
    const nn::Activation acts[] = {nn::Activation::Relu, nn::Activation::Sigmoid, nn::Activation::Identity};
    double worst_mlp = 0.0, worst_composed = 0.0;
    int mlps = 0, composed = 0;

    while (mlps < 20) {
        const std::size_t layers = 1 + rng() % 3;
        std::vector<std::size_t> dims{1 + rng() % 4};
        std::vector<nn::Activation> a;
        for (std::size_t l = 0; l < layers; ++l) {
            dims.push_back(1 + rng() % 4);
            a.push_back(acts[rng() % 3]);
        }
        auto mlp = nn::init(dims, a, rng());
        for (auto& l : mlp.layers()) l.bias = Eigen::VectorXd::Random(l.bias.size()) * 0.5;
        const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, static_cast<Eigen::Index>(dims.front()));
        const Eigen::MatrixXd up = Eigen::MatrixXd::Random(3, static_cast<Eigen::Index>(dims.back()));
        if (kink_margin(mlp, x) < 1e-3) continue;
        const auto analytic = nn::backward(mlp, nn::forward(mlp, x), up).grads;
        const auto numeric = nn::finite_diff_grad(
            mlp, [&](const nn::Mlp& m) { return (nn::forward(m, x).output.array() * up.array()).sum(); }, kFdStep);
        worst_mlp = std::max(worst_mlp, rel_error(analytic, numeric));
        ++mlps;
    }

    while (composed < 20) {
        const std::size_t f = 1 + rng() % 4;
        gan::Architecture arch;
        arch.hidden_dims = {1 + rng() % 5, 1 + rng() % 5};
        arch.generator_mode = composed % 2 ? gan::GeneratorMode::Residual : gan::GeneratorMode::Plain;
        auto m = gan::build(f, arch, rng());
        for (auto* net : {&m.generator, &m.discriminator}) {
            for (auto& l : net->layers()) {
                l.weights += Eigen::MatrixXd::Random(l.weights.rows(), l.weights.cols()) * 0.5;
                l.bias = Eigen::VectorXd::Random(l.bias.size()) * 0.5;
            }
        }
        const Eigen::MatrixXd real = Eigen::MatrixXd::Random(5, static_cast<Eigen::Index>(f));
        const Eigen::MatrixXd z = Eigen::MatrixXd::Random(4, static_cast<Eigen::Index>(f));
        if (kink_margin(m.generator, z) < 1e-3 || kink_margin(m.discriminator, real) < 1e-3 ||
            kink_margin(m.discriminator, m.generate(z)) < 1e-3) {
            continue;
        }
        const double eps = 1e-7;
        const auto variant = composed % 3 ? gan::LossVariant::Minimax : gan::LossVariant::NonSaturating;

        const auto dg = gan::discriminator_gradients(m, real, z, eps);
        const auto d_num = nn::finite_diff_grad(
            m.discriminator,
            [&](const nn::Mlp& d) {
                auto mm = m;
                mm.discriminator = d;
                const Eigen::VectorXd pr = mm.discriminate(real);
                const Eigen::VectorXd pf = mm.discriminate(mm.generate(z));
                return gan::d_loss({pr.data(), static_cast<std::size_t>(pr.size())},
                                   {pf.data(), static_cast<std::size_t>(pf.size())}, eps);
            },
            kFdStep);
        const auto gg = gan::generator_gradients(m, z, variant, eps);
        const auto g_num = nn::finite_diff_grad(
            m.generator,
            [&](const nn::Mlp& g) {
                auto mm = m;
                mm.generator = g;
                const Eigen::VectorXd p = mm.discriminate(mm.generate(z));
                return gan::g_loss({p.data(), static_cast<std::size_t>(p.size())}, variant, eps);
            },
            kFdStep);
        worst_composed = std::max({worst_composed, rel_error(dg.grads, d_num), rel_error(gg.grads, g_num)});
        ++composed;
    }

    const double t = clock.seconds();
    const double worst = std::max(worst_mlp, worst_composed);
    report(1, "gradient correctness", worst <= kGradRelTol && t < kGradSeconds,
           "20 MLPs worst rel err " + fmt("%.2e", worst_mlp) + ", 20 composed D/G worst " +
               fmt("%.2e", worst_composed) + " (tol 1e-4, fd step 1e-5); " + fmt("%.2f", t) + " s < 10 s");
}

void equilibrium() {
    const std::vector<double> half(16, 0.5);
    const double v = gan::value_function(half, half, 1e-7);
    const double target = -2.0 * std::numbers::ln2;
    report(2, "value function at D = 1/2", std::abs(v - target) <= kEquilibriumTol,
           "V = " + fmt("%.12f", v) + ", -2 ln 2 = " + fmt("%.12f", target) + " (tol 1e-6)");
}

void adaptation() {
    Stopwatch clock;
    const auto source = cpdp::testing::shifted_pair_source();
    const auto target = cpdp::testing::shifted_pair_target();
    PipelineConfig base;
    base.gan.seed = kAdaptSeed;
    base.gan.epochs = 0;
    const auto before = run_pipeline(source, target, base);
    PipelineConfig trained = base;
    trained.gan.epochs = kAdaptEpochs;
    const auto after = run_pipeline(source, target, trained);
    const double t = clock.seconds();

    const bool mmd_ok = after.mmd_after <= kMmdRatio * after.mmd_before;
    const bool f1_ok = after.f1 >= before.f1 + kF1Gain;
    report(3, "adaptation on shifted synthetic pair", mmd_ok && f1_ok && t < kAdaptSeconds,
           "seed 42, 200 epochs: mmd " + fmt("%.4f", after.mmd_before) + " -> " + fmt("%.4f", after.mmd_after) +
               " (need <= 0.5x); f1 " + fmt("%.4f", before.f1) + " -> " + fmt("%.4f", after.f1) +
               " (need +0.15); " + fmt("%.1f", t) + " s < 60 s");
}

std::pair<double, double> brute_force_bayes(const NbModel& m, const std::vector<double>& x) {
    auto joint = [&](const ClassParams& c) {
        double p = std::exp(c.log_prior);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - c.mean[j];
            p *= std::exp(-d * d / (2.0 * c.variance[j])) / std::sqrt(2.0 * std::numbers::pi * c.variance[j]);
        }
        return p;
    };
    const double f = joint(m.faulty), c = joint(m.clean);
    return {f / (f + c), c / (f + c)};
}

void naive_bayes() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-2.0, 2.0), var(0.3, 3.0), prior(0.1, 0.9);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const std::size_t f = 1 + rng() % 3;
        NbModel m;
        const double pf = prior(rng);
        m.faulty.log_prior = std::log(pf);
        m.clean.log_prior = std::log(1.0 - pf);
        for (std::size_t j = 0; j < f; ++j) {
            m.feature_names.push_back("m" + std::to_string(j));
            m.faulty.mean.push_back(u(rng));
            m.clean.mean.push_back(u(rng));
            m.faulty.variance.push_back(var(rng));
            m.clean.variance.push_back(var(rng));
        }
        for (int q = 0; q < 5; ++q) {
            std::vector<double> x(f);
            for (auto& v : x) v = u(rng);
            const auto p = predict_proba(m, x);
            const auto [bf, bc] = brute_force_bayes(m, x);
            worst = std::max({worst, std::abs(p.faulty - bf), std::abs(p.clean - bc)});
        }
    }

    const ProjectDataset hand("hand", {"x"},
                              {{"a", {1.0}, Label::Faulty},
                               {"b", {3.0}, Label::Faulty},
                               {"c", {-1.0}, Label::Clean},
                               {"d", {-3.0}, Label::Clean}});
    const auto m = fit(hand);
    const bool exact = m.faulty.mean[0] == 2.0 && m.faulty.variance[0] == 1.0 && m.clean.mean[0] == -2.0 &&
                       m.clean.variance[0] == 1.0 && m.faulty.log_prior == std::log(0.5) &&
                       m.clean.log_prior == std::log(0.5);
    report(4, "naive Bayes matches direct Bayes computation", worst <= kNbTol && exact,
           "50 models x 5 points, worst |diff| " + fmt("%.2e", worst) + " (tol 1e-9); hand model " +
               (exact ? "exact" : "MISMATCH"));
}

void metrics() {
    using enum Label;
    const std::vector<Label> pred{Faulty, Faulty, Faulty, Clean, Clean};
    const std::vector<Label> truth{Faulty, Faulty, Clean, Faulty, Clean};
    const auto cm = confusion(pred, truth);
    const auto s = f_measure(cm);
    const double two_thirds = 2.0 / 3.0;
    bool ok = cm == ConfusionMatrix{2, 1, 1, 1} && std::abs(s.precision - two_thirds) <= kMetricTol &&
              std::abs(s.recall - two_thirds) <= kMetricTol && std::abs(s.f1 - two_thirds) <= kMetricTol;

    // No positives at all, no predicted positives, and no true positives.
    const auto none = f_measure(ConfusionMatrix{0, 0, 5, 0});
    const auto silent = f_measure(ConfusionMatrix{0, 0, 3, 2});
    const auto wrong = f_measure(ConfusionMatrix{0, 2, 3, 0});
    const auto miss = f_measure(ConfusionMatrix{0, 2, 1, 2});
    for (const auto& d : {none, silent, wrong, miss}) {
        ok = ok && d.precision == 0.0 && d.recall == 0.0 && d.f1 == 0.0;
    }
    ok = ok && accuracy(ConfusionMatrix{}) == 0.0;
    report(5, "confusion and F-measure", ok,
           "tp=2 fp=1 fn=1 -> p=r=f1=" + fmt("%.15f", s.f1) + " (tol 1e-12); zero denominators give 0");
}

void rule_engine() {
    const DistStats src{10.0, 9.0, 1.0, 30.0, 5.0, 100};
    auto scaled = [&](double mean, double median, double mn, double mx, double sd, std::size_t n) {
        return DistStats{src.mean * mean, src.median * median, src.min * mn, src.max * mx, src.std * sd, n};
    };
    struct Fixture {
        int rule;
        NormalizationChoice choice;
        DistStats target;
    };
    const Fixture fixtures[] = {
        {1, NormalizationChoice::NoNorm, scaled(1.0, 1.0, 1.0, 1.0, 1.05, 100)},
        {2, NormalizationChoice::MinMax, scaled(10.0, 10.0, 10.0, 10.0, 10.0, 1000)},
        {3, NormalizationChoice::ZscoreSourceStats, scaled(1.0, 1.0, 1.0, 1.0, 4.0, 50)},
        {4, NormalizationChoice::ZscoreTargetStats, scaled(1.0, 1.0, 1.0, 1.0, 4.0, 200)},
        {5, NormalizationChoice::Zscore, scaled(1.5, 1.5, 1.5, 1.5, 1.5, 150)},
    };
    std::string seen;
    bool ok = true;
    for (const auto& fx : fixtures) {
        const auto d = select_rule(compare(src, fx.target), src.n_instances, fx.target.n_instances);
        ok = ok && d.rule_id == fx.rule && d.choice == fx.choice;
        seen += std::to_string(d.rule_id) + ":" + std::string(to_string(d.choice)) + " ";
    }

    const ProjectDataset line("line", {"x"},
                              {{"a", {0.0}, Label::Clean}, {"b", {3.0}, Label::Clean}, {"c", {4.0}, Label::Clean}});
    const auto p = pairwise_dist(line);
    const bool exact = p.mean == 8.0 / 3.0 && p.median == 3.0 && p.min == 1.0 && p.max == 4.0 &&
                       p.std == std::sqrt(14.0 / 9.0) && p.n_instances == 3;
    report(6, "normalization rule table", ok && exact,
           "fixtures -> " + seen + "; {0,3,4}: mean " + fmt("%.17g", p.mean) + " median " + fmt("%g", p.median) +
               " min " + fmt("%g", p.min) + " max " + fmt("%g", p.max) + " std " + fmt("%.17g", p.std) +
               (exact ? " (exact)" : " (MISMATCH)"));
}

struct CliOutcome {
    int code;
    std::string out;
    std::string err;
};

CliOutcome cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), "cpdp");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void table_stats() {
    TempDir dir;
    struct Row {
        std::size_t n, faulty;
        const char* expected;
    };
    const Row rows[] = {{324, 129, "39.81"}, {997, 206, "20.66"}, {691, 64, "9.26"}};
    bool ok = true;
    std::string got;
    for (const auto& r : rows) {
        const auto path = dir / ("p" + std::to_string(r.n) + ".csv");
        write_file(path, cpdp::testing::labeled_csv(r.n, r.faulty));
        const auto res = cli_run({"stats", path.string()});
        const std::string want = "{\"n\":" + std::to_string(r.n) + ",\"faulty\":" + std::to_string(r.faulty) +
                                 ",\"buggy_rate\":" + r.expected + "}\n";
        ok = ok && res.code == 0 && res.out == want;
        got += res.out.substr(0, res.out.size() - 1) + " ";
    }
    report(7, "stats buggy rates", ok, got + "(want 39.81, 20.66, 9.26)");
}

// Labeled synthetic pair on disk plus a config using pipeline defaults.
std::string write_pair(const TempDir& dir) {
    save_csv(cpdp::testing::shifted_pair_source(), dir / "source.csv", "bug");
    save_csv(cpdp::testing::shifted_pair_target(), dir / "target.csv", "bug");
    write_file(dir / "run.json", R"({"seed": 42, "source": {"path": "source.csv"}, "target": {"path": "target.csv"},
        "gan": {"epochs": 50}})");
    return (dir / "run.json").string();
}

std::string sweep_once(const std::string& config, const std::filesystem::path& out, int& code) {
    const auto r = cli_run({"sweep", "--config", config, "--epochs", "25,50,75,100", "--output-dir", out.string()});
    code = r.code;
    if (r.code != 0) std::cerr << r.err;
    return read_file(out / "sweep.csv");
}

void sweep_and_determinism() {
    TempDir dir;
    const auto config = write_pair(dir);

    Stopwatch clock;
    int c1 = 0, c2 = 0;
    const auto a = sweep_once(config, dir / "sweep_a", c1);
    const double t = clock.seconds();
    const auto b = sweep_once(config, dir / "sweep_b", c2);

    std::istringstream lines(a);
    std::string line;
    std::getline(lines, line);
    const bool header_ok = line == kSweepCsvHeader;
    int rows = 0;
    bool f1_ok = true;
    std::string f1s;
    while (std::getline(lines, line)) {
        ++rows;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        const double f1 = cells.size() > 5 ? std::stod(cells[5]) : -1.0;
        f1_ok = f1_ok && f1 >= 0.0 && f1 <= 1.0;
        f1s += fmt("%.3f ", f1);
    }
    report(8, "epoch sweep 25,50,75,100",
           c1 == 0 && c2 == 0 && header_ok && rows == 4 && f1_ok && a == b && t < kSweepSeconds,
           std::to_string(rows) + " rows, f1 " + f1s + "in [0,1]: " + (f1_ok ? "yes" : "no") +
               ", rerun CSV " + (a == b ? "identical" : "DIFFERS") + "; " + fmt("%.1f", t) + " s < 180 s");

    bool same = a == b;
    for (const char* run : {"train_a", "train_b"}) {
        const auto r = cli_run({"train", "--config", config, "--output-dir", (dir / run).string()});
        if (r.code != 0) {
            std::cerr << r.err;
            same = false;
        }
    }
    std::string files = "sweep.csv";
    for (const char* f : {"model.json", "nb_model.json", "trace.csv", "report.json"}) {
        const auto x = read_file(dir / "train_a" / f);
        same = same && !x.empty() && x == read_file(dir / "train_b" / f);
        files += std::string(", ") + f;
    }
    PipelineConfig pc;
    pc.gan.seed = 9;
    pc.gan.epochs = 20;
    const auto src = cpdp::testing::shifted_pair_source();
    const auto tgt = cpdp::testing::shifted_pair_target();
    const auto p1 = run_pipeline_detailed(src, tgt, pc);
    const auto p2 = run_pipeline_detailed(src, tgt, pc);
    const bool pipeline_same = to_json(p1.report).dump() == to_json(p2.report).dump() && p1.model == p2.model &&
                               to_json(p1.classifier) == to_json(p2.classifier);
    report(9, "bitwise determinism", same && pipeline_same,
           files + (same ? " identical" : " DIFFER") + " across reruns; in-process pipeline " +
               (pipeline_same ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<void()>> checks[] = {
        {"1", gradients},   {"2", equilibrium},    {"3", adaptation},  {"4", naive_bayes},
        {"5", metrics},     {"6", rule_engine},    {"7", table_stats}, {"8-9", sweep_and_determinism},
    };
    for (const auto& [id, check] : checks) {
        try {
            check();
        } catch (const std::exception& e) {
            std::cout << "criterion " << id << ": FAIL  exception: " << e.what() << std::endl;
            ++failures;
        }
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion check(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
