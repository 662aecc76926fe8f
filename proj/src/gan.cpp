#include "cpdp/gan.hpp"

#include "cpdp/error.hpp"
#include "cpdp/mmd.hpp"
#include "cpdp/seeding.hpp"
#include "cpdp/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace cpdp::gan {

namespace {

enum Stream : std::uint64_t {
    kGeneratorInit = 1,
    kDiscriminatorInit = 2,
    kSourceOrder = 3,
    kTargetOrder = 4,
    kProbe = 5,
};

// Rows probed each epoch for accuracy and the optional divergence reading.
constexpr std::size_t kProbeRows = 256;

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

bool inside(double p, double eps) { return p > eps && p < 1.0 - eps; }

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

void check_probabilities(std::span<const double> p, const char* what) {
    if (p.empty()) throw Error("data", std::string(what) + ": empty batch");
}

}  // namespace

std::string_view to_string(LossVariant v) {
    return v == LossVariant::Minimax ? "minimax" : "non-saturating";
}

std::string_view to_string(GeneratorMode m) {
    return m == GeneratorMode::Residual ? "residual" : "plain";
}

std::string_view to_string(MmdRecording m) {
    switch (m) {
        case MmdRecording::Auto: return "auto";
        case MmdRecording::On: return "on";
        case MmdRecording::Off: return "off";
    }
    return "?";
}

LossVariant parse_loss_variant(std::string_view s) {
    if (s == "minimax") return LossVariant::Minimax;
    if (s == "non-saturating") return LossVariant::NonSaturating;
    throw Error("config", "unknown loss variant '" + std::string(s) + "'");
}

GeneratorMode parse_generator_mode(std::string_view s) {
    if (s == "residual") return GeneratorMode::Residual;
    if (s == "plain") return GeneratorMode::Plain;
    throw Error("config", "unknown generator mode '" + std::string(s) + "'");
}

MmdRecording parse_mmd_recording(std::string_view s) {
    if (s == "auto") return MmdRecording::Auto;
    if (s == "on") return MmdRecording::On;
    if (s == "off") return MmdRecording::Off;
    throw Error("config", "unknown mmd recording mode '" + std::string(s) + "'");
}

Eigen::MatrixXd GanModel::generate(const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd out = nn::forward(generator, z).output;
    if (generator_mode == GeneratorMode::Residual) out += z;
    return out;
}

Eigen::VectorXd GanModel::discriminate(const Eigen::MatrixXd& x) const {
    return nn::forward(discriminator, x).output.col(0);
}

GanModel build(std::size_t feature_count, const Architecture& arch, std::uint64_t seed) {
    if (feature_count < 1) throw Error("config", "GAN needs at least one feature");
    for (auto h : arch.hidden_dims) {
        if (h < 1) throw Error("config", "hidden layer widths must be at least 1");
    }

    std::vector<std::size_t> g_dims{feature_count};
    std::vector<std::size_t> d_dims{feature_count};
    std::vector<nn::Activation> hidden_acts(arch.hidden_dims.size(), nn::Activation::Relu);
    for (auto h : arch.hidden_dims) {
        g_dims.push_back(h);
        d_dims.push_back(h);
    }
    g_dims.push_back(feature_count);
    d_dims.push_back(1);

    auto g_acts = hidden_acts;
    g_acts.push_back(arch.generator_output);
    auto d_acts = hidden_acts;
    d_acts.push_back(nn::Activation::Sigmoid);

    GanModel model{nn::init(g_dims, g_acts, derive_seed(seed, kGeneratorInit)),
                   nn::init(d_dims, d_acts, derive_seed(seed, kDiscriminatorInit)),
                   arch.generator_mode};
    if (arch.generator_mode == GeneratorMode::Residual) {
        model.generator.layers().back().weights.setZero();
    }
    return model;
}

void center_generator(GanModel& model, const Eigen::MatrixXd& target) {
    auto& first = model.generator.layers().front();
    if (target.rows() < 1 || target.cols() != first.weights.cols()) {
        throw Error("shape", "center_generator: need a non-empty batch with " +
                                 std::to_string(first.weights.cols()) + " columns");
    }
    const Eigen::VectorXd mean = target.colwise().mean().transpose();
    first.bias = -(first.weights * mean);
}

void GanConfig::validate() const {
    if (batch_size < 1) throw Error("config", "batch_size must be at least 1");
    if (d_steps_per_g_step < 1) throw Error("config", "d_steps_per_g_step must be at least 1");
    if (!(r1_gamma >= 0.0)) throw Error("config", "r1_gamma must be nonnegative");
    if (!(output_clamp_eps > 0.0 && output_clamp_eps < 0.1)) {
        throw Error("config", "output_clamp_eps must lie in (0, 0.1)");
    }
    optimizer.validate();
}

double d_loss(std::span<const double> d_real, std::span<const double> d_fake, double eps) {
    check_probabilities(d_real, "d_loss");
    check_probabilities(d_fake, "d_loss");
    double real = 0.0;
    for (double p : d_real) real += std::log(clamp_prob(p, eps));
    double fake = 0.0;
    for (double p : d_fake) fake += std::log(1.0 - clamp_prob(p, eps));
    return -(real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size()));
}

double g_loss(std::span<const double> d_fake, LossVariant variant, double eps) {
    check_probabilities(d_fake, "g_loss");
    double s = 0.0;
    for (double p : d_fake) {
        const double c = clamp_prob(p, eps);
        s += variant == LossVariant::Minimax ? std::log(1.0 - c) : -std::log(c);
    }
    return s / static_cast<double>(d_fake.size());
}

double value_function(std::span<const double> d_real, std::span<const double> d_fake, double eps) {
    return -d_loss(d_real, d_fake, eps);
}

LossGradients discriminator_gradients(const GanModel& model, const Eigen::MatrixXd& real,
                                      const Eigen::MatrixXd& target_batch, double eps, double r1_gamma) {
    const auto real_trace = nn::forward(model.discriminator, real);
    const auto fake_trace = nn::forward(model.discriminator, model.generate(target_batch));
    const Eigen::VectorXd p_real = real_trace.output.col(0);
    const Eigen::VectorXd p_fake = fake_trace.output.col(0);

    LossGradients out;
    out.loss = d_loss({p_real.data(), static_cast<std::size_t>(p_real.size())},
                      {p_fake.data(), static_cast<std::size_t>(p_fake.size())}, eps);

    const double nr = static_cast<double>(p_real.size());
    const double nf = static_cast<double>(p_fake.size());
    Eigen::MatrixXd up_real(p_real.size(), 1);
    for (Eigen::Index i = 0; i < p_real.size(); ++i) {
        up_real(i, 0) = inside(p_real(i), eps) ? -1.0 / (nr * p_real(i)) : 0.0;
    }
    Eigen::MatrixXd up_fake(p_fake.size(), 1);
    for (Eigen::Index i = 0; i < p_fake.size(); ++i) {
        up_fake(i, 0) = inside(p_fake(i), eps) ? 1.0 / (nf * (1.0 - p_fake(i))) : 0.0;
    }
    out.grads = nn::backward(model.discriminator, real_trace, up_real).grads;
    out.grads += nn::backward(model.discriminator, fake_trace, up_fake).grads;
    if (r1_gamma > 0.0) {
        auto r1 = nn::input_gradient_penalty(model.discriminator, real_trace);
        const double scale = r1_gamma / nr;
        out.penalty = scale * r1.value;
        r1.grads *= scale;
        out.grads += r1.grads;
    }
    return out;
}

LossGradients generator_gradients(const GanModel& model, const Eigen::MatrixXd& target_batch,
                                  LossVariant variant, double eps) {
    const auto g_trace = nn::forward(model.generator, target_batch);
    Eigen::MatrixXd fake = g_trace.output;
    if (model.generator_mode == GeneratorMode::Residual) fake += target_batch;
    const auto d_trace = nn::forward(model.discriminator, fake);
    const Eigen::VectorXd p = d_trace.output.col(0);

    LossGradients out;
    out.loss = g_loss({p.data(), static_cast<std::size_t>(p.size())}, variant, eps);

    const double n = static_cast<double>(p.size());
    Eigen::MatrixXd up(p.size(), 1);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!inside(p(i), eps)) {
            up(i, 0) = 0.0;
        } else if (variant == LossVariant::Minimax) {
            up(i, 0) = -1.0 / (n * (1.0 - p(i)));
        } else {
            up(i, 0) = -1.0 / (n * p(i));
        }
    }
    // The residual skip passes the upstream gradient to net(z) unchanged.
    const auto through_d = nn::backward(model.discriminator, d_trace, up);
    out.grads = nn::backward(model.generator, g_trace, through_d.input_grad).grads;
    return out;
}

double discriminator_accuracy(const GanModel& model, const Eigen::MatrixXd& real,
                              const Eigen::MatrixXd& target_batch) {
    const Eigen::VectorXd p_real = model.discriminate(real);
    const Eigen::VectorXd p_fake = model.discriminate(model.generate(target_batch));
    const auto hits = (p_real.array() >= 0.5).count() + (p_fake.array() < 0.5).count();
    return static_cast<double>(hits) / static_cast<double>(p_real.size() + p_fake.size());
}

TrainResult train(GanModel model, const ProjectDataset& source, const ProjectDataset& target,
                  const GanConfig& config) {
    config.validate();
    const std::size_t f = model.feature_count();
    if (source.feature_count() != f || target.feature_count() != f) {
        throw Error("shape", "feature count mismatch: model has " + std::to_string(f) + ", source has " +
                                 std::to_string(source.feature_count()) + ", target has " +
                                 std::to_string(target.feature_count()));
    }
    if (source.empty() || target.empty()) throw Error("data", "GAN training needs nonempty source and target");

    TrainResult result{std::move(model), {}};
    if (config.epochs == 0) return result;
    GanModel& m = result.model;

    const Eigen::MatrixXd xs = source.feature_matrix();
    const Eigen::MatrixXd xt = target.feature_matrix();
    const std::size_t n1 = source.size();
    const std::size_t n2 = target.size();
    const std::size_t pairs = std::min(n1, n2);

    const bool record_mmd = config.record_mmd == MmdRecording::On ||
                            (config.record_mmd == MmdRecording::Auto && f <= 200);
    const std::uint64_t probe_seed = derive_seed(config.seed, kProbe);
    const auto probe_src = optim::permutation(n1, probe_seed, 0);
    const auto probe_tgt = optim::permutation(n2, probe_seed, 1);
    const std::size_t probe_n = std::min(pairs, kProbeRows);
    const Eigen::MatrixXd probe_real = gather_rows(xs, std::span(probe_src).first(probe_n));
    const Eigen::MatrixXd probe_target = gather_rows(xt, std::span(probe_tgt).first(probe_n));

    optim::AdamState adam_g(m.generator, config.optimizer);
    optim::AdamState adam_d(m.discriminator, config.optimizer);
    const double eps = config.output_clamp_eps;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order_s = optim::permutation(n1, derive_seed(config.seed, kSourceOrder), epoch);
        const auto order_t = optim::permutation(n2, derive_seed(config.seed, kTargetOrder), epoch);

        double d_sum = 0.0;
        double g_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < pairs; start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, pairs - start);
            const Eigen::MatrixXd real = gather_rows(xs, std::span(order_s).subspan(start, len));
            const Eigen::MatrixXd z = gather_rows(xt, std::span(order_t).subspan(start, len));

            for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
                auto dg = discriminator_gradients(m, real, z, eps, config.r1_gamma);
                if (k == 0) d_sum += dg.loss;
                optim::adam_step(m.discriminator, dg.grads, adam_d);
            }
            auto gg = generator_gradients(m, z, config.loss_variant, eps);
            g_sum += gg.loss;
            optim::adam_step(m.generator, gg.grads, adam_g);
            ++steps;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.d_loss = d_sum / static_cast<double>(steps);
        rec.g_loss = g_sum / static_cast<double>(steps);
        rec.d_accuracy = discriminator_accuracy(m, probe_real, probe_target);
        if (record_mmd) rec.mmd = mmd(m.generate(probe_target), probe_real);
        result.trace.epochs.push_back(rec);
    }
    return result;
}

ProjectDataset transform(const GanModel& model, const ProjectDataset& target) {
    if (target.feature_count() != model.feature_count()) {
        throw Error("shape", "feature count mismatch: model has " + std::to_string(model.feature_count()) +
                                 ", target has " + std::to_string(target.feature_count()));
    }
    if (target.empty()) return target;
    return target.with_features(model.generate(target.feature_matrix()));
}

nlohmann::json to_json(const GanModel& model) {
    return {{"generator_mode", to_string(model.generator_mode)},
            {"generator", nn::to_json(model.generator)},
            {"discriminator", nn::to_json(model.discriminator)}};
}

GanModel model_from_json(const nlohmann::json& j) {
    try {
        GanModel model{nn::mlp_from_json(j.at("generator")), nn::mlp_from_json(j.at("discriminator")),
                       parse_generator_mode(j.value("generator_mode", std::string("plain")))};
        const auto f = model.generator.in_dim();
        if (model.generator.out_dim() != f || model.discriminator.in_dim() != f ||
            model.discriminator.out_dim() != 1 ||
            model.discriminator.layers().back().activation != nn::Activation::Sigmoid) {
            throw Error("parse", "generator/discriminator shapes are inconsistent");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error("parse", std::string("malformed GAN model JSON: ") + e.what());
    }
}

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << "epoch,d_loss,g_loss,d_accuracy,mmd\n";
    for (const auto& r : trace.epochs) {
        out << r.epoch << ',' << format_double(r.d_loss) << ',' << format_double(r.g_loss) << ','
            << format_double(r.d_accuracy) << ',' << (r.mmd ? format_double(*r.mmd) : std::string()) << '\n';
    }
    if (!out) throw Error("io", "failed writing " + path.string());
}

}  // namespace cpdp::gan
