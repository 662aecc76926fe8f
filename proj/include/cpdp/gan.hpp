#pragma once

#include "cpdp/dataset.hpp"
#include "cpdp/nn.hpp"
#include "cpdp/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cpdp::gan {

enum class LossVariant { Minimax, NonSaturating };

/// Residual generators compute z + net(z) with the last layer of net starting
/// at zero, so an untrained generator is exactly the identity map. Plain
/// generators compute net(z).
enum class GeneratorMode { Residual, Plain };

enum class MmdRecording { Auto, On, Off };

std::string_view to_string(LossVariant v);
std::string_view to_string(GeneratorMode m);
std::string_view to_string(MmdRecording m);
LossVariant parse_loss_variant(std::string_view s);
GeneratorMode parse_generator_mode(std::string_view s);
MmdRecording parse_mmd_recording(std::string_view s);

struct Architecture {
    std::vector<std::size_t> hidden_dims{64, 64, 64};
    nn::Activation generator_output = nn::Activation::Identity;
    GeneratorMode generator_mode = GeneratorMode::Residual;
    // Pipeline applies center_generator to the normalized target after build.
    bool center_generator = true;
};

/// Generator maps target metric vectors (F) to source-like vectors (F); the
/// discriminator maps a vector (F) to the probability that it is real source
/// data.
struct GanModel {
    nn::Mlp generator;
    nn::Mlp discriminator;
    GeneratorMode generator_mode = GeneratorMode::Residual;

    std::size_t feature_count() const { return static_cast<std::size_t>(generator.in_dim()); }

    Eigen::MatrixXd generate(const Eigen::MatrixXd& z) const;
    Eigen::VectorXd discriminate(const Eigen::MatrixXd& x) const;

    bool operator==(const GanModel& other) const = default;
};

GanModel build(std::size_t feature_count, const Architecture& arch, std::uint64_t seed);

/// Sets the generator's first-layer bias to -W * mean(rows of `target`), so
/// its first pre-activations are zero-mean over the target. Leaves the output
/// of a fresh residual generator unchanged.
void center_generator(GanModel& model, const Eigen::MatrixXd& target);

struct GanConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::size_t d_steps_per_g_step = 1;
    LossVariant loss_variant = LossVariant::Minimax;
    optim::AdamConfig optimizer{};
    double output_clamp_eps = 1e-7;
    double r1_gamma = 1.0;  // weight of the gradient penalty on real inputs
    std::uint64_t seed = 0;
    MmdRecording record_mmd = MmdRecording::Auto;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double d_loss = 0.0;
    double g_loss = 0.0;
    double d_accuracy = 0.0;
    std::optional<double> mmd;
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
};

/// -(mean log D(x_real) + mean log(1 - D(G(z)))), with probabilities clamped
/// to [eps, 1 - eps]. Minimising it maximises the value function in D.
double d_loss(std::span<const double> d_real, std::span<const double> d_fake, double eps);

/// Minimax: mean log(1 - D(G(z))). Non-saturating: -mean log D(G(z)).
double g_loss(std::span<const double> d_fake, LossVariant variant, double eps);

/// Value function V(D, G) for given discriminator outputs; equals -d_loss.
double value_function(std::span<const double> d_real, std::span<const double> d_fake, double eps);

struct LossGradients {
    double loss = 0.0;     // adversarial loss
    double penalty = 0.0;  // gradient penalty term, already scaled
    nn::GradientSet grads;
};

/// d_loss on (real, G(target_batch)) plus (r1_gamma / 2) * mean over the
/// real batch of |grad_x logit D(x)|^2, and the gradient of that sum with
/// respect to the discriminator parameters.
LossGradients discriminator_gradients(const GanModel& model, const Eigen::MatrixXd& real,
                                      const Eigen::MatrixXd& target_batch, double eps,
                                      double r1_gamma = 0.0);

/// g_loss on G(target_batch) and its gradient with respect to the generator
/// parameters, backpropagated through the discriminator.
LossGradients generator_gradients(const GanModel& model, const Eigen::MatrixXd& target_batch,
                                  LossVariant variant, double eps);

/// Fraction of correct real/fake calls at threshold 0.5 over both sets.
double discriminator_accuracy(const GanModel& model, const Eigen::MatrixXd& real,
                              const Eigen::MatrixXd& target_batch);

struct TrainResult {
    GanModel model;
    TrainingTrace trace;
};

TrainResult train(GanModel model, const ProjectDataset& source, const ProjectDataset& target,
                  const GanConfig& config);

/// Replaces every instance's features by G(features); ids and labels kept.
ProjectDataset transform(const GanModel& model, const ProjectDataset& target);

nlohmann::json to_json(const GanModel& model);
GanModel model_from_json(const nlohmann::json& j);

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

}  // namespace cpdp::gan
