#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace cpdp::nn {

enum class Activation { Relu, Sigmoid, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected layer computing act(x * W^T + b) for row-major batches.
struct DenseLayer {
    Eigen::MatrixXd weights;  // out_dim x in_dim
    Eigen::VectorXd bias;     // out_dim
    Activation activation = Activation::Identity;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

class Mlp {
public:
    explicit Mlp(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    Eigen::Index in_dim() const { return layers_.front().in_dim(); }
    Eigen::Index out_dim() const { return layers_.back().out_dim(); }
    std::size_t parameter_count() const;

    bool operator==(const Mlp& other) const;

private:
    std::vector<DenseLayer> layers_;
};

/// Per-layer gradients, shaped like the owning network.
struct GradientSet {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;

    static GradientSet zeros_like(const Mlp& mlp);

    bool congruent_with(const Mlp& mlp) const;
    bool all_finite() const;
    GradientSet& operator+=(const GradientSet& other);
    GradientSet& operator*=(double factor);
};

struct ForwardTrace {
    // inputs[k] is the batch fed into layer k; pre[k] its pre-activation.
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> pre;
    Eigen::MatrixXd output;
};

struct BackwardResult {
    GradientSet grads;
    Eigen::MatrixXd input_grad;
};

/// Glorot-uniform weights, zero biases. `dims` has one more entry than
/// `activations`.
Mlp init(std::span<const std::size_t> dims, std::span<const Activation> activations,
         std::uint64_t seed);

ForwardTrace forward(const Mlp& mlp, const Eigen::MatrixXd& batch);

/// Gradients of sum(upstream .* output) with respect to every parameter and
/// to the input batch. ReLU uses subgradient 0 at 0.
BackwardResult backward(const Mlp& mlp, const ForwardTrace& trace, const Eigen::MatrixXd& upstream);

struct PenaltyResult {
    double value = 0.0;
    GradientSet grads;
};

/// Value and parameter gradient of 0.5 * sum_i |d logit_i / d x_i|^2, where
/// logit is the pre-activation of the network's single output unit. Hidden
/// activations must be piecewise linear (ReLU or identity), which makes the
/// input gradient independent of the biases.
PenaltyResult input_gradient_penalty(const Mlp& mlp, const ForwardTrace& trace);

/// Central differences of `loss` around the network's current parameters.
GradientSet finite_diff_grad(const Mlp& mlp, const std::function<double(const Mlp&)>& loss,
                             double eps);

nlohmann::json to_json(const Mlp& mlp);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace cpdp::nn
