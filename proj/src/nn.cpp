#include "cpdp/nn.hpp"

#include "cpdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cpdp::nn {

namespace {

double sigmoid(double x) {
    const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    // Keep outputs strictly inside (0, 1) so downstream logs stay finite.
    static const double lo = std::numeric_limits<double>::min();
    static const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(s, lo, hi);
}

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre) {
    switch (a) {
        case Activation::Relu: return pre.cwiseMax(0.0);
        case Activation::Sigmoid: return pre.unaryExpr([](double v) { return sigmoid(v); });
        case Activation::Identity: return pre;
    }
    return pre;
}

// d act / d pre, evaluated elementwise from the pre-activation and output.
Eigen::MatrixXd activation_slope(Activation a, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& out) {
    switch (a) {
        case Activation::Relu:
            return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        case Activation::Sigmoid:
            return out.array() * (1.0 - out.array());
        case Activation::Identity:
            return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    }
    return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

std::string dims(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    throw Error("parse", "unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error("shape", "network needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.weights.rows() < 1 || l.weights.cols() < 1) {
            throw Error("shape", "layer " + std::to_string(k) + " has an empty weight matrix");
        }
        if (l.bias.size() != l.weights.rows()) {
            throw Error("shape", "layer " + std::to_string(k) + " bias has " + std::to_string(l.bias.size()) +
                                     " entries, expected " + std::to_string(l.weights.rows()));
        }
        if (k > 0 && l.in_dim() != layers_[k - 1].out_dim()) {
            throw Error("shape", "layer " + std::to_string(k) + " expects " + std::to_string(l.in_dim()) +
                                     " inputs but layer " + std::to_string(k - 1) + " produces " +
                                     std::to_string(layers_[k - 1].out_dim()));
        }
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            throw Error("numeric", "layer " + std::to_string(k) + " has non-finite parameters");
        }
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

bool Mlp::operator==(const Mlp& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& a = layers_[k];
        const auto& b = other.layers_[k];
        if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
            a.weights.cols() != b.weights.cols() || a.weights != b.weights || a.bias != b.bias) {
            return false;
        }
    }
    return true;
}

GradientSet GradientSet::zeros_like(const Mlp& mlp) {
    GradientSet g;
    for (const auto& l : mlp.layers()) {
        g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

bool GradientSet::congruent_with(const Mlp& mlp) const {
    const auto& layers = mlp.layers();
    if (weights.size() != layers.size() || bias.size() != layers.size()) return false;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (weights[k].rows() != layers[k].weights.rows() || weights[k].cols() != layers[k].weights.cols() ||
            bias[k].size() != layers[k].bias.size()) {
            return false;
        }
    }
    return true;
}

bool GradientSet::all_finite() const {
    for (const auto& w : weights) {
        if (!w.allFinite()) return false;
    }
    for (const auto& b : bias) {
        if (!b.allFinite()) return false;
    }
    return true;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
    if (weights.size() != other.weights.size()) throw Error("shape", "gradient sets differ in depth");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        weights[k] += other.weights[k];
        bias[k] += other.bias[k];
    }
    return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
    for (auto& w : weights) w *= factor;
    for (auto& b : bias) b *= factor;
    return *this;
}

Mlp init(std::span<const std::size_t> dims, std::span<const Activation> activations, std::uint64_t seed) {
    if (dims.size() < 2 || activations.size() + 1 != dims.size()) {
        throw Error("shape", "init: " + std::to_string(dims.size()) + " dims need " +
                                 std::to_string(dims.size() > 0 ? dims.size() - 1 : 0) +
                                 " activations, got " + std::to_string(activations.size()));
    }
    for (auto d : dims) {
        if (d < 1) throw Error("shape", "init: every layer width must be at least 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        const auto in = static_cast<Eigen::Index>(dims[k]);
        const auto out = static_cast<Eigen::Index>(dims[k + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        DenseLayer layer;
        layer.weights.resize(out, in);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
        }
        layer.bias = Eigen::VectorXd::Zero(out);
        layer.activation = activations[k];
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

ForwardTrace forward(const Mlp& mlp, const Eigen::MatrixXd& batch) {
    if (batch.cols() != mlp.in_dim()) {
        throw Error("shape", "batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                                 std::to_string(mlp.in_dim()));
    }
    if (!batch.allFinite()) throw Error("numeric", "batch contains non-finite values");

    ForwardTrace trace;
    trace.inputs.reserve(mlp.layers().size());
    trace.pre.reserve(mlp.layers().size());
    Eigen::MatrixXd x = batch;
    for (const auto& l : mlp.layers()) {
        Eigen::MatrixXd pre = x * l.weights.transpose();
        pre.rowwise() += l.bias.transpose();
        Eigen::MatrixXd out = activate(l.activation, pre);
        trace.inputs.push_back(std::move(x));
        trace.pre.push_back(std::move(pre));
        x = std::move(out);
    }
    trace.output = std::move(x);
    return trace;
}

BackwardResult backward(const Mlp& mlp, const ForwardTrace& trace, const Eigen::MatrixXd& upstream) {
    const auto& layers = mlp.layers();
    if (trace.pre.size() != layers.size() || trace.inputs.size() != layers.size()) {
        throw Error("shape", "trace depth does not match network");
    }
    if (upstream.rows() != trace.output.rows() || upstream.cols() != trace.output.cols()) {
        throw Error("shape", "upstream is " + dims(upstream) + ", output is " + dims(trace.output));
    }

    BackwardResult result;
    result.grads.weights.resize(layers.size());
    result.grads.bias.resize(layers.size());

    Eigen::MatrixXd grad_out = upstream;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& l = layers[k];
        const Eigen::MatrixXd& out = (k + 1 < layers.size()) ? trace.inputs[k + 1] : trace.output;
        const Eigen::MatrixXd delta =
            grad_out.cwiseProduct(activation_slope(l.activation, trace.pre[k], out));
        result.grads.weights[k] = delta.transpose() * trace.inputs[k];
        result.grads.bias[k] = delta.colwise().sum().transpose();
        grad_out = delta * l.weights;
    }
    result.input_grad = std::move(grad_out);
    return result;
}

PenaltyResult input_gradient_penalty(const Mlp& mlp, const ForwardTrace& trace) {
    const auto& layers = mlp.layers();
    const std::size_t depth = layers.size();
    if (trace.pre.size() != depth) throw Error("shape", "trace depth does not match network");
    if (mlp.out_dim() != 1) throw Error("shape", "input gradient penalty needs a single output unit");
    for (std::size_t k = 0; k + 1 < depth; ++k) {
        if (layers[k].activation == Activation::Sigmoid) {
            throw Error("config", "input gradient penalty needs piecewise-linear hidden layers");
        }
    }
    const auto mask = [&](std::size_t k) {
        return activation_slope(layers[k].activation, trace.pre[k], trace.pre[k]);
    };

    // delta[k]: d logit / d pre[k], one row per sample.
    const Eigen::Index n = trace.pre.front().rows();
    std::vector<Eigen::MatrixXd> delta(depth);
    delta[depth - 1] = Eigen::MatrixXd::Ones(n, 1);
    for (std::size_t k = depth - 1; k > 0; --k) {
        delta[k - 1] = (delta[k] * layers[k].weights).cwiseProduct(mask(k - 1));
    }
    const Eigen::MatrixXd input_grad = delta[0] * layers[0].weights;

    PenaltyResult result;
    result.value = 0.5 * input_grad.squaredNorm();
    result.grads = GradientSet::zeros_like(mlp);
    // Forward-propagate the input gradient through the same linear pieces.
    Eigen::MatrixXd s = input_grad;
    for (std::size_t k = 0; k < depth; ++k) {
        result.grads.weights[k] = delta[k].transpose() * s;
        if (k + 1 < depth) s = (s * layers[k].weights.transpose()).cwiseProduct(mask(k));
    }
    return result;
}

GradientSet finite_diff_grad(const Mlp& mlp, const std::function<double(const Mlp&)>& loss, double eps) {
    if (!(eps > 0.0)) throw Error("config", "finite difference step must be positive");
    GradientSet g = GradientSet::zeros_like(mlp);
    Mlp probe = mlp;

    const auto central = [&](double& param) {
        const double saved = param;
        param = saved + eps;
        const double up = loss(probe);
        param = saved - eps;
        const double down = loss(probe);
        param = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw Error("numeric", "loss is not finite under perturbation");
        }
        return (up - down) / (2.0 * eps);
    };

    for (std::size_t k = 0; k < probe.layers().size(); ++k) {
        auto& l = probe.layers()[k];
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) g.weights[k](r, c) = central(l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) g.bias[k](r) = central(l.bias(r));
    }
    return g;
}

nlohmann::json to_json(const Mlp& mlp) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : mlp.layers()) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        }
        layers.push_back({{"in_dim", l.in_dim()},
                          {"out_dim", l.out_dim()},
                          {"activation", to_string(l.activation)},
                          {"weights", w},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    try {
        std::vector<DenseLayer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto in = jl.at("in_dim").get<Eigen::Index>();
            const auto out = jl.at("out_dim").get<Eigen::Index>();
            const auto w = jl.at("weights").get<std::vector<double>>();
            const auto b = jl.at("bias").get<std::vector<double>>();
            if (in < 1 || out < 1 || static_cast<Eigen::Index>(w.size()) != in * out ||
                static_cast<Eigen::Index>(b.size()) != out) {
                throw Error("parse", "network layer arrays do not match declared dims");
            }
            DenseLayer l;
            l.activation = parse_activation(jl.at("activation").get<std::string>());
            l.weights.resize(out, in);
            for (Eigen::Index r = 0; r < out; ++r) {
                for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
            }
            l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
            layers.push_back(std::move(l));
        }
        return Mlp(std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw Error("parse", std::string("malformed network JSON: ") + e.what());
    }
}

}  // namespace cpdp::nn
