#include "cpdp/optim.hpp"

#include "cpdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cpdp::optim {

namespace {

void check_update(const nn::Mlp& mlp, const nn::GradientSet& grads) {
    if (!grads.congruent_with(mlp)) throw Error("shape", "gradient set does not match network shape");
    if (!grads.all_finite()) throw Error("numeric", "non-finite gradient");
}

}  // namespace

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch) {
    if (n < 1 || batch_size < 1) throw Error("config", "minibatches need n >= 1 and batch_size >= 1");
    const auto idx = permutation(n, seed, epoch);
    std::vector<std::vector<std::size_t>> batches;
    batches.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const auto end = std::min(n, start + batch_size);
        batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                             idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

void sgd_step(nn::Mlp& mlp, const nn::GradientSet& grads, double lr) {
    check_update(mlp, grads);
    if (!(lr > 0.0)) throw Error("config", "learning rate must be positive");
    auto& layers = mlp.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weights -= lr * grads.weights[k];
        layers[k].bias -= lr * grads.bias[k];
    }
}

void AdamConfig::validate() const {
    if (!(lr > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw Error("config", "Adam needs lr > 0, betas in (0,1) and eps > 0");
    }
}

AdamState::AdamState(const nn::Mlp& mlp, AdamConfig config)
    : config_(config), m_(nn::GradientSet::zeros_like(mlp)), v_(nn::GradientSet::zeros_like(mlp)) {
    config_.validate();
}

void adam_step(nn::Mlp& mlp, const nn::GradientSet& grads, AdamState& state) {
    check_update(mlp, grads);
    if (!state.m_.congruent_with(mlp)) throw Error("shape", "Adam state does not match network shape");

    const auto& cfg = state.config_;
    state.timestep_ += 1;
    const double t = static_cast<double>(state.timestep_);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);

    const auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        const auto m_hat = (m / correction1).array();
        const auto v_hat = (v / correction2).array();
        param.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    };

    auto& layers = mlp.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        update(layers[k].weights, state.m_.weights[k], state.v_.weights[k], grads.weights[k]);
        update(layers[k].bias, state.m_.bias[k], state.v_.bias[k], grads.bias[k]);
    }
}

}  // namespace cpdp::optim
