#pragma once

#include "cpdp/nn.hpp"

#include <cstdint>
#include <vector>

namespace cpdp::optim {

/// Seeded permutation of 0..n-1 that differs from epoch to epoch.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// permutation(n, seed, epoch) cut into ceil(n / batch_size) consecutive
/// chunks; only the last may be short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch);

/// theta <- theta - lr * g
void sgd_step(nn::Mlp& mlp, const nn::GradientSet& grads, double lr);

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Bias-corrected Adam moments for one network.
class AdamState {
public:
    AdamState(const nn::Mlp& mlp, AdamConfig config);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t timestep() const noexcept { return timestep_; }
    const nn::GradientSet& first_moment() const noexcept { return m_; }
    const nn::GradientSet& second_moment() const noexcept { return v_; }

    friend void adam_step(nn::Mlp& mlp, const nn::GradientSet& grads, AdamState& state);

private:
    AdamConfig config_;
    std::uint64_t timestep_ = 0;
    nn::GradientSet m_;
    nn::GradientSet v_;
};

void adam_step(nn::Mlp& mlp, const nn::GradientSet& grads, AdamState& state);

}  // namespace cpdp::optim
