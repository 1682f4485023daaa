#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "diacdm/tensor.hpp"

namespace diacdm {

/// fan_in x fan_out matrix drawn from U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
/// The result requires a gradient.
Tensor xavier_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

double xavier_bound(std::size_t fan_in, std::size_t fan_out);

struct AdamConfig {
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;
    /// Runs after every update, e.g. to project constrained parameters.
    std::function<void()> post_step;
};

/// One bias-corrected Adam update of `params` from their accumulated
/// gradients. Parameters without a gradient buffer are treated as having
/// zero gradient. Moment buffers are created on the first call.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace diacdm
