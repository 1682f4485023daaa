#include "diacdm/optim.hpp"

#include <cmath>
#include <string>

#include "diacdm/error.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor xavier_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    if (fan_in == 0 || fan_out == 0) {
        throw Error(Errc::ZeroFan, "xavier_init(" + std::to_string(fan_in) + ", " +
                                       std::to_string(fan_out) + ")");
    }
    const double bound = xavier_bound(fan_in, fan_out);
    Rng rng(seed);
    std::vector<double> values(fan_in * fan_out);
    for (double& v : values) v = rng.uniform(-bound, bound);
    return Tensor::from_values(fan_in, fan_out, std::move(values), true);
}

void adam_step(std::span<Tensor> params, AdamState& state) {
    if (state.m.empty()) {
        for (const Tensor& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw Error(Errc::ShapeMismatch, "adam_step: state tracks " + std::to_string(state.m.size()) +
                                             " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].size() != params[i].size()) {
            throw Error(Errc::ShapeMismatch,
                        "adam_step: moment size " + std::to_string(state.m[i].size()) +
                            " vs parameter " + params[i].shape_string());
        }
    }

    state.t += 1;
    const auto& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto grad = params[i].grad();
        auto values = params[i].mutable_values();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = grad.empty() ? 0.0 : grad[j];
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            values[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
    if (state.post_step) state.post_step();
}

}  // namespace diacdm
