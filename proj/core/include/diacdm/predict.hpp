#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diacdm/tensor.hpp"

namespace diacdm {

/// Multi-hot row over the concept vocabulary (Q-matrix row of a question).
struct QMask {
    std::vector<double> bits;

    std::size_t popcount() const;
    Tensor as_tensor() const { return Tensor::row(bits); }
};

/// Two-layer predictor. `hidden_w` and `out_w` are kept non-negative so the
/// output is monotone in the interaction term.
struct PredictParams {
    Tensor hidden_w, hidden_b;  // K x H, 1 x H
    Tensor out_w, out_b;        // H x 1, 1 x 1

    /// Xavier weights projected onto [0, inf), zero biases.
    static PredictParams init(std::size_t n_concepts, std::size_t hidden, std::uint64_t seed);
};

inline constexpr double kProbabilityClamp = 1e-7;

/// x = mask * (h_c - h_f) * h_d;  y = sigmoid(ReLU(x W1 + b1) W2 + b2).
Tensor predict(const Tensor& h_c, const Tensor& difficulty, const Tensor& discrimination,
               const Tensor& mask, const PredictParams& params);

/// Mean binary cross-entropy over the given predictions, with probabilities
/// clamped into [1e-7, 1 - 1e-7]. Throws InvalidLabel for labels other than 0/1.
Tensor bce_loss(const Tensor& probs, std::span<const int> labels);
double bce_loss(double prob, int label);

/// Projects the monotone weights onto [0, inf). Biases are left alone.
void clamp_nonneg(PredictParams& params);

}  // namespace diacdm
