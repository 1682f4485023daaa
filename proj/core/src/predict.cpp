#include "diacdm/predict.hpp"

#include <algorithm>
#include <cmath>

#include "diacdm/error.hpp"
#include "diacdm/optim.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

std::size_t QMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1.0));
}

PredictParams PredictParams::init(std::size_t n_concepts, std::size_t hidden, std::uint64_t seed) {
    PredictParams p;
    p.hidden_w = xavier_init(n_concepts, hidden, derive_seed(seed, "pred.hidden"));
    p.hidden_b = Tensor::zeros(1, hidden, true);
    p.out_w = xavier_init(hidden, 1, derive_seed(seed, "pred.out"));
    p.out_b = Tensor::zeros(1, 1, true);
    clamp_nonneg(p);
    return p;
}

Tensor predict(const Tensor& h_c, const Tensor& difficulty, const Tensor& discrimination,
               const Tensor& mask, const PredictParams& params) {
    const Tensor x = ops::mul(mask, ops::mul(ops::sub(h_c, difficulty), discrimination));
    const Tensor hidden = ops::relu(ops::add(ops::matmul(x, params.hidden_w), params.hidden_b));
    return ops::sigmoid(ops::add(ops::matmul(hidden, params.out_w), params.out_b));
}

Tensor bce_loss(const Tensor& probs, std::span<const int> labels) {
    return ops::binary_cross_entropy(probs, labels, kProbabilityClamp);
}

double bce_loss(double prob, int label) {
    if (label != 0 && label != 1) throw Error(Errc::InvalidLabel, "label " + std::to_string(label));
    const double p = std::clamp(prob, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

void clamp_nonneg(PredictParams& params) {
    for (Tensor* t : {&params.hidden_w, &params.out_w}) {
        for (double& v : t->mutable_values()) v = std::max(v, 0.0);
    }
}

}  // namespace diacdm
