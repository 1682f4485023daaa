#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diacdm/ablation.hpp"
#include "diacdm/cognition.hpp"
#include "diacdm/data.hpp"
#include "diacdm/encoder.hpp"
#include "diacdm/predict.hpp"

namespace diacdm {

inline constexpr std::uint64_t kDefaultFallbackSeed = 0x5eedULL;

struct ModelConfig {
    std::size_t dim = kDefaultEmbeddingDim;
    std::size_t gcn_layers = 2;
    std::size_t hidden = 64;
    AblationMode ablation = AblationMode::Full;
    std::array<double, 3> lambda_init{0.0, 0.0, 0.0};
    std::uint64_t seed = 0;
    std::uint64_t fallback_seed = kDefaultFallbackSeed;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Every learnable tensor of the model.
struct ModelParams {
    EncoderParams encoder;
    StudentTable students;
    CognitionParams cognition;
    PredictParams predictor;

    static ModelParams init(const ModelConfig& config, std::vector<std::string> student_ids,
                            std::size_t n_concepts);

    /// Handles to all parameters in a fixed order with stable names.
    std::vector<NamedTensor> named() const;
    std::vector<Tensor> tensors() const;

    /// Deep copy: the result shares no storage with *this.
    ModelParams clone() const;
    /// Overwrites values from a structurally identical set of parameters.
    void assign_from(const ModelParams& other);
};

/// Everything the forward pass needs for one round, with embeddings
/// already resolved.
struct RoundInput {
    std::size_t round_index = 0;
    std::size_t student = 0;
    int turn = 1;
    int label = 0;
    bool has_graph = false;
    Tensor adjacency;      // n x n, when has_graph
    Tensor node_feats;     // n x dim, when has_graph
    Tensor question_text;  // 1 x dim
    Tensor concepts;       // m x dim
    Tensor answer;         // 1 x dim
    Tensor evaluation;     // 1 x dim
    Tensor mask;           // 1 x K
    std::vector<std::size_t> concept_indices;
};

std::vector<RoundInput> prepare_inputs(const Dataset& dataset, std::uint64_t fallback_seed,
                                       FallbackStats* stats = nullptr);

struct RoundTrace {
    QuestionEncoding question;
    Tensor knowledge_question;  // h_gk
    CognitiveStates states;
    Tensor probability;         // 1 x 1
};

class DiaCdm {
   public:
    DiaCdm(ModelConfig config, std::vector<std::string> students, std::vector<std::string> vocabulary);
    DiaCdm(ModelConfig config, ModelParams params, std::vector<std::string> vocabulary);

    const ModelConfig& config() const noexcept { return config_; }
    const ModelParams& params() const noexcept { return params_; }
    ModelParams& params() noexcept { return params_; }
    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    std::size_t n_concepts() const noexcept { return vocabulary_.size(); }

    RoundTrace forward(const RoundInput& input) const;
    /// Mean cross-entropy over the batch, differentiable.
    Tensor loss(std::span<const RoundInput* const> batch) const;
    double probability(const RoundInput& input) const;

   private:
    ModelConfig config_;
    ModelParams params_;
    std::vector<std::string> vocabulary_;
};

}  // namespace diacdm
