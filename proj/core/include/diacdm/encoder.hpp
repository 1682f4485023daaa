#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "diacdm/embed.hpp"
#include "diacdm/penman.hpp"
#include "diacdm/tensor.hpp"

namespace diacdm {

enum class QuestionHead : std::size_t { Global = 0, Difficulty = 1, Discrimination = 2 };

/// Learnable tensors of the question encoder. Vectors are rows, so every
/// projection is `x * W + b`.
struct EncoderParams {
    /// gcn[head][layer], each dim x dim.
    std::array<std::vector<Tensor>, 3> gcn;
    Tensor global_w, global_b;                  // dim x dim, 1 x dim
    Tensor difficulty_w, difficulty_b;          // dim x K, 1 x K
    Tensor discrimination_w, discrimination_b;  // dim x K, 1 x K
    Tensor attn_query, attn_key, attn_value;    // dim x dim each

    /// Xavier weights, zero biases.
    static EncoderParams init(std::size_t dim, std::size_t n_concepts, std::size_t layers,
                              std::uint64_t seed);

    std::size_t dim() const noexcept { return global_w.rows(); }
    std::size_t n_concepts() const noexcept { return difficulty_w.cols(); }
    std::size_t layers() const noexcept { return gcn[0].size(); }
};

struct QuestionEncoding {
    Tensor global;          // 1 x dim
    Tensor difficulty;      // 1 x K
    Tensor discrimination;  // 1 x K
};

/// L rounds of H <- ReLU(A_hat H W_l). `node_feats` is n x dim.
Tensor gcn_forward(const Tensor& adjacency, const Tensor& node_feats, std::span<const Tensor> weights);

/// Stacks the node embeddings (looked up by concept label) into n x dim.
Tensor node_features(const AmrGraph& graph, const EmbeddingTable& table, std::uint64_t fallback_seed,
                     FallbackStats* stats = nullptr);

/// Runs each head's GCN, mean-pools over nodes and applies the head's
/// projection.
QuestionEncoding encode_question(const Tensor& adjacency, const Tensor& node_feats,
                                 const EncoderParams& params);
QuestionEncoding encode_question(const AmrGraph& graph, const EmbeddingTable& node_table,
                                 const EncoderParams& params, std::uint64_t fallback_seed);

/// Skips the GCNs: one 1 x dim question vector goes straight into the three
/// projections.
QuestionEncoding encode_question_text(const Tensor& question_vec, const EncoderParams& params);

/// Scaled dot-product attention of the question over its concept vectors
/// (m x dim), added back onto the question: h_g + softmax(q K^T / sqrt(dim)) V.
/// With no concepts the question vector is returned unchanged.
Tensor attend_concepts(const Tensor& question, const Tensor& concept_vecs,
                       const EncoderParams& params);

/// The attention weights alone (1 x m), for inspection.
std::vector<double> attention_weights(const Tensor& question, const Tensor& concept_vecs,
                                      const EncoderParams& params);

}  // namespace diacdm
