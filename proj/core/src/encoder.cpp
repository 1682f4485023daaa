#include "diacdm/encoder.hpp"

#include <cmath>
#include <string>

#include "diacdm/error.hpp"
#include "diacdm/optim.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

namespace {

constexpr std::array<const char*, 3> kHeadNames = {"global", "difficulty", "discrimination"};

}  // namespace

EncoderParams EncoderParams::init(std::size_t dim, std::size_t n_concepts, std::size_t layers,
                                  std::uint64_t seed) {
    if (layers == 0) throw Error(Errc::BadConfig, "gcn_layers must be >= 1");
    EncoderParams p;
    for (std::size_t h = 0; h < 3; ++h) {
        for (std::size_t l = 0; l < layers; ++l) {
            const std::string name = std::string("gcn.") + kHeadNames[h] + "." + std::to_string(l);
            p.gcn[h].push_back(xavier_init(dim, dim, derive_seed(seed, name)));
        }
    }
    p.global_w = xavier_init(dim, dim, derive_seed(seed, "proj.global"));
    p.global_b = Tensor::zeros(1, dim, true);
    p.difficulty_w = xavier_init(dim, n_concepts, derive_seed(seed, "proj.difficulty"));
    p.difficulty_b = Tensor::zeros(1, n_concepts, true);
    p.discrimination_w = xavier_init(dim, n_concepts, derive_seed(seed, "proj.discrimination"));
    p.discrimination_b = Tensor::zeros(1, n_concepts, true);
    p.attn_query = xavier_init(dim, dim, derive_seed(seed, "attn.query"));
    p.attn_key = xavier_init(dim, dim, derive_seed(seed, "attn.key"));
    p.attn_value = xavier_init(dim, dim, derive_seed(seed, "attn.value"));
    return p;
}

Tensor gcn_forward(const Tensor& adjacency, const Tensor& node_feats, std::span<const Tensor> weights) {
    if (adjacency.rows() != adjacency.cols() || adjacency.rows() != node_feats.rows()) {
        throw Error(Errc::ShapeMismatch, "gcn_forward: adjacency " + adjacency.shape_string() +
                                             " vs node features " + node_feats.shape_string());
    }
    Tensor h = node_feats;
    for (const Tensor& w : weights) h = ops::relu(ops::matmul(ops::matmul(adjacency, h), w));
    return h;
}

Tensor node_features(const AmrGraph& graph, const EmbeddingTable& table, std::uint64_t fallback_seed,
                     FallbackStats* stats) {
    const std::size_t dim = table.dim();
    std::vector<double> values;
    values.reserve(graph.node_count() * dim);
    for (const AmrNode& node : graph.nodes) {
        auto v = lookup_or_fallback(table, node.label, fallback_seed, stats);
        values.insert(values.end(), v.begin(), v.end());
    }
    return Tensor::from_values(graph.node_count(), dim, std::move(values));
}

namespace {

QuestionEncoding project(const Tensor& g, const Tensor& f, const Tensor& d, const EncoderParams& p) {
    return {ops::add(ops::matmul(g, p.global_w), p.global_b),
            ops::add(ops::matmul(f, p.difficulty_w), p.difficulty_b),
            ops::add(ops::matmul(d, p.discrimination_w), p.discrimination_b)};
}

}  // namespace

QuestionEncoding encode_question(const Tensor& adjacency, const Tensor& node_feats,
                                 const EncoderParams& params) {
    if (node_feats.rows() == 0) throw Error(Errc::ShapeMismatch, "encode_question: empty graph");
    std::array<Tensor, 3> pooled;
    for (std::size_t h = 0; h < 3; ++h) {
        pooled[h] = ops::mean_rows(gcn_forward(adjacency, node_feats, params.gcn[h]));
    }
    return project(pooled[0], pooled[1], pooled[2], params);
}

QuestionEncoding encode_question(const AmrGraph& graph, const EmbeddingTable& node_table,
                                 const EncoderParams& params, std::uint64_t fallback_seed) {
    return encode_question(NormalizedAdjacency(graph).as_tensor(),
                           node_features(graph, node_table, fallback_seed), params);
}

QuestionEncoding encode_question_text(const Tensor& question_vec, const EncoderParams& params) {
    return project(question_vec, question_vec, question_vec, params);
}

namespace {

Tensor attention_scores(const Tensor& question, const Tensor& concept_vecs, const EncoderParams& p) {
    const Tensor q = ops::matmul(question, p.attn_query);
    const Tensor k = ops::matmul(concept_vecs, p.attn_key);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(question.cols()));
    return ops::softmax(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt));
}

}  // namespace

Tensor attend_concepts(const Tensor& question, const Tensor& concept_vecs, const EncoderParams& params) {
    if (concept_vecs.rows() == 0) return question;
    if (concept_vecs.cols() != question.cols()) {
        throw Error(Errc::ShapeMismatch, "attend_concepts: question " + question.shape_string() +
                                             " vs concepts " + concept_vecs.shape_string());
    }
    const Tensor weights = attention_scores(question, concept_vecs, params);
    const Tensor v = ops::matmul(concept_vecs, params.attn_value);
    return ops::add(question, ops::matmul(weights, v));
}

std::vector<double> attention_weights(const Tensor& question, const Tensor& concept_vecs,
                                      const EncoderParams& params) {
    if (concept_vecs.rows() == 0) return {};
    const Tensor w = attention_scores(question.detach(), concept_vecs, params);
    return {w.values().begin(), w.values().end()};
}

}  // namespace diacdm
