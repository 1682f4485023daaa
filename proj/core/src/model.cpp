#include "diacdm/model.hpp"

#include <map>

#include "diacdm/error.hpp"

namespace diacdm {

ModelParams ModelParams::init(const ModelConfig& config, std::vector<std::string> student_ids,
                              std::size_t n_concepts) {
    if (config.dim == 0 || config.hidden == 0 || n_concepts == 0) {
        throw Error(Errc::BadConfig, "dim, hidden and the concept count must be positive");
    }
    ModelParams p;
    p.encoder = EncoderParams::init(config.dim, n_concepts, config.gcn_layers, config.seed);
    p.students = StudentTable(std::move(student_ids), n_concepts, config.seed);
    p.cognition = CognitionParams::init(n_concepts, config.dim, config.lambda_init, config.seed);
    p.predictor = PredictParams::init(n_concepts, config.hidden, config.seed);
    return p;
}

std::vector<NamedTensor> ModelParams::named() const {
    std::vector<NamedTensor> out;
    static constexpr const char* kHeads[] = {"global", "difficulty", "discrimination"};
    for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t l = 0; l < encoder.gcn[h].size(); ++l)
            out.push_back({std::string("encoder.gcn.") + kHeads[h] + "." + std::to_string(l),
                           encoder.gcn[h][l]});
    out.push_back({"encoder.global.w", encoder.global_w});
    out.push_back({"encoder.global.b", encoder.global_b});
    out.push_back({"encoder.difficulty.w", encoder.difficulty_w});
    out.push_back({"encoder.difficulty.b", encoder.difficulty_b});
    out.push_back({"encoder.discrimination.w", encoder.discrimination_w});
    out.push_back({"encoder.discrimination.b", encoder.discrimination_b});
    out.push_back({"encoder.attn.query", encoder.attn_query});
    out.push_back({"encoder.attn.key", encoder.attn_key});
    out.push_back({"encoder.attn.value", encoder.attn_value});
    out.push_back({"students", students.table()});
    out.push_back({"cognition.question.w", cognition.question_w});
    out.push_back({"cognition.question.b", cognition.question_b});
    out.push_back({"cognition.teacher.w", cognition.teacher_w});
    out.push_back({"cognition.teacher.b", cognition.teacher_b});
    out.push_back({"cognition.response.w", cognition.response_w});
    out.push_back({"cognition.response.b", cognition.response_b});
    out.push_back({"cognition.lambda_logits", cognition.lambda_logits});
    out.push_back({"predictor.hidden.w", predictor.hidden_w});
    out.push_back({"predictor.hidden.b", predictor.hidden_b});
    out.push_back({"predictor.out.w", predictor.out_w});
    out.push_back({"predictor.out.b", predictor.out_b});
    return out;
}

std::vector<Tensor> ModelParams::tensors() const {
    std::vector<Tensor> out;
    for (auto& nt : named()) out.push_back(nt.tensor);
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams copy;
    for (std::size_t h = 0; h < 3; ++h)
        for (const Tensor& w : encoder.gcn[h]) copy.encoder.gcn[h].push_back(w.detach(true));
    auto dup = [](const Tensor& t) { return t.detach(true); };
    copy.encoder.global_w = dup(encoder.global_w);
    copy.encoder.global_b = dup(encoder.global_b);
    copy.encoder.difficulty_w = dup(encoder.difficulty_w);
    copy.encoder.difficulty_b = dup(encoder.difficulty_b);
    copy.encoder.discrimination_w = dup(encoder.discrimination_w);
    copy.encoder.discrimination_b = dup(encoder.discrimination_b);
    copy.encoder.attn_query = dup(encoder.attn_query);
    copy.encoder.attn_key = dup(encoder.attn_key);
    copy.encoder.attn_value = dup(encoder.attn_value);
    copy.students = students;
    copy.students.table() = dup(students.table());
    copy.cognition.question_w = dup(cognition.question_w);
    copy.cognition.question_b = dup(cognition.question_b);
    copy.cognition.teacher_w = dup(cognition.teacher_w);
    copy.cognition.teacher_b = dup(cognition.teacher_b);
    copy.cognition.response_w = dup(cognition.response_w);
    copy.cognition.response_b = dup(cognition.response_b);
    copy.cognition.lambda_logits = dup(cognition.lambda_logits);
    copy.predictor.hidden_w = dup(predictor.hidden_w);
    copy.predictor.hidden_b = dup(predictor.hidden_b);
    copy.predictor.out_w = dup(predictor.out_w);
    copy.predictor.out_b = dup(predictor.out_b);
    return copy;
}

void ModelParams::assign_from(const ModelParams& other) {
    auto dst = named();
    auto src = other.named();
    if (dst.size() != src.size()) throw Error(Errc::ShapeMismatch, "assign_from: parameter count differs");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].tensor.rows() != src[i].tensor.rows() || dst[i].tensor.cols() != src[i].tensor.cols()) {
            throw Error(Errc::ShapeMismatch, "assign_from: " + dst[i].name + " " +
                                                 dst[i].tensor.shape_string() + " vs " +
                                                 src[i].tensor.shape_string());
        }
        auto out = dst[i].tensor.mutable_values();
        auto in = src[i].tensor.values();
        std::copy(in.begin(), in.end(), out.begin());
    }
}

std::vector<RoundInput> prepare_inputs(const Dataset& ds, std::uint64_t fallback_seed,
                                       FallbackStats* stats) {
    const EmbeddingTable& table = ds.embeddings;
    const std::size_t dim = table.dim();
    auto vec_row = [&](const std::string& id) {
        return Tensor::row(lookup_or_fallback(table, id, fallback_seed, stats));
    };

    struct QuestionCache {
        bool has_graph;
        Tensor adjacency, node_feats, text;
    };
    std::map<std::string, QuestionCache> questions;
    std::map<std::string, Tensor> concept_rows;

    std::vector<RoundInput> out;
    out.reserve(ds.rounds.size());
    for (std::size_t i = 0; i < ds.rounds.size(); ++i) {
        const DialogueRound& r = ds.rounds[i];
        RoundInput in;
        in.round_index = i;
        in.student = ds.student_index(r.student_id);
        in.turn = r.turn;
        in.label = r.correct;

        auto q = questions.find(r.question_id);
        if (q == questions.end()) {
            QuestionCache qc;
            auto g = ds.amr.find(r.question_id);
            qc.has_graph = g != ds.amr.end();
            if (qc.has_graph) {
                qc.adjacency = NormalizedAdjacency(g->second).as_tensor();
                qc.node_feats = node_features(g->second, table, fallback_seed, stats);
            }
            qc.text = vec_row(r.question_id);
            q = questions.emplace(r.question_id, std::move(qc)).first;
        }
        in.has_graph = q->second.has_graph;
        in.adjacency = q->second.adjacency;
        in.node_feats = q->second.node_feats;
        in.question_text = q->second.text;

        std::vector<double> concept_values;
        concept_values.reserve(r.concepts.size() * dim);
        for (const auto& c : r.concepts) {
            auto it = concept_rows.find(c);
            if (it == concept_rows.end()) it = concept_rows.emplace(c, vec_row(c)).first;
            concept_values.insert(concept_values.end(), it->second.values().begin(),
                                  it->second.values().end());
            in.concept_indices.push_back(ds.concept_index(c));
        }
        in.concepts = Tensor::from_values(r.concepts.size(), dim, std::move(concept_values));
        in.answer = vec_row(r.answer_id);
        in.evaluation = vec_row(r.evaluation_id);
        in.mask = qmask(r.concepts, ds.vocabulary).as_tensor();
        out.push_back(std::move(in));
    }
    return out;
}

DiaCdm::DiaCdm(ModelConfig config, std::vector<std::string> students, std::vector<std::string> vocabulary)
    : config_(config),
      params_(ModelParams::init(config, std::move(students), vocabulary.size())),
      vocabulary_(std::move(vocabulary)) {}

DiaCdm::DiaCdm(ModelConfig config, ModelParams params, std::vector<std::string> vocabulary)
    : config_(config), params_(std::move(params)), vocabulary_(std::move(vocabulary)) {}

RoundTrace DiaCdm::forward(const RoundInput& in) const {
    const EncoderParams& enc = params_.encoder;
    RoundTrace t;
    if (config_.ablation == AblationMode::NoAmr || !in.has_graph) {
        t.question = encode_question_text(in.question_text, enc);
    } else {
        t.question = encode_question(in.adjacency, in.node_feats, enc);
    }
    t.knowledge_question = config_.ablation == AblationMode::NoKc
                               ? t.question.global
                               : attend_concepts(t.question.global, in.concepts, enc);
    const Tensor h_s = student_state(params_.students, in.student);
    t.states = cognitive_states(h_s, t.knowledge_question, in.answer, in.evaluation,
                                params_.cognition, config_.ablation);
    t.states.mastery = fuse(t.states.question_match, t.states.teacher_eval, t.states.student_response,
                            params_.cognition.lambda_logits, config_.ablation);
    t.probability = predict(t.states.mastery, t.question.difficulty, t.question.discrimination, in.mask,
                            params_.predictor);
    return t;
}

Tensor DiaCdm::loss(std::span<const RoundInput* const> batch) const {
    if (batch.empty()) throw Error(Errc::EmptySplit, "loss over an empty batch");
    std::vector<Tensor> probs;
    std::vector<int> labels;
    probs.reserve(batch.size());
    labels.reserve(batch.size());
    for (const RoundInput* in : batch) {
        probs.push_back(forward(*in).probability);
        labels.push_back(in->label);
    }
    return bce_loss(ops::concat_rows(probs), labels);
}

double DiaCdm::probability(const RoundInput& input) const { return forward(input).probability.item(); }

}  // namespace diacdm
