#include "diacdm/cognition.hpp"

#include "diacdm/error.hpp"
#include "diacdm/optim.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

StudentTable::StudentTable(std::vector<std::string> ids, std::size_t n_concepts, std::uint64_t seed)
    : ids_(std::move(ids)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw Error(Errc::DuplicateId, "student '" + ids_[i] + "' registered twice");
        }
    }
    table_ = xavier_init(ids_.size(), n_concepts, derive_seed(seed, "students"));
}

std::size_t StudentTable::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error(Errc::UnknownStudent, "student '" + std::string(id) + "'");
    return it->second;
}

bool StudentTable::contains(std::string_view id) const { return index_.contains(std::string(id)); }

Tensor student_state(const StudentTable& table, std::string_view student_id) {
    return ops::slice_row(table.table(), table.index_of(student_id));
}

Tensor student_state(const StudentTable& table, std::size_t index) {
    if (index >= table.size()) {
        throw Error(Errc::UnknownStudent, "student index " + std::to_string(index));
    }
    return ops::slice_row(table.table(), index);
}

CognitionParams CognitionParams::init(std::size_t n_concepts, std::size_t dim,
                                      std::array<double, 3> lambda_init, std::uint64_t seed) {
    const std::size_t width = n_concepts + 2 * dim;
    CognitionParams p;
    p.question_w = xavier_init(width, n_concepts, derive_seed(seed, "cog.question"));
    p.question_b = Tensor::zeros(1, n_concepts, true);
    p.teacher_w = xavier_init(width, n_concepts, derive_seed(seed, "cog.teacher"));
    p.teacher_b = Tensor::zeros(1, n_concepts, true);
    p.response_w = xavier_init(width, n_concepts, derive_seed(seed, "cog.response"));
    p.response_b = Tensor::zeros(1, n_concepts, true);
    p.lambda_logits = Tensor::row(lambda_init, true);
    return p;
}

namespace {

Tensor affine_head(const Tensor& a, const Tensor& b, const Tensor& c, const Tensor& w,
                   const Tensor& bias) {
    const std::array<Tensor, 3> parts{a, b, c};
    const Tensor x = ops::concat(parts);
    if (x.cols() != w.rows()) {
        throw Error(Errc::ShapeMismatch, "cognitive head: input " + x.shape_string() +
                                             " vs weight " + w.shape_string());
    }
    return ops::add(ops::matmul(x, w), bias);
}

}  // namespace

CognitiveStates cognitive_states(const Tensor& h_s, const Tensor& h_gk, const Tensor& h_a,
                                 const Tensor& h_e, const CognitionParams& params,
                                 AblationMode ablation) {
    const std::size_t k = params.question_b.cols();
    CognitiveStates out;
    out.question_match = ablation == AblationMode::NoQm
                             ? Tensor::zeros(1, k)
                             : affine_head(h_s, h_gk, h_e, params.question_w, params.question_b);
    out.teacher_eval = ablation == AblationMode::NoSe
                           ? Tensor::zeros(1, k)
                           : affine_head(h_s, h_a, h_e, params.teacher_w, params.teacher_b);
    out.student_response = ablation == AblationMode::NoTs
                               ? Tensor::zeros(1, k)
                               : affine_head(h_s, h_gk, h_a, params.response_w, params.response_b);
    return out;
}

std::vector<std::size_t> active_heads(AblationMode ablation) {
    switch (ablation) {
        case AblationMode::NoQm: return {1, 2};
        case AblationMode::NoSe: return {0, 2};
        case AblationMode::NoTs: return {0, 1};
        default: return {0, 1, 2};
    }
}

Tensor fuse(const Tensor& c_q, const Tensor& c_t, const Tensor& c_s, const Tensor& lambda_logits,
            AblationMode ablation) {
    if (c_q.cols() != c_t.cols() || c_q.cols() != c_s.cols()) {
        throw Error(Errc::ShapeMismatch, "fuse: " + c_q.shape_string() + ", " + c_t.shape_string() +
                                             ", " + c_s.shape_string());
    }
    const auto heads = active_heads(ablation);
    const std::array<const Tensor*, 3> states{&c_q, &c_t, &c_s};
    const Tensor weights = ops::softmax(ops::select_cols(lambda_logits, heads));
    Tensor h_c;
    for (std::size_t i = 0; i < heads.size(); ++i) {
        const std::size_t col[] = {i};
        const Tensor term = ops::scale_by(ops::select_cols(weights, col), *states[heads[i]]);
        h_c = i == 0 ? term : ops::add(h_c, term);
    }
    return h_c;
}

std::array<double, 3> fusion_weights(const Tensor& lambda_logits, AblationMode ablation) {
    const auto heads = active_heads(ablation);
    const Tensor w = ops::softmax(ops::select_cols(lambda_logits.detach(), heads));
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < heads.size(); ++i) out[heads[i]] = w.values()[i];
    return out;
}

}  // namespace diacdm
