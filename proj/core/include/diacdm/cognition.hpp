#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diacdm/ablation.hpp"
#include "diacdm/tensor.hpp"

namespace diacdm {

/// One learnable |K|-dim row per registered student.
class StudentTable {
   public:
    StudentTable() = default;
    StudentTable(std::vector<std::string> ids, std::size_t n_concepts, std::uint64_t seed);

    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    /// Throws UnknownStudent.
    std::size_t index_of(std::string_view id) const;
    bool contains(std::string_view id) const;

    Tensor& table() noexcept { return table_; }
    const Tensor& table() const noexcept { return table_; }

   private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
    Tensor table_;
};

/// The student's row h_s (1 x K), differentiable w.r.t. the table.
Tensor student_state(const StudentTable& table, std::string_view student_id);
Tensor student_state(const StudentTable& table, std::size_t index);

struct CognitionParams {
    // Each head maps concat(h_s, x, y) of width K + 2*dim to K.
    Tensor question_w, question_b;    // C_q
    Tensor teacher_w, teacher_b;      // C_t
    Tensor response_w, response_b;    // C_s
    Tensor lambda_logits;             // 1 x 3, fused through softmax

    static CognitionParams init(std::size_t n_concepts, std::size_t dim,
                                std::array<double, 3> lambda_init, std::uint64_t seed);
};

struct CognitiveStates {
    Tensor question_match;   // C_q
    Tensor teacher_eval;     // C_t
    Tensor student_response; // C_s
    Tensor mastery;          // h_c
};

/// C_q = [h_s, h_gk, h_e] W_q + b_q, C_t = [h_s, h_a, h_e] W_t + b_t and
/// C_s = [h_s, h_gk, h_a] W_s + b_s. The head dropped by `ablation` is not
/// computed and comes back as a zero constant. `mastery` is left empty;
/// see fuse().
CognitiveStates cognitive_states(const Tensor& h_s, const Tensor& h_gk, const Tensor& h_a,
                                 const Tensor& h_e, const CognitionParams& params,
                                 AblationMode ablation);

/// Indices (into q, t, s order) of the heads that take part in fusion.
std::vector<std::size_t> active_heads(AblationMode ablation);

/// h_c = sum_i lambda_i C_i with lambda = softmax over the active heads'
/// logits.
Tensor fuse(const Tensor& c_q, const Tensor& c_t, const Tensor& c_s, const Tensor& lambda_logits,
            AblationMode ablation);

/// The fusion weights in (q, t, s) order; dropped heads get 0.
std::array<double, 3> fusion_weights(const Tensor& lambda_logits, AblationMode ablation);

}  // namespace diacdm
