#pragma once

#include <string_view>

namespace diacdm {

/// Which subsystem a run leaves out.
///   no_amr: question encoded from a single text embedding, GCNs unused
///   no_kc:  concept attention skipped (h_gk = h_g)
///   no_qm:  question-matching state C_q dropped
///   no_ts:  student-response state C_s dropped
///   no_se:  teacher-evaluation state C_t dropped
enum class AblationMode { Full, NoAmr, NoKc, NoQm, NoTs, NoSe };

std::string_view ablation_name(AblationMode mode) noexcept;
/// Accepts the names above ("full", "no_amr", ...). Throws BadConfig.
AblationMode parse_ablation(std::string_view name);

}  // namespace diacdm
