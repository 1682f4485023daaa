#include "diacdm/ablation.hpp"

#include <string>

#include "diacdm/error.hpp"

namespace diacdm {

std::string_view ablation_name(AblationMode mode) noexcept {
    switch (mode) {
        case AblationMode::Full: return "full";
        case AblationMode::NoAmr: return "no_amr";
        case AblationMode::NoKc: return "no_kc";
        case AblationMode::NoQm: return "no_qm";
        case AblationMode::NoTs: return "no_ts";
        case AblationMode::NoSe: return "no_se";
    }
    return "full";
}

AblationMode parse_ablation(std::string_view name) {
    for (auto mode : {AblationMode::Full, AblationMode::NoAmr, AblationMode::NoKc, AblationMode::NoQm,
                      AblationMode::NoTs, AblationMode::NoSe}) {
        if (ablation_name(mode) == name) return mode;
    }
    throw Error(Errc::BadConfig, "unknown ablation mode '" + std::string(name) + "'");
}

}  // namespace diacdm
