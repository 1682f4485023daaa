#pragma once

#include <filesystem>
#include <string>

#include "diacdm/model.hpp"

namespace diacdm {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON document: {"format_version", "config", "students", "vocabulary",
/// "params": {name: {"shape": [r, c], "values": [...]}}}. Doubles are
/// written in shortest round-trip form, so load(save(m)) is bit-exact.
std::string checkpoint_json(const DiaCdm& model);
DiaCdm checkpoint_from_json(const std::string& text);

void save_checkpoint(const DiaCdm& model, const std::filesystem::path& path);
/// Throws MissingFile or BadCheckpoint.
DiaCdm load_checkpoint(const std::filesystem::path& path);

}  // namespace diacdm
