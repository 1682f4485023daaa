#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "diacdm/trainer.hpp"

namespace diacdm {

/// `key = value` lines; '#' starts a comment. Duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues load_key_values(const std::filesystem::path& path);

/// Applies keys named exactly like TrainConfig fields. `lambda_init` takes
/// three comma-separated numbers. Unknown keys throw BadConfig.
void apply_train_config(const KeyValues& kv, TrainConfig& config);

double parse_double(const std::string& key, const std::string& value);
std::uint64_t parse_uint(const std::string& key, const std::string& value);

}  // namespace diacdm
