#include "diacdm/config_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "diacdm/error.hpp"

namespace diacdm {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues read_key_values(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::BadConfig, source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(Errc::BadConfig, source + ":" + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second) {
            throw Error(Errc::BadConfig, source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    return read_key_values(in, path.string());
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::BadConfig, key + ": '" + value + "' is not a number");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw Error(Errc::BadConfig, key + ": '" + value + "' is not a non-negative integer");
    }
    return v;
}

void apply_train_config(const KeyValues& kv, TrainConfig& c) {
    for (const auto& [key, value] : kv) {
        if (key == "lr") {
            c.lr = parse_double(key, value);
        } else if (key == "batch_size") {
            c.batch_size = parse_uint(key, value);
        } else if (key == "max_epochs") {
            c.max_epochs = parse_uint(key, value);
        } else if (key == "patience") {
            c.patience = parse_uint(key, value);
        } else if (key == "dim_g") {
            c.dim_g = parse_uint(key, value);
        } else if (key == "gcn_layers") {
            c.gcn_layers = parse_uint(key, value);
        } else if (key == "hidden") {
            c.hidden = parse_uint(key, value);
        } else if (key == "seed") {
            c.seed = parse_uint(key, value);
        } else if (key == "ablation") {
            c.ablation = parse_ablation(value);
        } else if (key == "lambda_init") {
            std::array<double, 3> l{};
            std::size_t i = 0, start = 0;
            while (true) {
                const auto comma = value.find(',', start);
                const std::string part = trim(value.substr(start, comma - start));
                if (i >= 3) throw Error(Errc::BadConfig, "lambda_init needs exactly 3 values");
                l[i++] = parse_double(key, part);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            if (i != 3) throw Error(Errc::BadConfig, "lambda_init needs exactly 3 values");
            c.lambda_init = l;
        } else {
            throw Error(Errc::BadConfig, "unknown config key '" + key + "'");
        }
    }
    c.validate();
}

}  // namespace diacdm
