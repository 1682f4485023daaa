#include "diacdm/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "diacdm/error.hpp"

namespace diacdm {

using nlohmann::json;

std::string checkpoint_json(const DiaCdm& model) {
    const ModelConfig& c = model.config();
    json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["config"] = {{"dim_g", c.dim},
                   {"gcn_layers", c.gcn_layers},
                   {"hidden", c.hidden},
                   {"ablation", std::string(ablation_name(c.ablation))},
                   {"lambda_init", c.lambda_init},
                   {"seed", c.seed},
                   {"fallback_seed", c.fallback_seed}};
    j["students"] = model.params().students.ids();
    j["vocabulary"] = model.vocabulary();
    json params = json::object();
    for (const auto& nt : model.params().named()) {
        params[nt.name] = {{"shape", {nt.tensor.rows(), nt.tensor.cols()}},
                           {"values", std::vector<double>(nt.tensor.values().begin(),
                                                          nt.tensor.values().end())}};
    }
    j["params"] = std::move(params);
    return j.dump();
}

DiaCdm checkpoint_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::BadCheckpoint, e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw Error(Errc::BadCheckpoint, "unsupported format_version " + j["format_version"].dump());
        }
        const json& jc = j.at("config");
        ModelConfig c;
        c.dim = jc.at("dim_g").get<std::size_t>();
        c.gcn_layers = jc.at("gcn_layers").get<std::size_t>();
        c.hidden = jc.at("hidden").get<std::size_t>();
        c.ablation = parse_ablation(jc.at("ablation").get<std::string>());
        c.lambda_init = jc.at("lambda_init").get<std::array<double, 3>>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        c.fallback_seed = jc.at("fallback_seed").get<std::uint64_t>();
        auto students = j.at("students").get<std::vector<std::string>>();
        auto vocabulary = j.at("vocabulary").get<std::vector<std::string>>();

        DiaCdm model(c, std::move(students), std::move(vocabulary));
        const json& jp = j.at("params");
        for (auto& nt : model.params().named()) {
            if (!jp.contains(nt.name)) throw Error(Errc::BadCheckpoint, "missing parameter " + nt.name);
            const json& entry = jp[nt.name];
            const auto shape = entry.at("shape").get<std::array<std::size_t, 2>>();
            const auto values = entry.at("values").get<std::vector<double>>();
            if (shape[0] != nt.tensor.rows() || shape[1] != nt.tensor.cols() ||
                values.size() != nt.tensor.size()) {
                throw Error(Errc::BadCheckpoint, nt.name + ": stored shape does not match the config");
            }
            auto out = nt.tensor.mutable_values();
            std::copy(values.begin(), values.end(), out.begin());
        }
        return model;
    } catch (const json::exception& e) {
        throw Error(Errc::BadCheckpoint, e.what());
    }
}

void save_checkpoint(const DiaCdm& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << checkpoint_json(model) << '\n';
}

DiaCdm load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::MissingFile, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace diacdm
