#include "diacdm/embed.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>

#include "diacdm/error.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

std::string_view embedding_kind_name(EmbeddingKind kind) noexcept {
    switch (kind) {
        case EmbeddingKind::Node: return "node";
        case EmbeddingKind::Text: return "text";
        case EmbeddingKind::Concept: return "concept";
    }
    return "text";
}

EmbeddingKind parse_embedding_kind(std::string_view name) {
    if (name == "node") return EmbeddingKind::Node;
    if (name == "text") return EmbeddingKind::Text;
    if (name == "concept") return EmbeddingKind::Concept;
    throw Error(Errc::MalformedRecord, "unknown embedding kind '" + std::string(name) + "'");
}

void EmbeddingTable::insert(std::string id, EmbeddingKind kind, std::vector<double> vec) {
    if (dim_ == 0 && entries_.empty()) dim_ = vec.size();
    if (vec.size() != dim_ || dim_ == 0) {
        throw Error(Errc::DimMismatch, "id '" + id + "' has dim " + std::to_string(vec.size()) +
                                           ", table dim is " + std::to_string(dim_));
    }
    for (double v : vec) {
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "id '" + id + "'");
    }
    if (index_.contains(id)) throw Error(Errc::DuplicateId, "id '" + id + "'");
    index_.emplace(id, entries_.size());
    entries_.push_back({std::move(id), kind, std::move(vec)});
}

bool EmbeddingTable::erase(std::string_view id) {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return false;
    const std::size_t pos = it->second;
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(pos));
    index_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].id, i);
    return true;
}

const EmbeddingEntry* EmbeddingTable::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

EmbeddingTable read_embeddings(std::istream& in, const std::string& source) {
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::MalformedRecord, where + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("vec") ||
            !obj["id"].is_string() || !obj["vec"].is_array()) {
            throw Error(Errc::MalformedRecord, where + ": expected {\"id\", \"kind\", \"vec\"}");
        }
        EmbeddingKind kind = EmbeddingKind::Text;
        if (obj.contains("kind")) {
            if (!obj["kind"].is_string()) throw Error(Errc::MalformedRecord, where + ": kind must be a string");
            try {
                kind = parse_embedding_kind(obj["kind"].get<std::string>());
            } catch (const Error& e) {
                throw Error(Errc::MalformedRecord, where + ": " + e.what());
            }
        }
        std::vector<double> vec;
        vec.reserve(obj["vec"].size());
        for (const auto& v : obj["vec"]) {
            // NaN and infinities usually arrive as null.
            if (v.is_null()) {
                throw Error(Errc::NonFiniteValue, where + ": id '" + obj["id"].get<std::string>() + "'");
            }
            if (!v.is_number()) {
                throw Error(Errc::MalformedRecord, where + ": non-numeric vector entry");
            }
            vec.push_back(v.get<double>());
        }
        if (!table.empty() && vec.size() != table.dim()) {
            throw Error(Errc::DimMismatch, where + ": dim " + std::to_string(vec.size()) +
                                               ", expected " + std::to_string(table.dim()));
        }
        table.insert(obj["id"].get<std::string>(), kind, std::move(vec));
    }
    if (table.empty()) throw Error(Errc::EmptyFile, source + " has no embeddings");
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    return read_embeddings(in, path.string());
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
    for (const auto& e : table.entries()) {
        nlohmann::json obj;
        obj["id"] = e.id;
        obj["kind"] = embedding_kind_name(e.kind);
        obj["vec"] = e.vec;
        out << obj.dump() << '\n';
    }
}

std::vector<double> hash_embedding(std::string_view token, std::size_t dim, std::uint64_t seed) {
    Rng rng(splitmix64(fnv1a64(token)) ^ splitmix64(seed + 0x5eedULL));
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm2 += x * x;
    }
    // A zero vector needs every draw to be exactly zero; redraw just in case.
    while (norm2 == 0.0 && dim > 0) {
        norm2 = 0.0;
        for (double& x : v) {
            x = rng.uniform(-1.0, 1.0);
            norm2 += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

std::vector<double> lookup_or_fallback(const EmbeddingTable& table, std::string_view id,
                                       std::uint64_t fallback_seed, FallbackStats* stats) {
    if (const EmbeddingEntry* e = table.find(id)) {
        if (stats) ++stats->hits;
        return e->vec;
    }
    if (stats) ++stats->fallbacks;
    return hash_embedding(id, table.dim(), fallback_seed);
}

}  // namespace diacdm
