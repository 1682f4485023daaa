#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace diacdm {

enum class EmbeddingKind { Node, Text, Concept };

std::string_view embedding_kind_name(EmbeddingKind kind) noexcept;
EmbeddingKind parse_embedding_kind(std::string_view name);

struct EmbeddingEntry {
    std::string id;
    EmbeddingKind kind = EmbeddingKind::Text;
    std::vector<double> vec;
};

/// id -> fixed-length vector. Node entries are keyed by AMR concept label,
/// text entries by answer/evaluation/question id, concept entries by
/// concept id. Lookups ignore the kind.
class EmbeddingTable {
   public:
    explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Throws DuplicateId, DimMismatch or NonFiniteValue.
    void insert(std::string id, EmbeddingKind kind, std::vector<double> vec);
    bool erase(std::string_view id);

    const EmbeddingEntry* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    /// Entries in insertion order.
    const std::vector<EmbeddingEntry>& entries() const noexcept { return entries_; }

   private:
    std::size_t dim_;
    std::vector<EmbeddingEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads `embeddings.jsonl`: one {"id", "kind", "vec"} object per line. The
/// dimension is fixed by the first line. Errors: EmptyFile, DimMismatch,
/// DuplicateId, NonFiniteValue, MalformedRecord, MissingFile.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "<stream>");
void write_embeddings(const EmbeddingTable& table, std::ostream& out);

/// Deterministic unit-norm stand-in for an encoder: the token and seed pick
/// a PRNG stream, `dim` values are drawn from U(-1, 1) and L2-normalized.
std::vector<double> hash_embedding(std::string_view token, std::size_t dim, std::uint64_t seed);

struct FallbackStats {
    std::size_t hits = 0;
    std::size_t fallbacks = 0;
};

/// Stored vector for `id`, or hash_embedding(id, table.dim(), seed) when the
/// id is absent. Counts the outcome in `stats` when given.
std::vector<double> lookup_or_fallback(const EmbeddingTable& table, std::string_view id,
                                       std::uint64_t fallback_seed, FallbackStats* stats = nullptr);

}  // namespace diacdm
