#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "diacdm/embed.hpp"
#include "diacdm/penman.hpp"
#include "diacdm/predict.hpp"

namespace diacdm {

/// One initiation-response-evaluation exchange.
struct DialogueRound {
    std::string student_id;
    int turn = 1;
    std::string question_id;
    std::string answer_id;
    std::string evaluation_id;
    std::vector<std::string> concepts;
    int correct = 0;
};

struct Dataset {
    std::vector<DialogueRound> rounds;
    /// Line order of concepts.txt; defines the concept index space.
    std::vector<std::string> vocabulary;
    /// Students in order of first appearance.
    std::vector<std::string> students;
    std::map<std::string, AmrGraph> amr;
    EmbeddingTable embeddings;

    std::size_t concept_index(std::string_view concept_id) const;
    std::size_t student_index(std::string_view student_id) const;

    /// Rebuilds the lookup maps; call after editing vocabulary/students.
    void reindex();

   private:
    std::unordered_map<std::string, std::size_t> concept_index_;
    std::unordered_map<std::string, std::size_t> student_index_;
};

/// How many references will be served by the hash fallback.
struct LoadReport {
    std::size_t rounds = 0;
    std::size_t questions_without_amr = 0;
    std::size_t missing_node_labels = 0;
    std::size_t missing_texts = 0;
    std::size_t missing_concepts = 0;

    std::size_t fallback_total() const {
        return questions_without_amr + missing_node_labels + missing_texts + missing_concepts;
    }
};

inline constexpr std::size_t kDefaultEmbeddingDim = 16;

/// Reads dialogues.jsonl and concepts.txt (required) plus amr.jsonl and
/// embeddings.jsonl (optional) from `dir` and validates cross references.
/// Without an embeddings file the table is empty with dimension
/// `fallback_dim`.
///
/// Errors: MissingFile, MalformedRecord, UnknownConcept, DuplicateRound,
/// BadCorrectness, plus anything raised by the penman and embedding loaders.
Dataset load_dataset(const std::filesystem::path& dir, std::size_t fallback_dim = kDefaultEmbeddingDim,
                     LoadReport* report = nullptr);

/// Counts fallback usage of an in-memory dataset.
LoadReport inspect_dataset(const Dataset& dataset);

/// Writes the four input files into `dir` (created if needed).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

using SplitRatios = std::array<double, 3>;
inline constexpr SplitRatios kDefaultSplit = {0.8, 0.1, 0.1};

/// Shuffles round indices [0, n) with `seed` and cuts them by `ratios`
/// using largest-remainder rounding. Throws TooFewRounds if a part would be
/// empty, BadConfig for invalid ratios.
Split split(std::size_t n_rounds, std::uint64_t seed, SplitRatios ratios = kDefaultSplit);
Split split(const Dataset& dataset, std::uint64_t seed, SplitRatios ratios = kDefaultSplit);

/// Multi-hot mask with a 1 at each concept's vocabulary index. Throws
/// UnknownConcept; an empty concept list is a MalformedRecord.
QMask qmask(std::span<const std::string> concepts, std::span<const std::string> vocabulary);

}  // namespace diacdm
