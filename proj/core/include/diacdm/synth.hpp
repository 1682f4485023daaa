#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diacdm/config_file.hpp"
#include "diacdm/data.hpp"
#include "diacdm/model.hpp"

namespace diacdm {

struct SynthSpec {
    std::size_t n_students = 200;
    std::size_t n_concepts = 20;
    std::size_t rounds_per_student = 30;
    std::size_t dim_g = kDefaultEmbeddingDim;
    std::uint64_t seed = 7;
    double alpha = 3.0;  // slope of the correctness logistic
    double noise = 0.1;  // eta
    double beta = 0.7;   // weight of the correctness direction in answer/evaluation vectors

    /// Throws BadConfig.
    void validate() const;
};

/// Keys: n_students, n_concepts, rounds_per_student, dim_g, seed, alpha,
/// noise, beta. Unknown keys throw BadConfig.
SynthSpec synth_spec_from(const KeyValues& kv);

struct GroundTruth {
    std::vector<std::string> students;
    std::vector<std::string> concepts;
    /// students x concepts, entries in [0, 1].
    std::vector<std::vector<double>> mastery;
    std::map<std::string, double> difficulty;  // by question id
};

struct SynthData {
    Dataset dataset;
    GroundTruth truth;
};

/// Planted-mastery generator. Each round draws 1-3 concepts and a
/// difficulty d ~ U(0,1); P(correct) = sigmoid(alpha * (mean mastery - d)).
/// Questions are star graphs over the concept tokens plus a difficulty
/// token. Answer and evaluation vectors mix a correctness direction
/// (weight beta), the mean concept vector (1 - beta) and Gaussian noise
/// (eta).
SynthData synthesize(const SynthSpec& spec);

/// synthesize() and write the dataset files plus ground_truth.json.
GroundTruth generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Index of the correctness-direction embeddings; exposed for tests.
inline constexpr const char* kAnswerPositive = "__answer+";
inline constexpr const char* kAnswerNegative = "__answer-";
inline constexpr const char* kEvalPositive = "__evaluation+";
inline constexpr const char* kEvalNegative = "__evaluation-";
std::vector<double> synth_direction(const SynthSpec& spec, const char* name);

struct RecoveryResult {
    std::vector<std::size_t> concepts;  // evaluated concept indices
    std::vector<double> spearman;       // one per evaluated concept
    double mean_spearman = 0.0;
};

/// Per concept, Spearman correlation across students between diagnosed and
/// planted mastery. `diagnosed` is students x concepts in dataset order; NaN
/// marks a student who never saw the concept. Concepts nobody saw are
/// skipped; fewer than `min_students` for an evaluated concept throws
/// TooFewStudents.
RecoveryResult recovery_from_estimates(const std::vector<std::vector<double>>& diagnosed,
                                       const Dataset& dataset, const GroundTruth& truth,
                                       std::size_t min_students = 5);

/// Diagnosed mastery of (student, concept) is the mean of h_c[concept] over
/// that student's rounds that involve the concept.
std::vector<std::vector<double>> diagnosed_mastery(const DiaCdm& model, const Dataset& dataset,
                                                   const std::vector<RoundInput>& inputs);

RecoveryResult evaluate_recovery(const DiaCdm& model, const Dataset& dataset, const GroundTruth& truth);

}  // namespace diacdm
