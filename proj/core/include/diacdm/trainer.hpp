#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diacdm/ablation.hpp"
#include "diacdm/data.hpp"
#include "diacdm/model.hpp"

namespace diacdm {

struct TrainConfig {
    double lr = 0.002;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    /// 0 means "use the dataset's embedding dimension".
    std::size_t dim_g = 0;
    std::size_t gcn_layers = 2;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    AblationMode ablation = AblationMode::Full;
    std::array<double, 3> lambda_init{0.0, 0.0, 0.0};

    /// Throws BadConfig when a field is out of range.
    void validate() const;
    ModelConfig model_config(std::size_t dataset_dim) const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    /// NaN when the validation split holds a single class.
    double valid_auc = 0.0;
    double valid_acc = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_score = 0.0;
};

/// Called after every optimizer step (post-clamp) with the live parameters.
using StepObserver = std::function<void(std::size_t epoch, std::size_t batch, const ModelParams&)>;

struct TrainResult {
    DiaCdm model;
    TrainHistory history;
    Split split;
};

/// Adam on mean batch cross-entropy with the predictor's non-negativity
/// projection after each step. Validation AUC (or validation loss when the
/// split is single-class) picks the returned checkpoint; training stops
/// after `patience` epochs without improvement.
///
/// Errors: EmptySplit, NonFiniteLoss (with epoch and batch index).
TrainResult train(const Dataset& dataset, const std::vector<RoundInput>& inputs, const Split& split,
                  const TrainConfig& config, const StepObserver& observer = {});
TrainResult train(const Dataset& dataset, const TrainConfig& config, const StepObserver& observer = {});

struct EvalResult {
    double auc = 0.0;  // NaN when single-class
    double acc = 0.0;
    double loss = 0.0;
    std::size_t n = 0;
};

EvalResult evaluate(const DiaCdm& model, const std::vector<RoundInput>& inputs,
                    const std::vector<std::size_t>& indices);

struct RoundDiagnosis {
    int turn = 0;
    std::size_t round_index = 0;
    std::vector<double> question_match;    // C_q
    std::vector<double> teacher_eval;      // C_t
    std::vector<double> student_response;  // C_s
    std::vector<double> mastery;           // h_c
    double probability = 0.0;
    int correct = 0;
    std::vector<std::size_t> concepts;
    // Means over this round's masked concepts.
    double stu_state = 0.0;   // of h_c
    double que_match = 0.0;   // of C_q
    double sta_in_res = 0.0;  // of C_s
    double sta_in_tea = 0.0;  // of C_t
};

struct DiagnosisReport {
    std::string student_id;
    std::vector<std::string> vocabulary;
    /// h_c averaged over the student's rounds.
    std::vector<double> mastery;
    std::array<double, 3> fusion_weights{};
    std::vector<RoundDiagnosis> rounds;  // in turn order
};

/// Replays the student's rounds in turn order through the frozen model.
/// Throws UnknownStudent.
DiagnosisReport diagnose(const DiaCdm& model, const Dataset& dataset,
                         const std::vector<RoundInput>& inputs, const std::string& student_id);
DiagnosisReport diagnose(const DiaCdm& model, const Dataset& dataset, const std::string& student_id);

struct SeedRun {
    std::uint64_t seed = 0;
    EvalResult test;
};

struct SeedSummary {
    std::vector<SeedRun> runs;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
};

/// Independent train + test evaluation per seed (split and init both follow
/// the seed). Seeds run in parallel threads when `parallel` is set.
SeedSummary run_seeds(const Dataset& dataset, const TrainConfig& config,
                      const std::vector<std::uint64_t>& seeds, bool parallel = false);

void write_history_csv(const TrainHistory& history, std::ostream& out);
void write_trace_csv(const DiagnosisReport& report, std::ostream& out);
std::string diagnosis_json(const DiagnosisReport& report);

}  // namespace diacdm
