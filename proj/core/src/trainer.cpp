#include "diacdm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

#include "diacdm/error.hpp"
#include "diacdm/metrics.hpp"
#include "diacdm/optim.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::BadConfig, what); };
    if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be finite and >= 0");
    if (batch_size == 0) fail("batch_size must be >= 1");
    if (max_epochs == 0) fail("max_epochs must be >= 1");
    if (patience == 0) fail("patience must be >= 1");
    if (gcn_layers == 0) fail("gcn_layers must be >= 1");
    if (hidden == 0) fail("hidden must be >= 1");
    for (double l : lambda_init)
        if (!std::isfinite(l)) fail("lambda_init must be finite");
}

ModelConfig TrainConfig::model_config(std::size_t dataset_dim) const {
    if (dim_g != 0 && dim_g != dataset_dim) {
        throw Error(Errc::BadConfig, "dim_g = " + std::to_string(dim_g) +
                                         " but the embeddings have dimension " +
                                         std::to_string(dataset_dim));
    }
    ModelConfig mc;
    mc.dim = dataset_dim;
    mc.gcn_layers = gcn_layers;
    mc.hidden = hidden;
    mc.ablation = ablation;
    mc.lambda_init = lambda_init;
    mc.seed = seed;
    return mc;
}

EvalResult evaluate(const DiaCdm& model, const std::vector<RoundInput>& inputs,
                    const std::vector<std::size_t>& indices) {
    NoGradGuard no_grad;
    EvalResult r;
    r.n = indices.size();
    if (indices.empty()) {
        r.auc = std::numeric_limits<double>::quiet_NaN();
        r.acc = std::numeric_limits<double>::quiet_NaN();
        r.loss = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(indices.size());
    labels.reserve(indices.size());
    double loss = 0.0;
    for (std::size_t i : indices) {
        const double p = model.probability(inputs[i]);
        scores.push_back(p);
        labels.push_back(inputs[i].label);
        loss += bce_loss(p, inputs[i].label);
    }
    r.loss = loss / static_cast<double>(indices.size());
    r.acc = acc(scores, labels);
    const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                      std::count(labels.begin(), labels.end(), 0) > 0;
    r.auc = both ? auc(scores, labels) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

namespace {

// Higher is better. Falls back to negative loss when AUC is undefined.
double selection_score(const EvalResult& valid, double train_loss) {
    if (valid.n == 0) return -train_loss;
    if (std::isnan(valid.auc)) return -valid.loss;
    return valid.auc;
}

}  // namespace

TrainResult train(const Dataset& dataset, const std::vector<RoundInput>& inputs, const Split& split,
                  const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    if (split.train.empty()) throw Error(Errc::EmptySplit, "training split is empty");

    DiaCdm model(config.model_config(dataset.embeddings.dim()), dataset.students, dataset.vocabulary);
    auto params = model.params().tensors();

    AdamState adam;
    adam.config.lr = config.lr;
    adam.post_step = [&model] { clamp_nonneg(model.params().predictor); };

    Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
    std::vector<std::size_t> order = split.train;

    TrainHistory history;
    history.best_score = -std::numeric_limits<double>::infinity();
    ModelParams best = model.params().clone();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<const RoundInput*> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(&inputs[order[i]]);

            for (Tensor& p : params) p.zero_grad();
            Tensor loss;
            try {
                loss = model.loss(batch);
            } catch (const Error& e) {
                if (e.code() != Errc::NonFinite) throw;
                throw Error(Errc::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                     std::to_string(batch_index) + ": " + e.what());
            }
            loss.backward();
            adam_step(params, adam);
            loss_sum += loss.item() * static_cast<double>(batch.size());
            if (observer) observer(epoch, batch_index, model.params());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        EvalResult valid;
        try {
            valid = evaluate(model, inputs, split.valid);
        } catch (const Error& e) {
            if (e.code() != Errc::NonFinite) throw;
            throw Error(Errc::NonFiniteLoss,
                        "epoch " + std::to_string(epoch) + ", validation: " + e.what());
        }
        rec.valid_auc = valid.auc;
        rec.valid_acc = valid.acc;
        history.epochs.push_back(rec);

        const double score = selection_score(valid, rec.train_loss);
        if (score > history.best_score) {
            history.best_score = score;
            history.best_epoch = epoch;
            best.assign_from(model.params());
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    model.params().assign_from(best);
    return {std::move(model), std::move(history), split};
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const StepObserver& observer) {
    const auto inputs = prepare_inputs(dataset, kDefaultFallbackSeed);
    return train(dataset, inputs, split(dataset, config.seed), config, observer);
}

DiagnosisReport diagnose(const DiaCdm& model, const Dataset& dataset,
                         const std::vector<RoundInput>& inputs, const std::string& student_id) {
    const std::size_t student = dataset.student_index(student_id);
    std::vector<const RoundInput*> rounds;
    for (const auto& in : inputs)
        if (in.student == student) rounds.push_back(&in);
    if (rounds.empty()) throw Error(Errc::UnknownStudent, "student '" + student_id + "' has no rounds");
    std::stable_sort(rounds.begin(), rounds.end(),
                     [](const RoundInput* a, const RoundInput* b) { return a->turn < b->turn; });

    NoGradGuard no_grad;
    DiagnosisReport rep;
    rep.student_id = student_id;
    rep.vocabulary = model.vocabulary();
    rep.fusion_weights = fusion_weights(model.params().cognition.lambda_logits, model.config().ablation);
    rep.mastery.assign(model.n_concepts(), 0.0);

    auto to_vec = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
    auto masked_mean = [](const std::vector<double>& v, const std::vector<std::size_t>& idx) {
        double s = 0.0;
        for (std::size_t k : idx) s += v[k];
        return s / static_cast<double>(idx.size());
    };

    for (const RoundInput* in : rounds) {
        const RoundTrace t = model.forward(*in);
        RoundDiagnosis d;
        d.turn = in->turn;
        d.round_index = in->round_index;
        d.question_match = to_vec(t.states.question_match);
        d.teacher_eval = to_vec(t.states.teacher_eval);
        d.student_response = to_vec(t.states.student_response);
        d.mastery = to_vec(t.states.mastery);
        d.probability = t.probability.item();
        d.correct = in->label;
        d.concepts = in->concept_indices;
        d.stu_state = masked_mean(d.mastery, d.concepts);
        d.que_match = masked_mean(d.question_match, d.concepts);
        d.sta_in_res = masked_mean(d.student_response, d.concepts);
        d.sta_in_tea = masked_mean(d.teacher_eval, d.concepts);
        for (std::size_t k = 0; k < rep.mastery.size(); ++k) rep.mastery[k] += d.mastery[k];
        rep.rounds.push_back(std::move(d));
    }
    for (double& m : rep.mastery) m /= static_cast<double>(rep.rounds.size());
    return rep;
}

DiagnosisReport diagnose(const DiaCdm& model, const Dataset& dataset, const std::string& student_id) {
    return diagnose(model, dataset, prepare_inputs(dataset, model.config().fallback_seed), student_id);
}

SeedSummary run_seeds(const Dataset& dataset, const TrainConfig& config,
                      const std::vector<std::uint64_t>& seeds, bool parallel) {
    if (seeds.empty()) throw Error(Errc::BadConfig, "run_seeds needs at least one seed");
    const auto inputs = prepare_inputs(dataset, kDefaultFallbackSeed);

    auto one = [&](std::uint64_t seed) {
        TrainConfig c = config;
        c.seed = seed;
        const Split s = split(dataset, seed);
        TrainResult r = train(dataset, inputs, s, c);
        return SeedRun{seed, evaluate(r.model, inputs, s.test)};
    };

    SeedSummary summary;
    if (parallel) {
        std::vector<std::future<SeedRun>> jobs;
        for (auto seed : seeds) jobs.push_back(std::async(std::launch::async, one, seed));
        for (auto& j : jobs) summary.runs.push_back(j.get());
    } else {
        for (auto seed : seeds) summary.runs.push_back(one(seed));
    }
    std::vector<double> aucs, accs;
    for (const auto& r : summary.runs) {
        aucs.push_back(r.test.auc);
        accs.push_back(r.test.acc);
    }
    summary.mean_auc = mean(aucs);
    summary.std_auc = stddev(aucs);
    summary.mean_acc = mean(accs);
    summary.std_acc = stddev(accs);
    return summary;
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_history_csv(const TrainHistory& history, std::ostream& out) {
    out << "epoch,train_loss,valid_auc,valid_acc\n";
    for (const auto& e : history.epochs) {
        out << e.epoch << ',' << fmt_double(e.train_loss) << ',' << fmt_double(e.valid_auc) << ','
            << fmt_double(e.valid_acc) << '\n';
    }
}

void write_trace_csv(const DiagnosisReport& report, std::ostream& out) {
    out << "turn,stuState,queMatch,staInRes,staInTea\n";
    for (const auto& r : report.rounds) {
        out << r.turn << ',' << fmt_double(r.stu_state) << ',' << fmt_double(r.que_match) << ','
            << fmt_double(r.sta_in_res) << ',' << fmt_double(r.sta_in_tea) << '\n';
    }
}

std::string diagnosis_json(const DiagnosisReport& report) {
    using nlohmann::json;
    json j;
    j["student_id"] = report.student_id;
    j["vocabulary"] = report.vocabulary;
    j["mastery"] = report.mastery;
    j["fusion_weights"] = {{"question_match", report.fusion_weights[0]},
                           {"teacher_eval", report.fusion_weights[1]},
                           {"student_response", report.fusion_weights[2]}};
    json rounds = json::array();
    for (const auto& r : report.rounds) {
        std::vector<std::string> concepts;
        for (std::size_t k : r.concepts) concepts.push_back(report.vocabulary[k]);
        rounds.push_back({{"turn", r.turn},
                          {"C_q", r.question_match},
                          {"C_t", r.teacher_eval},
                          {"C_s", r.student_response},
                          {"h_c", r.mastery},
                          {"y_hat", r.probability},
                          {"correct", r.correct},
                          {"concepts", concepts},
                          {"stuState", r.stu_state},
                          {"queMatch", r.que_match},
                          {"staInRes", r.sta_in_res},
                          {"staInTea", r.sta_in_tea}});
    }
    j["rounds"] = std::move(rounds);
    return j.dump(2);
}

}  // namespace diacdm
