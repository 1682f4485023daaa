#include "diacdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "diacdm/error.hpp"
#include "diacdm/metrics.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

using nlohmann::json;

void SynthSpec::validate() const {
    if (n_students == 0 || n_concepts == 0 || rounds_per_student == 0 || dim_g == 0) {
        throw Error(Errc::BadConfig, "synth counts and dim_g must be >= 1");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error(Errc::BadConfig, "noise must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error(Errc::BadConfig, "beta must lie in [0, 1]");
    if (!std::isfinite(alpha)) throw Error(Errc::BadConfig, "alpha must be finite");
}

SynthSpec synth_spec_from(const KeyValues& kv) {
    SynthSpec s;
    for (const auto& [key, value] : kv) {
        if (key == "n_students") s.n_students = parse_uint(key, value);
        else if (key == "n_concepts") s.n_concepts = parse_uint(key, value);
        else if (key == "rounds_per_student") s.rounds_per_student = parse_uint(key, value);
        else if (key == "dim_g") s.dim_g = parse_uint(key, value);
        else if (key == "seed") s.seed = parse_uint(key, value);
        else if (key == "alpha") s.alpha = parse_double(key, value);
        else if (key == "noise") s.noise = parse_double(key, value);
        else if (key == "beta") s.beta = parse_double(key, value);
        else throw Error(Errc::BadConfig, "unknown synth key '" + key + "'");
    }
    s.validate();
    return s;
}

namespace {

std::string numbered(const char* prefix, std::size_t i, std::size_t count) {
    const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t embedding_seed(const SynthSpec& spec) { return derive_seed(spec.seed, "synth.embed"); }

std::vector<double> normalized(std::vector<double> v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
    }
    return v;
}

}  // namespace

std::vector<double> synth_direction(const SynthSpec& spec, const char* name) {
    return hash_embedding(name, spec.dim_g, embedding_seed(spec));
}

SynthData synthesize(const SynthSpec& spec) {
    spec.validate();
    const std::size_t dim = spec.dim_g;
    const std::uint64_t emb_seed = embedding_seed(spec);
    Rng rng(derive_seed(spec.seed, "synth.rounds"));
    Rng noise_rng(derive_seed(spec.seed, "synth.noise"));

    SynthData out;
    Dataset& ds = out.dataset;
    GroundTruth& truth = out.truth;
    ds.embeddings = EmbeddingTable(dim);

    for (std::size_t k = 0; k < spec.n_concepts; ++k) {
        ds.vocabulary.push_back(numbered("concept_", k, spec.n_concepts));
    }
    for (std::size_t s = 0; s < spec.n_students; ++s) {
        ds.students.push_back(numbered("s", s, spec.n_students));
    }
    truth.students = ds.students;
    truth.concepts = ds.vocabulary;
    truth.mastery.assign(spec.n_students, std::vector<double>(spec.n_concepts));
    for (auto& row : truth.mastery)
        for (double& m : row) m = rng.uniform();

    std::vector<std::vector<double>> concept_vecs;
    for (const auto& c : ds.vocabulary) {
        concept_vecs.push_back(hash_embedding(c, dim, emb_seed));
        ds.embeddings.insert(c, EmbeddingKind::Concept, concept_vecs.back());
    }
    constexpr int kDifficultyBins = 10;
    const std::string root_label = "ask-01";
    ds.embeddings.insert(root_label, EmbeddingKind::Node, hash_embedding(root_label, dim, emb_seed));
    std::vector<std::vector<double>> difficulty_vecs;
    for (int b = 0; b < kDifficultyBins; ++b) {
        const std::string label = "difficulty-" + std::to_string(b);
        difficulty_vecs.push_back(hash_embedding(label, dim, emb_seed));
        ds.embeddings.insert(label, EmbeddingKind::Node, difficulty_vecs.back());
    }
    const auto ans_pos = synth_direction(spec, kAnswerPositive);
    const auto ans_neg = synth_direction(spec, kAnswerNegative);
    const auto eval_pos = synth_direction(spec, kEvalPositive);
    const auto eval_neg = synth_direction(spec, kEvalNegative);

    auto response_vec = [&](const std::vector<double>& pos, const std::vector<double>& neg, int r,
                            const std::vector<double>& concept_mean) {
        std::vector<double> v(dim);
        const double noise_scale = spec.noise / std::sqrt(static_cast<double>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = spec.beta * (r ? pos[i] : neg[i]) + (1.0 - spec.beta) * concept_mean[i];
            if (spec.noise > 0.0) v[i] += noise_scale * noise_rng.normal();
        }
        return v;
    };

    const std::size_t per_round_max = std::min<std::size_t>(3, spec.n_concepts);
    std::vector<std::size_t> pool(spec.n_concepts);
    for (std::size_t s = 0; s < spec.n_students; ++s) {
        for (std::size_t t = 1; t <= spec.rounds_per_student; ++t) {
            const std::size_t n_pick = 1 + rng.below(per_round_max);
            for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
            for (std::size_t i = 0; i < n_pick; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
            std::vector<std::size_t> picked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_pick));
            std::sort(picked.begin(), picked.end());

            const double d = rng.uniform();
            double mean_mastery = 0.0;
            for (std::size_t k : picked) mean_mastery += truth.mastery[s][k];
            mean_mastery /= static_cast<double>(n_pick);
            const int correct = rng.bernoulli(logistic(spec.alpha * (mean_mastery - d))) ? 1 : 0;

            const std::string suffix = ds.students[s] + "_" + std::to_string(t);
            DialogueRound r;
            r.student_id = ds.students[s];
            r.turn = static_cast<int>(t);
            r.question_id = "q_" + suffix;
            r.answer_id = "a_" + suffix;
            r.evaluation_id = "e_" + suffix;
            for (std::size_t k : picked) r.concepts.push_back(ds.vocabulary[k]);
            r.correct = correct;
            truth.difficulty[r.question_id] = d;

            const int bin = std::min(kDifficultyBins - 1, static_cast<int>(d * kDifficultyBins));
            std::string penman = "(q / " + root_label;
            std::vector<double> concept_mean(dim, 0.0);
            for (std::size_t i = 0; i < picked.size(); ++i) {
                penman += " :topic (c" + std::to_string(i + 1) + " / " + ds.vocabulary[picked[i]] + ")";
                for (std::size_t j = 0; j < dim; ++j)
                    concept_mean[j] += concept_vecs[picked[i]][j] / static_cast<double>(n_pick);
            }
            penman += " :mod (d / difficulty-" + std::to_string(bin) + "))";
            ds.amr.emplace(r.question_id, parse_penman(penman));

            std::vector<double> question(dim);
            for (std::size_t j = 0; j < dim; ++j) question[j] = concept_mean[j] + difficulty_vecs[bin][j];
            ds.embeddings.insert(r.question_id, EmbeddingKind::Text, normalized(std::move(question)));
            ds.embeddings.insert(r.answer_id, EmbeddingKind::Text,
                                 response_vec(ans_pos, ans_neg, correct, concept_mean));
            ds.embeddings.insert(r.evaluation_id, EmbeddingKind::Text,
                                 response_vec(eval_pos, eval_neg, correct, concept_mean));
            ds.rounds.push_back(std::move(r));
        }
    }
    ds.reindex();
    return out;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    json j;
    j["students"] = truth.students;
    j["concepts"] = truth.concepts;
    j["mastery"] = truth.mastery;
    j["difficulties"] = truth.difficulty;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << j.dump() << '\n';
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    try {
        json j = json::parse(in);
        GroundTruth t;
        t.students = j.at("students").get<std::vector<std::string>>();
        t.concepts = j.at("concepts").get<std::vector<std::string>>();
        t.mastery = j.at("mastery").get<std::vector<std::vector<double>>>();
        t.difficulty = j.at("difficulties").get<std::map<std::string, double>>();
        return t;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
    }
}

GroundTruth generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    SynthData data = synthesize(spec);
    try {
        save_dataset(data.dataset, out_dir);
        save_ground_truth(data.truth, out_dir / "ground_truth.json");
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(Errc::IoError, e.what());
    }
    return std::move(data.truth);
}

std::vector<std::vector<double>> diagnosed_mastery(const DiaCdm& model, const Dataset& dataset,
                                                   const std::vector<RoundInput>& inputs) {
    NoGradGuard no_grad;
    const std::size_t n_students = dataset.students.size();
    const std::size_t k = model.n_concepts();
    std::vector<std::vector<double>> sum(n_students, std::vector<double>(k, 0.0));
    std::vector<std::vector<std::size_t>> count(n_students, std::vector<std::size_t>(k, 0));
    for (const RoundInput& in : inputs) {
        const RoundTrace t = model.forward(in);
        const auto h_c = t.states.mastery.values();
        for (std::size_t c : in.concept_indices) {
            sum[in.student][c] += h_c[c];
            ++count[in.student][c];
        }
    }
    for (std::size_t s = 0; s < n_students; ++s)
        for (std::size_t c = 0; c < k; ++c)
            sum[s][c] = count[s][c] ? sum[s][c] / static_cast<double>(count[s][c])
                                    : std::numeric_limits<double>::quiet_NaN();
    return sum;
}

RecoveryResult recovery_from_estimates(const std::vector<std::vector<double>>& diagnosed,
                                       const Dataset& dataset, const GroundTruth& truth,
                                       std::size_t min_students) {
    std::map<std::string, std::size_t> truth_student, truth_concept;
    for (std::size_t i = 0; i < truth.students.size(); ++i) truth_student[truth.students[i]] = i;
    for (std::size_t i = 0; i < truth.concepts.size(); ++i) truth_concept[truth.concepts[i]] = i;

    RecoveryResult res;
    for (std::size_t c = 0; c < dataset.vocabulary.size(); ++c) {
        auto tc = truth_concept.find(dataset.vocabulary[c]);
        if (tc == truth_concept.end()) continue;
        std::vector<double> est, planted;
        for (std::size_t s = 0; s < dataset.students.size(); ++s) {
            const double v = diagnosed.at(s).at(c);
            if (std::isnan(v)) continue;
            auto ts = truth_student.find(dataset.students[s]);
            if (ts == truth_student.end()) continue;
            est.push_back(v);
            planted.push_back(truth.mastery[ts->second][tc->second]);
        }
        if (est.empty()) continue;
        if (est.size() < min_students) {
            throw Error(Errc::TooFewStudents, "concept '" + dataset.vocabulary[c] + "' was seen by " +
                                                  std::to_string(est.size()) + " students");
        }
        res.concepts.push_back(c);
        res.spearman.push_back(spearman(est, planted));
    }
    res.mean_spearman = mean(res.spearman);
    return res;
}

RecoveryResult evaluate_recovery(const DiaCdm& model, const Dataset& dataset, const GroundTruth& truth) {
    const auto inputs = prepare_inputs(dataset, model.config().fallback_seed);
    return recovery_from_estimates(diagnosed_mastery(model, dataset, inputs), dataset, truth);
}

}  // namespace diacdm
