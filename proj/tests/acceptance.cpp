// Acceptance suite: one line per criterion, exit status 1 if any fails.
//   diacdm_acceptance [--only NAME] [--list]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "diacdm/checkpoint.hpp"
#include "diacdm/metrics.hpp"
#include "diacdm/synth.hpp"
#include "diacdm/trainer.hpp"
#include "support.hpp"

using namespace diacdm;
namespace dt = diacdm::testing;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr int kMonotoneTrials = 1000;
constexpr double kMonotoneTol = 1e-12;
constexpr double kMonotoneSeconds = 5.0;
constexpr int kMetricSets = 200;
constexpr double kMetricSeconds = 1.0;
constexpr double kParserSeconds = 1.0;
constexpr double kAdjacencyTol = 1e-15;
constexpr std::size_t kSimplexEpochs = 20;
constexpr double kSimplexTol = 1e-12;
constexpr double kAblationSeconds = 10.0;
constexpr double kRecoveryMinAuc = 0.70;
constexpr double kRecoveryMinSpearman = 0.5;
constexpr double kUntrainedMaxAuc = 0.55;
constexpr double kRecoverySeconds = 180.0;
constexpr double kTraceMinShare = 0.70;
constexpr std::size_t kTraceWindow = 10;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// The default synthetic benchmark: 200 students, 20 concepts, 30 rounds each.
SynthData benchmark_data() {
    SynthSpec spec;
    spec.n_students = 200;
    spec.n_concepts = 20;
    spec.rounds_per_student = 30;
    spec.seed = 7;
    return synthesize(spec);
}

TrainConfig benchmark_config() {
    TrainConfig c;  // lr 0.002, batch 64, 8:1:1
    c.seed = 7;
    return c;
}

Outcome gradient() {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.n_students = 3;
    spec.n_concepts = 4;
    spec.rounds_per_student = 3;
    spec.dim_g = 8;
    spec.seed = 21;
    const SynthData d = synthesize(spec);
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.gcn_layers = 2;
    cfg.hidden = 8;
    cfg.seed = 21;
    DiaCdm model(cfg, d.dataset.students, d.dataset.vocabulary);
    // Live hidden units; Xavier init with zero bias leaves some at the ReLU kink region.
    Rng rng(22);
    for (double& v : model.params().predictor.hidden_b.mutable_values()) v = rng.uniform(0.05, 0.3);
    for (double& v : model.params().cognition.lambda_logits.mutable_values()) v = rng.uniform(-1, 1);
    const auto inputs = prepare_inputs(d.dataset, cfg.fallback_seed);
    std::vector<const RoundInput*> batch;
    for (const auto& in : inputs) batch.push_back(&in);

    double worst = 0.0;
    std::string worst_name;
    std::size_t checked = 0;
    const auto named = model.params().named();
    for (const auto& nt : named) {
        const auto r = dt::check_gradients({nt.tensor}, [&] { return model.loss(batch); }, kGradStep);
        checked += r.checked;
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            worst_name = nt.name;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < kGradRelTol && secs < kGradSeconds,
            fmt("max rel error %.3g (%s) over %zu entries of %zu tensors, %.2fs", worst, worst_name.c_str(), checked,
                named.size(), secs)};
}

Outcome monotonicity() {
    const auto t0 = Clock::now();
    Rng rng(1000);
    std::size_t probes = 0, violations = 0;
    double worst_drop = 0.0;
    for (int trial = 0; trial < kMonotoneTrials; ++trial) {
        const std::size_t k = 1 + rng.below(8);
        const std::size_t h = 1 + rng.below(16);
        PredictParams p = PredictParams::init(k, h, rng.next());
        // Arbitrary weights, then the same projection training applies.
        for (Tensor* t : {&p.hidden_w, &p.out_w})
            for (double& v : t->mutable_values()) v = rng.uniform(-1, 1);
        for (double& v : p.hidden_b.mutable_values()) v = rng.uniform(-1, 1);
        p.out_b.mutable_values()[0] = rng.uniform(-1, 1);
        clamp_nonneg(p);
        auto row = [&](double lo, double hi) { return dt::random_tensor(rng, 1, k, false, lo, hi); };
        const Tensor h_c = row(-3, 3), h_f = row(-3, 3), h_d = row(-3, 3);
        std::vector<double> bits(k, 0.0);
        for (double& b : bits) b = rng.bernoulli(0.5) ? 1.0 : 0.0;
        bits[rng.below(k)] = 1.0;
        const Tensor mask = Tensor::row(bits);
        const double base = predict(h_c, h_f, h_d, mask, p).item();
        for (std::size_t c = 0; c < k; ++c) {
            if (bits[c] == 0.0) continue;
            Tensor moved = h_c.detach();
            const double sign = h_d.values()[c] >= 0.0 ? 1.0 : -1.0;
            moved.mutable_values()[c] += sign * rng.uniform(1e-3, 2.0);
            const double y = predict(moved, h_f, h_d, mask, p).item();
            ++probes;
            if (y < base - kMonotoneTol) {
                ++violations;
                worst_drop = std::max(worst_drop, base - y);
            }
        }
    }
    const double secs = seconds_since(t0);
    return {violations == 0 && secs < kMonotoneSeconds,
            fmt("%zu violations in %zu probes over %d configurations (worst drop %.3g), %.2fs", violations, probes,
                kMonotoneTrials, worst_drop, secs)};
}

Outcome metrics() {
    const auto t0 = Clock::now();
    Rng rng(200);
    int auc_mismatch = 0, acc_mismatch = 0, with_ties = 0;
    for (int set = 0; set < kMetricSets; ++set) {
        const std::size_t n = 2 + rng.below(120);
        std::vector<double> s(n);
        std::vector<int> y(n);
        const bool coarse = set % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
            y[i] = rng.bernoulli(0.4) ? 1 : 0;
        }
        // both classes present
        const std::size_t pos = rng.below(n);
        y[pos] = 1;
        y[(pos + 1 + rng.below(n - 1)) % n] = 0;

        double num = 0.0, pairs = 0.0;
        bool tie = false;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] == 1 && y[j] == 0) {
                    pairs += 1.0;
                    if (s[i] > s[j]) num += 1.0;
                    else if (s[i] == s[j]) {
                        num += 0.5;
                        tie = true;
                    }
                }
        with_ties += tie;
        if (auc(s, y) != num / pairs) ++auc_mismatch;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += (s[i] >= 0.5 ? 1 : 0) == y[i];
        if (acc(s, y) != static_cast<double>(hits) / static_cast<double>(n)) ++acc_mismatch;
    }
    const double secs = seconds_since(t0);
    return {auc_mismatch == 0 && acc_mismatch == 0 && with_ties > 0 && secs < kMetricSeconds,
            fmt("AUC mismatches %d, ACC mismatches %d over %d sets (%d with ties), %.3fs", auc_mismatch, acc_mismatch,
                kMetricSets, with_ties, secs)};
}

Outcome parser() {
    const auto t0 = Clock::now();
    std::ifstream in(dt::data_dir() / "penman_corpus.jsonl");
    std::string line;
    std::size_t total = 0, malformed = 0, wrong = 0;
    std::string first_wrong;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto e = nlohmann::json::parse(line);
        ++total;
        const std::string expect = e["expect"];
        bool ok = false;
        if (expect != "ok") {
            ++malformed;
            const auto code = dt::thrown_code([&] { parse_penman(e["penman"].get<std::string>()); });
            ok = code && errc_name(*code) == expect;
        } else {
            try {
                const AmrGraph g = parse_penman(e["penman"].get<std::string>());
                std::vector<std::string> labels;
                for (const auto& n : g.nodes) labels.push_back(n.label);
                std::sort(labels.begin(), labels.end());
                std::vector<std::vector<std::string>> edges;
                for (const auto& ed : g.edges)
                    edges.push_back({g.nodes[ed.source].label, ed.relation, g.nodes[ed.target].label});
                std::sort(edges.begin(), edges.end());
                ok = g.nodes[0].label == e["root"] && labels == e["labels"].get<std::vector<std::string>>() &&
                     edges == e["edge_list"].get<std::vector<std::vector<std::string>>>();
            } catch (const Error&) {
                ok = false;
            }
        }
        if (!ok) {
            ++wrong;
            if (first_wrong.empty()) first_wrong = e["name"];
        }
    }

    // Hand-computed adjacency oracles.
    auto max_dev = [](const NormalizedAdjacency& a, const std::vector<std::vector<double>>& want) {
        double d = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i)
            for (std::size_t j = 0; j < want.size(); ++j) d = std::max(d, std::abs(a.at(i, j) - want[i][j]));
        return a.size() == want.size() ? d : INFINITY;
    };
    const double r6 = 1.0 / std::sqrt(6.0), r8 = 1.0 / std::sqrt(8.0);
    double adj_dev = 0.0;
    adj_dev = std::max(adj_dev, max_dev(NormalizedAdjacency(parse_penman("(b / boy)")), {{1.0}}));
    adj_dev = std::max(adj_dev, max_dev(NormalizedAdjacency(parse_penman("(a / x :r (b / y :r (c / z)))")),
                                        {{0.5, r6, 0}, {r6, 1.0 / 3.0, r6}, {0, r6, 0.5}}));
    adj_dev = std::max(adj_dev,
                       max_dev(NormalizedAdjacency(parse_penman("(c / hub :r (x / a) :r (y / b) :r (z / d))")),
                               {{0.25, r8, r8, r8}, {r8, 0.5, 0, 0}, {r8, 0, 0.5, 0}, {r8, 0, 0, 0.5}}));
    const double secs = seconds_since(t0);
    return {total >= 30 && malformed == 10 && wrong == 0 && adj_dev <= kAdjacencyTol && secs < kParserSeconds,
            fmt("%zu/%zu corpus entries as annotated (%zu malformed)%s%s, adjacency max deviation %.2g, %.3fs",
                total - wrong, total, malformed, first_wrong.empty() ? "" : ", first wrong: ", first_wrong.c_str(),
                adj_dev, secs)};
}

Outcome simplex() {
    const SynthData d = benchmark_data();
    TrainConfig c = benchmark_config();
    c.max_epochs = kSimplexEpochs;
    c.patience = kSimplexEpochs;  // run every epoch
    std::size_t steps = 0, bad_sum = 0, bad_sign = 0, negative_w = 0;
    double worst = 0.0;
    const TrainResult r = train(d.dataset, c, [&](std::size_t, std::size_t, const ModelParams& p) {
        ++steps;
        const auto w = fusion_weights(p.cognition.lambda_logits, c.ablation);
        const double dev = std::abs(w[0] + w[1] + w[2] - 1.0);
        worst = std::max(worst, dev);
        bad_sum += dev > kSimplexTol;
        bad_sign += !(w[0] > 0.0 && w[1] > 0.0 && w[2] > 0.0);
        for (double v : p.predictor.hidden_w.values()) negative_w += v < 0.0;
        for (double v : p.predictor.out_w.values()) negative_w += v < 0.0;
    });
    const bool all_epochs = r.history.epochs.size() == kSimplexEpochs;
    return {steps > 0 && all_epochs && bad_sum == 0 && bad_sign == 0 && negative_w == 0,
            fmt("%zu steps over %zu epochs: max |sum-1| %.2g, non-positive weights %zu, negative W entries %zu", steps,
                r.history.epochs.size(), worst, bad_sign, negative_w)};
}

Outcome ablation() {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.n_students = 10;
    spec.n_concepts = 6;
    spec.rounds_per_student = 6;
    spec.dim_g = 8;
    spec.seed = 31;
    const SynthData d = synthesize(spec);
    const auto inputs = prepare_inputs(d.dataset, kDefaultFallbackSeed);
    Rng rng(32);
    std::vector<const RoundInput*> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(&inputs[rng.below(inputs.size())]);

    struct Mode {
        AblationMode mode;
        std::vector<std::string> excluded;
    };
    const std::vector<Mode> modes = {
        {AblationMode::NoAmr,
         {"encoder.gcn.global.0", "encoder.gcn.global.1", "encoder.gcn.difficulty.0", "encoder.gcn.difficulty.1",
          "encoder.gcn.discrimination.0", "encoder.gcn.discrimination.1"}},
        {AblationMode::NoKc, {"encoder.attn.query", "encoder.attn.key", "encoder.attn.value"}},
        {AblationMode::NoQm, {"cognition.question.w", "cognition.question.b"}},
        {AblationMode::NoTs, {"cognition.response.w", "cognition.response.b"}},
        {AblationMode::NoSe, {"cognition.teacher.w", "cognition.teacher.b"}},
    };
    std::string detail;
    bool pass = true;
    for (const auto& m : modes) {
        ModelConfig cfg;
        cfg.dim = 8;
        cfg.ablation = m.mode;
        cfg.seed = 33;
        DiaCdm model(cfg, d.dataset.students, d.dataset.vocabulary);
        for (double& v : model.params().predictor.hidden_b.mutable_values()) v = 0.1;
        for (auto& t : model.params().tensors()) t.zero_grad();
        model.loss(batch).backward();
        std::size_t nonzero_excluded = 0, live_included = 0, included = 0;
        for (const auto& nt : model.params().named()) {
            const bool excluded = std::find(m.excluded.begin(), m.excluded.end(), nt.name) != m.excluded.end();
            const auto g = nt.tensor.grad();
            const bool any = std::any_of(g.begin(), g.end(), [](double x) { return x != 0.0; });
            if (excluded) nonzero_excluded += any;
            else {
                ++included;
                live_included += any;
            }
        }
        // The dropped head's fusion logit must not receive gradient either.
        const auto lg = model.params().cognition.lambda_logits.grad();
        std::size_t dropped_logit = 3;
        if (m.mode == AblationMode::NoQm) dropped_logit = 0;
        if (m.mode == AblationMode::NoSe) dropped_logit = 1;
        if (m.mode == AblationMode::NoTs) dropped_logit = 2;
        if (dropped_logit < 3 && !lg.empty() && lg[dropped_logit] != 0.0) ++nonzero_excluded;
        const bool ok = nonzero_excluded == 0 && live_included > included / 2;
        pass &= ok;
        detail += fmt("%s%s=%s", detail.empty() ? "" : ", ", std::string(ablation_name(m.mode)).c_str(),
                      ok ? "zero" : "LEAK");
    }
    const double secs = seconds_since(t0);
    pass &= secs < kAblationSeconds;
    return {pass, detail + fmt(", %.2fs", secs)};
}

Outcome recovery() {
    const auto t0 = Clock::now();
    const SynthData d = benchmark_data();
    const TrainConfig c = benchmark_config();
    const auto inputs = prepare_inputs(d.dataset, kDefaultFallbackSeed);
    const Split s = split(d.dataset, c.seed);

    const DiaCdm untrained(c.model_config(d.dataset.embeddings.dim()), d.dataset.students, d.dataset.vocabulary);
    const double untrained_auc = evaluate(untrained, inputs, s.test).auc;

    const TrainResult r = train(d.dataset, inputs, s, c);
    const double test_auc = evaluate(r.model, inputs, s.test).auc;
    const RecoveryResult rec =
        recovery_from_estimates(diagnosed_mastery(r.model, d.dataset, inputs), d.dataset, d.truth);
    const double secs = seconds_since(t0);

    const bool auc_ok = test_auc >= kRecoveryMinAuc;
    const bool rho_ok = rec.mean_spearman >= kRecoveryMinSpearman;
    const bool null_ok = untrained_auc < kUntrainedMaxAuc;
    const bool time_ok = secs < kRecoverySeconds;
    return {auc_ok && rho_ok && null_ok && time_ok,
            fmt("test AUC %.4f (>= %.2f %s), mean Spearman %.4f (>= %.2f %s), untrained AUC %.4f (< %.2f %s), "
                "%zu epochs, %.1fs (< %.0f %s)",
                test_auc, kRecoveryMinAuc, auc_ok ? "ok" : "FAIL", rec.mean_spearman, kRecoveryMinSpearman,
                rho_ok ? "ok" : "FAIL", untrained_auc, kUntrainedMaxAuc, null_ok ? "ok" : "FAIL",
                r.history.epochs.size(), secs, kRecoverySeconds, time_ok ? "ok" : "FAIL")};
}

Outcome determinism() {
    const SynthData d = benchmark_data();
    const TrainConfig c = benchmark_config();
    std::string history[2], checkpoint[2], eval[2];
    for (int run = 0; run < 2; ++run) {
        const TrainResult r = train(d.dataset, c);
        std::ostringstream h;
        write_history_csv(r.history, h);
        history[run] = h.str();
        checkpoint[run] = checkpoint_json(r.model);
        const auto inputs = prepare_inputs(d.dataset, kDefaultFallbackSeed);
        const EvalResult e = evaluate(r.model, inputs, r.split.test);
        eval[run] = fmt("%.17g %.17g", e.auc, e.acc);
    }
    const bool same = history[0] == history[1] && checkpoint[0] == checkpoint[1] && eval[0] == eval[1];
    return {same, fmt("history %s, checkpoint %s (%zu bytes), eval %s",
                      history[0] == history[1] ? "identical" : "DIFFERENT",
                      checkpoint[0] == checkpoint[1] ? "identical" : "DIFFERENT", checkpoint[0].size(),
                      eval[0] == eval[1] ? "identical" : "DIFFERENT")};
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

Outcome trace_variance() {
    const SynthData d = benchmark_data();
    const TrainConfig c = benchmark_config();
    const auto inputs = prepare_inputs(d.dataset, kDefaultFallbackSeed);
    const TrainResult r = train(d.dataset, inputs, split(d.dataset, c.seed), c);
    std::size_t eligible = 0, calmer = 0;
    for (const auto& student : d.dataset.students) {
        const DiagnosisReport rep = diagnose(r.model, d.dataset, inputs, student);
        if (rep.rounds.size() < 2 * kTraceWindow) continue;
        std::vector<double> first, last;
        for (std::size_t i = 0; i < kTraceWindow; ++i) {
            first.push_back(rep.rounds[i].stu_state);
            last.push_back(rep.rounds[rep.rounds.size() - kTraceWindow + i].stu_state);
        }
        ++eligible;
        calmer += variance(last) < variance(first);
    }
    const double share = eligible ? static_cast<double>(calmer) / static_cast<double>(eligible) : 0.0;
    return {eligible > 0 && share >= kTraceMinShare,
            fmt("%zu of %zu students (%.1f%%) have lower stuState variance over the last %zu turns than the first "
                "(need >= %.0f%%)",
                calmer, eligible, 100.0 * share, kTraceWindow, 100.0 * kTraceMinShare)};
}

struct Criterion {
    const char* name;
    const char* title;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"gradient", "gradient correctness", gradient},
    {"monotonicity", "monotonicity", monotonicity},
    {"metrics", "metric oracle", metrics},
    {"parser", "parser correctness", parser},
    {"simplex", "simplex invariant", simplex},
    {"ablation", "ablation wiring", ablation},
    {"recovery", "end-to-end synthetic recovery", recovery},
    {"determinism", "determinism", determinism},
    {"trace_variance", "trace variance settles", trace_variance},
};

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = argv[++i];
        } else if (std::strcmp(argv[i], "--list") == 0) {
            for (const auto& c : kCriteria) std::printf("%s\n", c.name);
            return 0;
        } else {
            std::fprintf(stderr, "usage: %s [--only NAME] [--list]\n", argv[0]);
            return 2;
        }
    }
    int failures = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && only != c.name) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s  %-30s %s\n", o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str());
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return failures ? 1 : 0;
}
