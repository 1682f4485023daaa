#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "diacdm/checkpoint.hpp"
#include "diacdm/model.hpp"
#include "diacdm/synth.hpp"
#include "support.hpp"

using namespace diacdm;
using diacdm::testing::check_gradients;
using diacdm::testing::TempDir;
using diacdm::testing::thrown_code;

namespace {

nlohmann::json reference() {
    std::ifstream in(diacdm::testing::data_dir() / "reference_forward.json");
    return nlohmann::json::parse(in);
}

Tensor tensor_of(const nlohmann::json& values, std::size_t rows, std::size_t cols) {
    return Tensor::from_values(rows, cols, values.get<std::vector<double>>());
}

void check_close(std::span<const double> a, const nlohmann::json& b, double tol) {
    const auto v = b.get<std::vector<double>>();
    REQUIRE(a.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(a[i] == doctest::Approx(v[i]).epsilon(tol));
}

SynthData toy(std::uint64_t seed = 3) {
    SynthSpec spec;
    spec.n_students = 3;
    spec.n_concepts = 4;
    spec.rounds_per_student = 4;
    spec.dim_g = 8;
    spec.seed = seed;
    return synthesize(spec);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("forward matches an independent reference implementation") {
    const auto ref = reference();
    const std::size_t dim = ref["dim"], k = ref["concepts"];
    RoundInput in;
    in.student = ref["student"];
    in.has_graph = true;
    const AmrGraph g = parse_penman(ref["penman"].get<std::string>());
    std::vector<std::string> labels;
    for (const auto& n : g.nodes) labels.push_back(n.label);
    REQUIRE(labels == ref["node_labels"].get<std::vector<std::string>>());
    in.adjacency = NormalizedAdjacency(g).as_tensor();
    in.node_feats = tensor_of(ref["node_feats"], g.node_count(), dim);
    in.question_text = tensor_of(ref["question_text"], 1, dim);
    in.concepts = tensor_of(ref["concept_vecs"], 2, dim);
    in.answer = tensor_of(ref["answer"], 1, dim);
    in.evaluation = tensor_of(ref["evaluation"], 1, dim);
    in.mask = tensor_of(ref["mask"], 1, k);
    in.concept_indices = {0, 1};

    for (const auto& [mode_name, expected] : ref["expected"].items()) {
        CAPTURE(mode_name);
        ModelConfig cfg;
        cfg.dim = dim;
        cfg.gcn_layers = ref["gcn_layers"];
        cfg.hidden = ref["hidden"];
        cfg.ablation = parse_ablation(mode_name);
        DiaCdm model(cfg, ref["students"].get<std::vector<std::string>>(), {"k0", "k1"});
        for (auto& nt : model.params().named()) {
            const auto& p = ref["params"].at(nt.name);
            REQUIRE(nt.tensor.rows() == p["shape"][0].get<std::size_t>());
            REQUIRE(nt.tensor.cols() == p["shape"][1].get<std::size_t>());
            const auto v = p["values"].get<std::vector<double>>();
            std::copy(v.begin(), v.end(), nt.tensor.mutable_values().begin());
        }
        const RoundTrace t = model.forward(in);
        check_close(t.question.global.values(), expected["h_g"], 1e-12);
        check_close(t.knowledge_question.values(), expected["h_gk"], 1e-12);
        check_close(t.states.mastery.values(), expected["h_c"], 1e-12);
        CHECK(t.probability.item() == doctest::Approx(expected["y_hat"].get<double>()).epsilon(1e-12));
    }
}

TEST_CASE("every parameter gradient matches central differences on a toy") {
    const SynthData d = toy();
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.hidden = 8;
    cfg.seed = 5;
    DiaCdm model(cfg, d.dataset.students, d.dataset.vocabulary);
    // Push the predictor away from the clamp boundary so ReLU units are live.
    for (double& v : model.params().predictor.hidden_b.mutable_values()) v = 0.1;
    const auto inputs = prepare_inputs(d.dataset, cfg.fallback_seed);
    std::vector<const RoundInput*> batch;
    for (const auto& in : inputs) batch.push_back(&in);
    const auto r = check_gradients(model.params().tensors(), [&] { return model.loss(batch); });
    CHECK(r.checked > 500);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("parameter names are unique and stable") {
    const SynthData d = toy();
    DiaCdm model(ModelConfig{.dim = 8}, d.dataset.students, d.dataset.vocabulary);
    std::set<std::string> names;
    for (const auto& nt : model.params().named()) names.insert(nt.name);
    CHECK(names.size() == model.params().named().size());
    CHECK(names.contains("encoder.gcn.global.0"));
    CHECK(names.contains("encoder.gcn.discrimination.1"));
    CHECK(names.contains("predictor.out.w"));
}

TEST_CASE("clone is deep and assign_from copies values") {
    const SynthData d = toy();
    DiaCdm model(ModelConfig{.dim = 8}, d.dataset.students, d.dataset.vocabulary);
    ModelParams copy = model.params().clone();
    copy.cognition.lambda_logits.mutable_values()[0] = 42.0;
    CHECK(model.params().cognition.lambda_logits.values()[0] != 42.0);
    model.params().assign_from(copy);
    CHECK(model.params().cognition.lambda_logits.values()[0] == 42.0);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const SynthData d = toy();
    ModelConfig cfg;
    cfg.dim = 8;
    cfg.ablation = AblationMode::NoTs;
    cfg.lambda_init = {0.1, -0.2, 0.3};
    cfg.seed = 99;
    DiaCdm model(cfg, d.dataset.students, d.dataset.vocabulary);
    model.params().encoder.global_b.mutable_values()[0] = 1.0 / 3.0;
    model.params().students.table().mutable_values()[1] = -5e-310;  // subnormal
    TempDir dir;
    save_checkpoint(model, dir / "m.json");
    const DiaCdm back = load_checkpoint(dir / "m.json");
    CHECK(back.config().ablation == AblationMode::NoTs);
    CHECK(back.config().seed == 99);
    CHECK(back.vocabulary() == model.vocabulary());
    const auto a = model.params().named();
    const auto b = back.params().named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(std::equal(a[i].tensor.values().begin(), a[i].tensor.values().end(), b[i].tensor.values().begin(),
                         b[i].tensor.values().end()));
    }
    CHECK(checkpoint_json(back) == checkpoint_json(model));
    const auto inputs = prepare_inputs(d.dataset, cfg.fallback_seed);
    CHECK(back.probability(inputs[0]) == model.probability(inputs[0]));
}

TEST_CASE("bad checkpoints") {
    TempDir dir;
    CHECK(thrown_code([&] { load_checkpoint(dir / "absent.json"); }) == Errc::MissingFile);
    diacdm::testing::write_file(dir / "x.json", "{\"format_version\": 1}");
    CHECK(thrown_code([&] { load_checkpoint(dir / "x.json"); }) == Errc::BadCheckpoint);
    diacdm::testing::write_file(dir / "y.json", "not json");
    CHECK(thrown_code([&] { load_checkpoint(dir / "y.json"); }) == Errc::BadCheckpoint);
    const SynthData d = toy();
    auto j = nlohmann::json::parse(checkpoint_json(DiaCdm(ModelConfig{.dim = 8}, d.dataset.students, d.dataset.vocabulary)));
    j["format_version"] = 99;
    CHECK(thrown_code([&] { checkpoint_from_json(j.dump()); }) == Errc::BadCheckpoint);
}

TEST_CASE("questions without a graph use the text path") {
    SynthData d = toy();
    d.dataset.amr.erase(d.dataset.rounds[0].question_id);
    const auto inputs = prepare_inputs(d.dataset, kDefaultFallbackSeed);
    CHECK_FALSE(inputs[0].has_graph);
    CHECK(inputs[1].has_graph);
    const DiaCdm model(ModelConfig{.dim = 8}, d.dataset.students, d.dataset.vocabulary);
    const RoundTrace t = model.forward(inputs[0]);
    const QuestionEncoding direct = encode_question_text(inputs[0].question_text, model.params().encoder);
    CHECK(std::equal(t.question.global.values().begin(), t.question.global.values().end(),
                     direct.global.values().begin()));
}

}  // TEST_SUITE
