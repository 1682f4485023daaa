#include <benchmark/benchmark.h>

#include <vector>

#include "diacdm/model.hpp"
#include "diacdm/penman.hpp"
#include "diacdm/synth.hpp"
#include "diacdm/tensor.hpp"

using namespace diacdm;

namespace {

struct Fixture {
    SynthData data;
    std::vector<RoundInput> inputs;
    DiaCdm model;

    Fixture()
        : data(synthesize(small_spec())),
          inputs(prepare_inputs(data.dataset, kDefaultFallbackSeed)),
          model(config(data.dataset), data.dataset.students, data.dataset.vocabulary) {}

    static SynthSpec small_spec() {
        SynthSpec s;
        s.n_students = 20;
        s.rounds_per_student = 10;
        return s;
    }
    static ModelConfig config(const Dataset& ds) {
        ModelConfig c;
        c.dim = ds.embeddings.dim();
        c.seed = 1;
        return c;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_ParsePenman(benchmark::State& state) {
    const char* text =
        "(w / want-01 :ARG0 (b / boy :mod (t / tall)) :ARG1 (g / go-02 :ARG0 b "
        ":destination (c / city :name (n / name :op1 \"Paris\"))) :polarity -)";
    for (auto _ : state) benchmark::DoNotOptimize(parse_penman(text));
}
BENCHMARK(BM_ParsePenman);

void BM_Forward(benchmark::State& state) {
    auto& f = fixture();
    NoGradGuard guard;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.model.probability(f.inputs[i]));
        i = (i + 1) % f.inputs.size();
    }
}
BENCHMARK(BM_Forward);

void BM_ForwardBackward(benchmark::State& state) {
    auto& f = fixture();
    const auto batch_size = static_cast<std::size_t>(state.range(0));
    std::vector<const RoundInput*> batch;
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(&f.inputs[i % f.inputs.size()]);
    for (auto _ : state) {
        for (auto& t : f.model.params().tensors()) t.zero_grad();
        Tensor loss = f.model.loss(batch);
        loss.backward();
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(16)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
