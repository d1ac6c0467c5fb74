#include <benchmark/benchmark.h>

#include "selfie/dataset.hpp"
#include "selfie/harness.hpp"
#include "selfie/synthetic.hpp"
#include "selfie/toy_lm.hpp"
#include "selfie/train.hpp"

namespace {

selfie::ToyLM toy(std::size_t d) {
    selfie::ToyConfig c;
    c.kind = selfie::ToyKind::mix;
    c.seed = 3;
    c.vocab_size = d;
    c.d = d;
    return selfie::ToyLM(c);
}

std::vector<std::string> labels(const selfie::ToyLM& lm) {
    std::vector<std::string> out;
    for (std::size_t t = 0; t < lm.vocab_size(); ++t) {
        out.push_back(lm.detokenize(std::vector<selfie::TokenId>{static_cast<selfie::TokenId>(t)}));
    }
    return out;
}

// One teacher-forced loss and injection gradient through the rendered template.
void BM_TeacherForcedLoss(benchmark::State& state) {
    const auto lm = toy(static_cast<std::size_t>(state.range(0)));
    const auto rendered = selfie::render_template(lm, {});
    const auto tokens = selfie::label_tokens(lm, "t1 t2 t3", false);
    selfie::InjectionSpec spec{std::vector<double>(lm.dims().d, 0.1), 1.0};
    for (auto _ : state) {
        auto r = selfie::loss_with_injection(lm, rendered, spec, tokens);
        benchmark::DoNotOptimize(r.loss);
    }
}

void BM_Generate(benchmark::State& state) {
    const auto lm = toy(32);
    const auto rendered = selfie::render_template(lm, {});
    selfie::InjectionSpec spec{std::vector<double>(32, 0.2), 1.0};
    const auto max_tokens = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto g = selfie::generate(lm, rendered, spec, selfie::SamplingConfig::nucleus(0.7, 0.9), max_tokens, 5);
        benchmark::DoNotOptimize(g.tokens.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrainEpoch(benchmark::State& state) {
    const auto lm = toy(32);
    const auto task = selfie::make_planted_rotation(32, labels(lm), static_cast<std::size_t>(state.range(0)), 0.05, 1);
    const auto splits = selfie::split_dataset(task.data, {0.9, 0.1, 0.0, 1});
    selfie::TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.validations_per_epoch = 1;
    cfg.append_terminator = false;
    for (auto _ : state) {
        auto r = selfie::train(selfie::Adapter::create(selfie::AdapterKind::scalar_affine, lm.dims()), lm, {},
                               splits.train, splits.val, cfg);
        benchmark::DoNotOptimize(r.best_val_loss);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(splits.train.size()));
}

void BM_Pca(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto lm = toy(d);
    selfie::TeacherTaskSpec spec;
    spec.d = d;
    spec.intrinsic_dim = d;
    spec.n = 1024;
    const auto data = selfie::make_teacher_task(spec, labels(lm));
    for (auto _ : state) {
        auto c = selfie::pca_cumulative_variance(data);
        benchmark::DoNotOptimize(c.data());
    }
}

}  // namespace

BENCHMARK(BM_TeacherForcedLoss)->Arg(32)->Arg(128);
BENCHMARK(BM_Generate)->Arg(8)->Arg(32);
BENCHMARK(BM_TrainEpoch)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pca)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
