// OpenMP batch kernels against their serial references.
//
//   socrec_bench --benchmark_filter=Predict
//
// The first argument is the thread cap passed to set_thread_limit; serial
// variants ignore it.

#include <benchmark/benchmark.h>

#include <random>

#include "socrec/batch.hpp"
#include "support.hpp"

using namespace socrec;

namespace {

constexpr std::size_t kItems = 2000;
constexpr std::size_t kUsers = 256;

struct Fixture {
  ScaaModel model;
  std::vector<UserHistory> histories;
  std::vector<ScoringPair> pairs;
  std::vector<UserGroup> groups;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    ModelShape shape;
    shape.item_count = kItems;
    shape.d = 16;
    out.model = init_model(shape, 1);
    std::mt19937_64 rng(2);
    std::vector<std::vector<std::size_t>> candidates;
    for (std::size_t u = 0; u < kUsers; ++u) {
      auto user = testing::random_user(kItems, 8, 4, 12, rng);
      out.histories.push_back(std::move(user.history));
      candidates.push_back(std::move(user.candidates));
    }
    for (std::size_t u = 0; u < kUsers; ++u) {
      UserGroup g;
      g.user = u;
      for (std::size_t item : candidates[u]) {
        out.pairs.push_back({&out.histories[u], item});
        g.items.push_back(item);
        g.labels.push_back(static_cast<double>(item % 2));
      }
      out.groups.push_back(std::move(g));
    }
    return out;
  }();
  return f;
}

void BM_PredictParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  set_thread_limit(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch(f.model, f.pairs));
  set_thread_limit(0);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.pairs.size()));
}

void BM_PredictSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch_serial(f.model, f.pairs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.pairs.size()));
}

void BM_GradientsParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  set_thread_limit(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradients(f.model, f.histories, f.groups));
  set_thread_limit(0);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.pairs.size()));
}

void BM_GradientsSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradients_serial(f.model, f.histories, f.groups));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.pairs.size()));
}

}  // namespace

BENCHMARK(BM_PredictSerial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientsSerial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientsParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
