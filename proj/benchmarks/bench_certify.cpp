#include <benchmark/benchmark.h>

#include "lipcert/baselines.hpp"
#include "lipcert/certify.hpp"
#include "lipcert/lmi.hpp"
#include "lipcert/model.hpp"

using namespace lipcert;

namespace {

const ValidatedNetwork& fully_conv() {
  static const ValidatedNetwork net = validate_network(random_network(fully_convolutional_arch(), 42));
  return net;
}

}  // namespace

static void BM_AssembleSs(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(assemble_ss_sdp(fully_conv()));
}
BENCHMARK(BM_AssembleSs);

static void BM_CertifySs(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(certify(fully_conv(), Method::kSsSdp, 16).gamma);
}
BENCHMARK(BM_CertifySs)->Unit(benchmark::kMillisecond);

// dense-sdp cost against input length
static void BM_CertifyDense(benchmark::State& state) {
  const int n0 = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(certify(fully_conv(), Method::kDenseSdp, n0).gamma);
  state.SetComplexityN(n0);
}
BENCHMARK(BM_CertifyDense)->Arg(3)->Arg(6)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond)->Complexity();

static void BM_Spectral(benchmark::State& state) {
  const int n0 = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_product(fully_conv(), n0));
}
BENCHMARK(BM_Spectral)->Arg(15)->Arg(60);

static void BM_CertifyTwoStage(benchmark::State& state) {
  const int c1 = static_cast<int>(state.range(0));
  const ValidatedNetwork net = validate_network(random_network(two_stage_pooling_arch(c1, 2 * c1), 0));
  for (auto _ : state) benchmark::DoNotOptimize(certify(net, Method::kSsSdp).gamma);
}
BENCHMARK(BM_CertifyTwoStage)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
