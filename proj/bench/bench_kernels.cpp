#include "carnot/kernels.hpp"
#include "carnot/sampling.hpp"
#include "carnot/spectrum.hpp"
#include "carnot/taming.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace carnot;

namespace {

EnergyModel tamed_model() {
  return {Step2Group::heisenberg(), NormSpec::type_two_smooth(16.0), TamingSpec::additive_power(1.0, 1.0),
          OuterFunction::power(8.0)};
}

const std::vector<GroupPoint>& shell_points(std::size_t count) {
  static std::vector<GroupPoint> pts;
  if (pts.size() != count) {
    const auto m = tamed_model();
    pts = sample_level_set(m.group, m.norm, count, 2.0, 1, 0);
  }
  return pts;
}

void v2_sweep(benchmark::State& state, kernels::Exec exec) {
  const auto model = tamed_model();
  const auto& pts = shell_points(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(pts.size());
  for (auto _ : state) {
    kernels::for_each_index(exec, pts.size(), [&](std::size_t i) { out[i] = v2_closed(model, pts[i]); });
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(pts.size()));
}

const kernels::RowSparse& hamiltonian(int nodes) {
  static int cached = -1;
  static kernels::RowSparse A;
  if (cached != nodes) {
    const auto model = tamed_model();
    A = kernels::RowSparse(assemble_hamiltonian(model, SpectrumConfig::weighted(model, 3.0, nodes)).H);
    A.makeCompressed();
    cached = nodes;
  }
  return A;
}

void spmv_sweep(benchmark::State& state, kernels::Exec exec) {
  const auto& A = hamiltonian(static_cast<int>(state.range(0)));
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(A.cols());
  Eigen::VectorXd y(A.rows());
  for (auto _ : state) {
    kernels::spmv(exec, A, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(A.nonZeros()));
}

}  // namespace

BENCHMARK_CAPTURE(v2_sweep, serial, kernels::Exec::Serial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(v2_sweep, parallel, kernels::Exec::Parallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(spmv_sweep, serial, kernels::Exec::Serial)->Arg(32)->Arg(48);
BENCHMARK_CAPTURE(spmv_sweep, parallel, kernels::Exec::Parallel)->Arg(32)->Arg(48);

BENCHMARK_MAIN();
