#include "tpmsvox/fem.hpp"
#include "tpmsvox/implicit_geometry.hpp"
#include "tpmsvox/voxel_mesher.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace tpmsvox;

namespace {

const ImplicitLattice& lattice() {
  static const ImplicitLattice l = ImplicitLattice::uniform(5.0, 0.152344);
  return l;
}

VoxelGridSpec grid(double h) {
  VoxelGridSpec spec;
  spec.element_size = h;
  spec.domain = Box::cube(10.0);
  return spec;
}

const HexMesh& voxel_mesh(double h) {
  static const HexMesh coarse = filter_components(build_voxel_mesh(classify_voxels(lattice(), grid(0.5))),
                                                  ComponentKeep::spanning);
  static const HexMesh medium = filter_components(build_voxel_mesh(classify_voxels(lattice(), grid(0.25))),
                                                  ComponentKeep::spanning);
  return h > 0.3 ? coarse : medium;
}

double element_size(const benchmark::State& state) { return state.range(0) == 0 ? 0.5 : 0.25; }

}  // namespace

static void BM_FieldLevel(benchmark::State& state) {
  double acc = 0.0;
  std::uint64_t i = 0;
  for (auto _ : state) {
    const Vec3 p = 10.0 * counter_uniform_point(7, i++);
    acc += lattice().level(p);
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FieldLevel);

static void BM_ClassifyVoxels(benchmark::State& state) {
  const VoxelGridSpec spec = grid(element_size(state));
  for (auto _ : state) benchmark::DoNotOptimize(classify_voxels(lattice(), spec));
}
BENCHMARK(BM_ClassifyVoxels)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Conform(benchmark::State& state) {
  const HexMesh& mesh = voxel_mesh(element_size(state));
  ConformOptions options;
  options.min_jacobian = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(conform_to_surface(mesh, lattice(), options));
}
BENCHMARK(BM_Conform)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
  const HexMesh& mesh = voxel_mesh(element_size(state));
  const MaterialSpec material;
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, material));
  state.counters["elements"] = static_cast<double>(mesh.element_count());
}
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_MatVec(benchmark::State& state) {
  const HexMesh& mesh = voxel_mesh(element_size(state));
  const SymmetricBlockMatrix k = assemble(mesh, MaterialSpec{});
  std::vector<double> x(k.dof_count(), 1e-3), y(k.dof_count());
  for (auto _ : state) {
    k.multiply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(k.dof_count()));
}
BENCHMARK(BM_MatVec)->Arg(0)->Arg(1);

static void BM_CompressionSolve(benchmark::State& state) {
  const HexMesh& mesh = voxel_mesh(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(run_compression(mesh, MaterialSpec{}, CompressionSetup{}));
}
BENCHMARK(BM_CompressionSolve)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
