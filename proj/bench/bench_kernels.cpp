// Times the serial reference kernels against the OpenMP production kernels
// on the shapes the model actually hits, and confirms their outputs are
// bit-identical.  Usage: bench_kernels [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>

#include "egcn/graph.hpp"
#include "egcn/kernels.hpp"
#include "egcn/util.hpp"

namespace {

using egcn::Matrix;

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  Matrix m = Matrix::zeros(r, c);
  for (double& v : m.data) v = egcn::uniform_sym(rng, 1.0);
  return m;
}

template <typename F>
double time_best_seconds(int reps, F&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double flops, double ref_s, double par_s,
            double max_diff) {
  std::printf("%-24s ref %8.2f ms (%6.2f GFLOP/s)   omp %8.2f ms (%6.2f GFLOP/s)   speedup %.2fx   max|diff| %g\n",
              name, ref_s * 1e3, flops / ref_s * 1e-9, par_s * 1e3,
              flops / par_s * 1e-9, ref_s / par_s, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  std::mt19937_64 rng(12345);

  {
    const int n = 512;
    Matrix a = random_matrix(n, n, rng);
    Matrix b = random_matrix(n, n, rng);
    Matrix out_ref, out_par;
    const double ref_s =
        time_best_seconds(reps, [&] { out_ref = egcn::ref::matmul_nn(a, b); });
    const double par_s = time_best_seconds(
        reps, [&] { out_par = egcn::kernels::matmul_nn(a, b); });
    report("matmul_nn 512x512", 2.0 * n * n * n, ref_s, par_s,
           egcn::max_abs_diff(out_ref, out_par));
  }
  {
    const int m = 870, k = 4000, n = 32;
    Matrix a = random_matrix(m, k, rng);
    Matrix b = random_matrix(k, n, rng);
    Matrix out_ref, out_par;
    const double ref_s =
        time_best_seconds(reps, [&] { out_ref = egcn::ref::matmul_nn(a, b); });
    const double par_s = time_best_seconds(
        reps, [&] { out_par = egcn::kernels::matmul_nn(a, b); });
    report("matmul_nn 870x4000x32", 2.0 * m * k * n, ref_s, par_s,
           egcn::max_abs_diff(out_ref, out_par));
  }
  {
    // population-graph shape: 870 subjects, 17 sites, feature width 96
    std::vector<std::string> sites;
    for (int i = 0; i < 870; ++i) sites.push_back("SITE_" + std::to_string(i % 17));
    egcn::PopulationGraph g = egcn::PopulationGraph::from_sites(sites);
    egcn::ScaledLaplacian lap =
        egcn::scaled_laplacian(egcn::normalized_laplacian(g));
    Matrix x = random_matrix(870, 96, rng);
    Matrix out_ref, out_par;
    const double ref_s = time_best_seconds(
        reps, [&] { out_ref = egcn::ref::spmm(*lap.matrix, x); });
    const double par_s = time_best_seconds(
        reps, [&] { out_par = egcn::kernels::spmm(*lap.matrix, x); });
    const double flops = 2.0 * static_cast<double>(lap.matrix->nnz()) * 96;
    report("spmm 870-graph x96", flops, ref_s, par_s,
           egcn::max_abs_diff(out_ref, out_par));
  }
  return 0;
}
