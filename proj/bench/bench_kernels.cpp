// Times the serial reference kernels against their OpenMP counterparts.

#include <chrono>
#include <cstdio>
#include <vector>

#include "qgen/nn/kernels.hpp"
#include "qgen/nn/rng.hpp"

using namespace qgen::nn;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void fill(std::vector<double>& v, Rng& rng) {
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  if (argc > 1) threads = std::atoi(argv[1]);
  kernels::set_threads(threads);
  std::printf("threads: %d\n", kernels::threads());
  std::printf("%-22s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  Rng rng(1);
  for (int n : {256, 512, 1024, 2048}) {
    std::vector<double> W(static_cast<size_t>(n) * n), x(static_cast<size_t>(n)),
        y(static_cast<size_t>(n));
    fill(W, rng);
    fill(x, rng);
    const int reps = n <= 512 ? 50 : 10;
    double ts = time_best_of(reps, [&] { kernels::serial::matvec(W.data(), x.data(), y.data(), n, n); });
    double tp = time_best_of(reps, [&] { kernels::parallel::matvec(W.data(), x.data(), y.data(), n, n); });
    std::printf("matvec %dx%-10d %10.3f %10.3f %7.2fx\n", n, n, ts, tp, ts / tp);

    ts = time_best_of(reps, [&] { kernels::serial::matvec_t(W.data(), x.data(), y.data(), n, n); });
    tp = time_best_of(reps, [&] { kernels::parallel::matvec_t(W.data(), x.data(), y.data(), n, n); });
    std::printf("matvec_t %dx%-8d %10.3f %10.3f %7.2fx\n", n, n, ts, tp, ts / tp);

    std::vector<double> dW(static_cast<size_t>(n) * n, 0.0);
    ts = time_best_of(reps, [&] { kernels::serial::outer_acc(dW.data(), x.data(), x.data(), n, n); });
    tp = time_best_of(reps, [&] { kernels::parallel::outer_acc(dW.data(), x.data(), x.data(), n, n); });
    std::printf("outer_acc %dx%-7d %10.3f %10.3f %7.2fx\n", n, n, ts, tp, ts / tp);
  }

  for (int n : {128, 256, 512}) {
    std::vector<double> A(static_cast<size_t>(n) * n), B(static_cast<size_t>(n) * n),
        C(static_cast<size_t>(n) * n);
    fill(A, rng);
    fill(B, rng);
    const int reps = 5;
    double ts = time_best_of(reps, [&] { kernels::serial::matmul(A.data(), B.data(), C.data(), n, n, n); });
    double tp = time_best_of(reps, [&] { kernels::parallel::matmul(A.data(), B.data(), C.data(), n, n, n); });
    std::printf("matmul %dx%-11d %10.3f %10.3f %7.2fx\n", n, n, ts, tp, ts / tp);
  }
  return 0;
}
