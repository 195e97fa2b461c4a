#include "qgen/nn/kernels.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qgen::nn::kernels {

namespace {
std::atomic<int> g_threads{0};  // 0 = hardware default

int effective_threads() {
  int t = g_threads.load(std::memory_order_relaxed);
#ifdef _OPENMP
  if (t <= 0) t = omp_get_max_threads();
#else
  if (t <= 0) t = 1;
#endif
  return t;
}

// Flop threshold below which forking is slower than the serial kernel.
constexpr long long kParallelCutoff = 64 * 1024;
}  // namespace

void set_threads(int n) { g_threads.store(n, std::memory_order_relaxed); }
int threads() { return effective_threads(); }

namespace {
// Eight-lane dot product: fixed reassociation the compiler can vectorize,
// identical element order in the serial and OpenMP variants.
inline double dot8(const double* __restrict a, const double* __restrict b, int k) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
  int j = 0;
  for (; j + 8 <= k; j += 8) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
    s4 += a[j + 4] * b[j + 4];
    s5 += a[j + 5] * b[j + 5];
    s6 += a[j + 6] * b[j + 6];
    s7 += a[j + 7] * b[j + 7];
  }
  double acc = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
  for (; j < k; ++j) acc += a[j] * b[j];
  return acc;
}

// y[j0..j1) += sum_i W[i][j] * x[i], j-contiguous so the inner loop vectorizes.
inline void tmatvec_cols(const double* __restrict W, const double* __restrict x,
                         double* __restrict y, int m, int k, int j0, int j1) {
  for (int j = j0; j < j1; ++j) y[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double xi = x[i];
    const double* row = W + static_cast<size_t>(i) * k;
    for (int j = j0; j < j1; ++j) y[j] += xi * row[j];
  }
}
}  // namespace

namespace serial {

void matvec(const double* W, const double* x, double* y, int m, int k) {
  for (int i = 0; i < m; ++i) y[i] = dot8(W + static_cast<size_t>(i) * k, x, k);
}

void matvec_t(const double* W, const double* x, double* y, int m, int k) {
  tmatvec_cols(W, x, y, m, k, 0, k);
}

void outer_acc(double* dW, const double* dy, const double* x, int m, int k) {
  for (int i = 0; i < m; ++i) {
    double* __restrict row = dW + static_cast<size_t>(i) * k;
    const double d = dy[i];
    for (int j = 0; j < k; ++j) row[j] += d * x[j];
  }
}

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* __restrict crow = C + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double a = A[static_cast<size_t>(i) * k + p];
      const double* __restrict brow = B + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

}  // namespace serial

namespace parallel {

void matvec(const double* W, const double* x, double* y, int m, int k) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int i = 0; i < m; ++i) y[i] = dot8(W + static_cast<size_t>(i) * k, x, k);
}

void matvec_t(const double* W, const double* x, double* y, int m, int k) {
  const int t = effective_threads();
#pragma omp parallel num_threads(t)
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
    const int nt = omp_get_num_threads();
#else
    const int tid = 0;
    const int nt = 1;
#endif
    const int chunk = (k + nt - 1) / nt;
    const int j0 = std::min(k, tid * chunk);
    const int j1 = std::min(k, j0 + chunk);
    if (j0 < j1) tmatvec_cols(W, x, y, m, k, j0, j1);
  }
}

void outer_acc(double* dW, const double* dy, const double* x, int m, int k) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int i = 0; i < m; ++i) {
    double* __restrict row = dW + static_cast<size_t>(i) * k;
    const double d = dy[i];
    for (int j = 0; j < k; ++j) row[j] += d * x[j];
  }
}

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int i = 0; i < m; ++i) {
    double* __restrict crow = C + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double a = A[static_cast<size_t>(i) * k + p];
      const double* __restrict brow = B + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

}  // namespace parallel

void matvec(const double* W, const double* x, double* y, int m, int k) {
  if (static_cast<long long>(m) * k >= kParallelCutoff && effective_threads() > 1)
    parallel::matvec(W, x, y, m, k);
  else
    serial::matvec(W, x, y, m, k);
}

void matvec_t(const double* W, const double* x, double* y, int m, int k) {
  if (static_cast<long long>(m) * k >= kParallelCutoff && effective_threads() > 1)
    parallel::matvec_t(W, x, y, m, k);
  else
    serial::matvec_t(W, x, y, m, k);
}

void outer_acc(double* dW, const double* dy, const double* x, int m, int k) {
  if (static_cast<long long>(m) * k >= kParallelCutoff && effective_threads() > 1)
    parallel::outer_acc(dW, dy, x, m, k);
  else
    serial::outer_acc(dW, dy, x, m, k);
}

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
  if (static_cast<long long>(m) * k * n >= kParallelCutoff && effective_threads() > 1)
    parallel::matmul(A, B, C, m, k, n);
  else
    serial::matmul(A, B, C, m, k, n);
}

void parallel_for(int n, const void* ctx, void (*fn)(const void*, int)) {
  const int t = effective_threads();
  if (t <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(ctx, i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
  for (int i = 0; i < n; ++i) fn(ctx, i);
}

}  // namespace qgen::nn::kernels
