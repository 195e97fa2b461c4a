#pragma once

#include <cstddef>

namespace qgen::nn::kernels {

// Global worker cap shared by the kernel dispatchers and parallel_for.
void set_threads(int n);
int threads();

// Serial reference kernels. Element evaluation order is fixed so the OpenMP
// versions produce bit-identical results (each output element is an
// independent serial accumulation).
namespace serial {
void matvec(const double* W, const double* x, double* y, int m, int k);   // y = W x
void matvec_t(const double* W, const double* x, double* y, int m, int k); // y = W^T x
void outer_acc(double* dW, const double* dy, const double* x, int m, int k); // dW += dy x^T
void matmul(const double* A, const double* B, double* C, int m, int k, int n); // C = A B
}  // namespace serial

namespace parallel {
void matvec(const double* W, const double* x, double* y, int m, int k);
void matvec_t(const double* W, const double* x, double* y, int m, int k);
void outer_acc(double* dW, const double* dy, const double* x, int m, int k);
void matmul(const double* A, const double* B, double* C, int m, int k, int n);
}  // namespace parallel

// Dispatching wrappers: run the OpenMP kernel when the problem is large
// enough to pay for the fork, the serial reference otherwise.
void matvec(const double* W, const double* x, double* y, int m, int k);
void matvec_t(const double* W, const double* x, double* y, int m, int k);
void outer_acc(double* dW, const double* dy, const double* x, int m, int k);
void matmul(const double* A, const double* B, double* C, int m, int k, int n);

// Parallel map over [0, n): fn(i) must only touch slot-i state. Results are
// deterministic for any thread count.
void parallel_for(int n, const void* ctx, void (*fn)(const void*, int));

template <class F>
void for_each_index(int n, F&& fn) {
  struct Wrap {
    const F* f;
  } w{&fn};
  parallel_for(
      n, &w, +[](const void* ctx, int i) { (*static_cast<const Wrap*>(ctx)->f)(i); });
}

}  // namespace qgen::nn::kernels
