#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Batch numeric kernels behind runtime dispatch. Every operation has a
// scalar reference implementation; on x86-64 with AVX2+FMA an intrinsics
// variant is selected at startup. The two are equivalence-tested in
// tests/test_kernels.cpp. apply_hop_batch and max_abs_diff match the scalar
// path bit-for-bit (no reassociation); dot and discounted_shaping_sum
// reassociate the reduction and agree to rounding error.
namespace dopamine::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
std::string_view backend_name();

// Test/diagnostic hook: force the scalar path regardless of CPU support.
// Also enabled by setting DOPAMINE_NO_SIMD=1 in the environment.
void force_scalar(bool on);

// Inner product, the Bellman-backup workhorse: sum_i a[i]*b[i].
double dot(std::span<const double> a, std::span<const double> b);

// Element-wise hop application with the sign-split update rule,
//   out[i] = phi[i] + hop[i]*(1-phi[i])  if hop[i] >= 0
//   out[i] = phi[i]*(1+hop[i])           otherwise,
// clamped to [0,1]. Lanes are independent trajectories.
void apply_hop_batch(std::span<const double> phi, std::span<const double> hop,
                     std::span<double> out);

// sum_{t=0}^{n-2} gamma^t * (gamma*phi[t+1] - phi[t]).
// Telescopes analytically to gamma^(n-1)*phi[n-1] - phi[0].
double discounted_shaping_sum(std::span<const double> phi, double gamma);

// Sup-norm distance between two equal-length vectors.
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// Reference and vector entry points, exposed for equivalence testing.
namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void apply_hop_batch_scalar(const double* phi, const double* hop, double* out, std::size_t n);
double discounted_shaping_sum_scalar(const double* phi, std::size_t n, double gamma);
double max_abs_diff_scalar(const double* a, const double* b, std::size_t n);

bool avx2_compiled_in();
double dot_avx2(const double* a, const double* b, std::size_t n);
void apply_hop_batch_avx2(const double* phi, const double* hop, double* out, std::size_t n);
double discounted_shaping_sum_avx2(const double* phi, std::size_t n, double gamma);
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n);
}  // namespace detail

}  // namespace dopamine::kernels
