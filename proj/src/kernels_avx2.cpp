// AVX2+FMA variants of the batch kernels. This translation unit is compiled
// with -mavx2 -mfma and must only be entered after the dispatcher has
// confirmed CPU support.

#include "dopamine/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define DOPAMINE_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define DOPAMINE_HAVE_AVX2_TU 0
#endif

#include <algorithm>
#include <cmath>

namespace dopamine::kernels::detail {

#if DOPAMINE_HAVE_AVX2_TU

bool avx2_compiled_in() { return true; }

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void apply_hop_batch_avx2(const double* phi, const double* hop, double* out, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    // mul+add (no FMA) so lanes match the scalar reference bit-for-bit.
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_loadu_pd(phi + i);
        const __m256d h = _mm256_loadu_pd(hop + i);
        const __m256d pos = _mm256_add_pd(p, _mm256_mul_pd(h, _mm256_sub_pd(one, p)));
        const __m256d neg = _mm256_add_pd(p, _mm256_mul_pd(p, h));
        const __m256d is_neg = _mm256_cmp_pd(h, zero, _CMP_LT_OQ);
        __m256d next = _mm256_blendv_pd(pos, neg, is_neg);
        next = _mm256_min_pd(_mm256_max_pd(next, zero), one);
        _mm256_storeu_pd(out + i, next);
    }
    if (i < n) apply_hop_batch_scalar(phi + i, hop + i, out + i, n - i);
}

double discounted_shaping_sum_avx2(const double* phi, std::size_t n, double gamma) {
    if (n < 2) return 0.0;
    const std::size_t steps = n - 1;
    const double g2 = gamma * gamma;
    const double g4 = g2 * g2;
    // Weights for a block of four consecutive steps: gamma^{t..t+3}.
    const __m256d base = _mm256_set_pd(g2 * gamma, g2, gamma, 1.0);
    const __m256d gv = _mm256_set1_pd(gamma);
    __m256d acc = _mm256_setzero_pd();
    double disc = 1.0;  // gamma^t at the head of the current block
    std::size_t t = 0;
    for (; t + 4 <= steps; t += 4) {
        const __m256d cur = _mm256_loadu_pd(phi + t);
        const __m256d nxt = _mm256_loadu_pd(phi + t + 1);
        const __m256d term = _mm256_sub_pd(_mm256_mul_pd(gv, nxt), cur);
        const __m256d w = _mm256_mul_pd(_mm256_set1_pd(disc), base);
        acc = _mm256_fmadd_pd(w, term, acc);
        disc *= g4;
    }
    double sum = hsum(acc);
    for (; t < steps; ++t) {
        sum += disc * (gamma * phi[t + 1] - phi[t]);
        disc *= gamma;
    }
    return sum;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d best = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        best = _mm256_max_pd(best, _mm256_andnot_pd(sign_mask, d));
    }
    double m = hmax(best);
    for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

#else  // !DOPAMINE_HAVE_AVX2_TU

bool avx2_compiled_in() { return false; }

double dot_avx2(const double* a, const double* b, std::size_t n) {
    return dot_scalar(a, b, n);
}
void apply_hop_batch_avx2(const double* phi, const double* hop, double* out, std::size_t n) {
    apply_hop_batch_scalar(phi, hop, out, n);
}
double discounted_shaping_sum_avx2(const double* phi, std::size_t n, double gamma) {
    return discounted_shaping_sum_scalar(phi, n, gamma);
}
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    return max_abs_diff_scalar(a, b, n);
}

#endif

}  // namespace dopamine::kernels::detail
