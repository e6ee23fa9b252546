#include "dopamine/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dopamine::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void apply_hop_batch_scalar(const double* phi, const double* hop, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double p = phi[i];
        const double h = hop[i];
        // Same branch arithmetic as the typed incremental-delta path, so
        // phi' - phi equals the delta bit-for-bit.
        const double next = (h >= 0.0) ? p + h * (1.0 - p) : p + p * h;
        out[i] = std::clamp(next, 0.0, 1.0);
    }
}

double discounted_shaping_sum_scalar(const double* phi, std::size_t n, double gamma) {
    if (n < 2) return 0.0;
    double acc = 0.0;
    double disc = 1.0;  // gamma^t
    for (std::size_t t = 0; t + 1 < n; ++t) {
        acc += disc * (gamma * phi[t + 1] - phi[t]);
        disc *= gamma;
    }
    return acc;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace dopamine::kernels::detail
