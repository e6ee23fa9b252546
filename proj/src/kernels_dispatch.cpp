#include "dopamine/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace dopamine::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool env_disables_simd() {
    const char* v = std::getenv("DOPAMINE_NO_SIMD");
    return v != nullptr && v[0] != '\0' && v[0] != '0';
}

std::atomic<bool> g_force_scalar{false};

Backend detect() {
    if (detail::avx2_compiled_in() && cpu_has_avx2_fma() && !env_disables_simd()) {
        return Backend::Avx2;
    }
    return Backend::Scalar;
}

Backend current() {
    static const Backend detected = detect();
    return g_force_scalar.load(std::memory_order_relaxed) ? Backend::Scalar : detected;
}

}  // namespace

Backend active_backend() { return current(); }

std::string_view backend_name() {
    return current() == Backend::Avx2 ? "avx2" : "scalar";
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    return current() == Backend::Avx2 ? detail::dot_avx2(a.data(), b.data(), n)
                                      : detail::dot_scalar(a.data(), b.data(), n);
}

void apply_hop_batch(std::span<const double> phi, std::span<const double> hop,
                     std::span<double> out) {
    const std::size_t n = phi.size();
    if (current() == Backend::Avx2) {
        detail::apply_hop_batch_avx2(phi.data(), hop.data(), out.data(), n);
    } else {
        detail::apply_hop_batch_scalar(phi.data(), hop.data(), out.data(), n);
    }
}

double discounted_shaping_sum(std::span<const double> phi, double gamma) {
    return current() == Backend::Avx2
               ? detail::discounted_shaping_sum_avx2(phi.data(), phi.size(), gamma)
               : detail::discounted_shaping_sum_scalar(phi.data(), phi.size(), gamma);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    return current() == Backend::Avx2 ? detail::max_abs_diff_avx2(a.data(), b.data(), n)
                                      : detail::max_abs_diff_scalar(a.data(), b.data(), n);
}

}  // namespace dopamine::kernels
