// Micro-benchmark for the batch kernels: scalar reference vs the dispatched
// backend. Not a test; a sanity check that the vector paths actually pay for
// themselves on this machine.
//
//   ./bench_kernels [n] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "dopamine/kernels.hpp"
#include "dopamine/rng.hpp"

using namespace dopamine;
namespace kd = kernels::detail;

namespace {

volatile double g_sink = 0.0;

template <typename Fn>
double time_op(Fn&& fn, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) g_sink = g_sink + fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
           reps;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 400;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 20000;

    rng::Rng gen(7);
    std::vector<double> a(n), b(n), phi(n), hop(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = gen.uniform(-1.0, 1.0);
        b[i] = gen.uniform(-1.0, 1.0);
        phi[i] = gen.uniform();
        hop[i] = gen.uniform(-1.0, 1.0);
    }

    std::printf("n = %zu, reps = %d, dispatched backend: %s\n", n, reps,
                std::string(kernels::backend_name()).c_str());

    struct Row {
        const char* name;
        double scalar_s;
        double simd_s;
    };
    std::vector<Row> rows;

    rows.push_back({"dot",
                    time_op([&] { return kd::dot_scalar(a.data(), b.data(), n); }, reps),
                    time_op([&] { return kd::dot_avx2(a.data(), b.data(), n); }, reps)});
    rows.push_back({"apply_hop_batch",
                    time_op(
                        [&] {
                            kd::apply_hop_batch_scalar(phi.data(), hop.data(), out.data(), n);
                            return out[0];
                        },
                        reps),
                    time_op(
                        [&] {
                            kd::apply_hop_batch_avx2(phi.data(), hop.data(), out.data(), n);
                            return out[0];
                        },
                        reps)});
    rows.push_back(
        {"discounted_shaping_sum",
         time_op([&] { return kd::discounted_shaping_sum_scalar(phi.data(), n, 0.98); }, reps),
         time_op([&] { return kd::discounted_shaping_sum_avx2(phi.data(), n, 0.98); }, reps)});
    rows.push_back({"max_abs_diff",
                    time_op([&] { return kd::max_abs_diff_scalar(a.data(), b.data(), n); }, reps),
                    time_op([&] { return kd::max_abs_diff_avx2(a.data(), b.data(), n); }, reps)});

    std::printf("%-24s %12s %12s %8s\n", "kernel", "scalar (ns)", "vector (ns)", "speedup");
    for (const auto& r : rows) {
        std::printf("%-24s %12.1f %12.1f %7.2fx\n", r.name, r.scalar_s * 1e9, r.simd_s * 1e9,
                    r.scalar_s / r.simd_s);
    }
    return 0;
}
