// Times the OpenMP evaluation path against the serial reference on the same
// batch of episodes and verifies the two produce identical logs.
#include <chrono>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"

#include "aloha/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double run_timed(const std::vector<aloha::sweep_unit>& units, aloha::exec_mode mode,
                 std::vector<aloha::metrics_log>& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = aloha::run_sweep(units, mode);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark: serial vs OpenMP evaluation sweep"};
    long slots = 20000;
    int seeds = 8;
    int users = 10;
    app.add_option("--slots", slots, "Slots per episode")->capture_default_str();
    app.add_option("--seeds", seeds, "Episodes per (policy, lambda) cell")
        ->capture_default_str();
    app.add_option("--users", users, "Number of users")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::vector<aloha::sweep_unit> units;
    for (double sigma : {1.35, 2.0})
        for (auto variant : {aloha::policy_spec::kind::nseb, aloha::policy_spec::kind::seb})
            for (double lambda : {0.4, 0.8})
                for (int s = 1; s <= seeds; ++s) {
                    aloha::sweep_unit u;
                    u.policy.k = variant;
                    u.policy.sigma = sigma;
                    u.lambda = lambda;
                    u.n_users = users;
                    u.slots = slots;
                    u.seed = static_cast<std::uint64_t>(s);
                    units.push_back(u);
                }

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("units: %zu   slots/unit: %ld   users: %d   threads: %d\n", units.size(),
                slots, users, threads);

    std::vector<aloha::metrics_log> serial_logs, parallel_logs;
    const double t_serial = run_timed(units, aloha::exec_mode::serial, serial_logs);
    const double t_openmp = run_timed(units, aloha::exec_mode::openmp, parallel_logs);

    const bool identical = serial_logs == parallel_logs;
    std::printf("serial:  %8.3f s\n", t_serial);
    std::printf("openmp:  %8.3f s   speedup: %.2fx\n", t_openmp,
                t_openmp > 0 ? t_serial / t_openmp : 0.0);
    std::printf("results: %s\n", identical ? "identical" : "MISMATCH");
    return identical ? 0 : 1;
}
