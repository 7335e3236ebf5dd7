#include "aloha/sweep.hpp"

#include <exception>
#include <stdexcept>
#include <string>

#include "aloha/env.hpp"

namespace aloha {

namespace {

sim_config unit_config(const sweep_unit& u) {
    sim_config cfg;
    cfg.n_users = u.n_users;
    cfg.total_arrival_rate = u.lambda;
    cfg.horizon = u.slots;
    cfg.master_seed = u.seed;
    return cfg;
}

}  // namespace

metrics_log run_unit(const sweep_unit& u) {
    const sim_config cfg = unit_config(u);
    cfg.validate();
    const auto pol = u.policy.make(u.n_users);
    return run_episode(*pol, cfg);
}

std::vector<metrics_log> run_sweep(const std::vector<sweep_unit>& units, exec_mode mode) {
    // Validate up front, on one thread, so the parallel loop below cannot
    // throw for malformed input.
    for (std::size_t i = 0; i < units.size(); ++i) {
        try {
            unit_config(units[i]).validate();
            (void)units[i].policy.make(units[i].n_users);
        } catch (const std::exception& e) {
            throw std::invalid_argument("sweep unit " + std::to_string(i) + ": " + e.what());
        }
    }

    std::vector<metrics_log> out(units.size());
    if (mode == exec_mode::serial) {
        for (std::size_t i = 0; i < units.size(); ++i) out[i] = run_unit(units[i]);
        return out;
    }

    std::exception_ptr failure;
    const long n = static_cast<long>(units.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = run_unit(units[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace aloha
