#pragma once

#include <cstdint>
#include <vector>

#include "aloha/metrics.hpp"
#include "aloha/policy.hpp"

namespace aloha {

// One independent evaluation episode: a policy at one arrival rate under one
// seed. A unit carries everything it needs, so a batch of units can run in
// any order.
struct sweep_unit {
    policy_spec policy;
    double lambda = 0;
    int n_users = 10;
    long slots = 0;
    std::uint64_t seed = 0;
};

enum class exec_mode { serial, openmp };

metrics_log run_unit(const sweep_unit& u);

// Runs every unit and returns the logs in unit order. The OpenMP path hands
// units to worker threads; each unit builds its own policy instance and RNG
// streams and writes into a preassigned result slot, so both paths return
// bitwise-identical logs.
std::vector<metrics_log> run_sweep(const std::vector<sweep_unit>& units, exec_mode mode);

}  // namespace aloha
