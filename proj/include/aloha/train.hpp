#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aloha/env.hpp"
#include "aloha/metrics.hpp"
#include "aloha/policy.hpp"
#include "aloha/qnet.hpp"

namespace aloha {

// Hyperparameters of the training sweep. Defaults reproduce the reference
// experiment; tests shrink the horizons.
struct train_schedule {
    double gamma = 0.95;
    double alpha_init = 0.01;
    double alpha_decay_base = 5.0;
    double alpha_floor = 1e-6;
    long alpha_update_interval = 2000;  // slots per learning-rate step
    // Later phases continue at the rate the first-phase decay ended on rather
    // than freezing at the floor, which would stop adaptation entirely. In
    // congested phases (lambda >= settle_lambda_min) the last settle_tail
    // slots drop to alpha_settle so the phase snapshot is taken from a damped
    // network instead of mid-oscillation; the peak phase keeps only a short
    // tail so its adaptation stays fresh.
    double alpha_transfer = 4e-4;
    double alpha_settle = 5e-5;
    long settle_tail_slots = 2000;
    long peak_tail_slots = 500;
    double settle_lambda_min = 0.65;
    double peak_lambda_min = 0.975;
    double beta_start = 1.0;
    double beta_max = 20.0;
    long train_slots_per_lambda = 5000;
    long target_sync_interval = 1000;
    long eval_slots = 30000;
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 32;
    std::vector<int> layers = {3, 30, 20, 2};
    std::vector<double> lambda_grid = default_lambda_grid();

    // 0.20, 0.25, ... 1.00
    static std::vector<double> default_lambda_grid();
    void validate() const;  // throws std::invalid_argument
};

// Learning rate at a given schedule step: max(alpha_init * base^(-step), floor).
double lr_schedule(long step, const train_schedule& sched = {});

// Temperature ramp: linear from beta_start at slot 0 to beta_max at
// total_slots; clamped to beta_max past the end.
double beta_schedule(long slot, long total_slots, const train_schedule& sched = {});

// Everything that carries over between lambda phases: the shared network, its
// target copy, the pooled replay buffer, and the mini-batch sampling stream.
struct trainer_state {
    qnetwork net;
    qnetwork target;
    replay_buffer replay;
    rng_stream sample_rng;
    long phases_done = 0;
    long global_slots = 0;

    static trainer_state fresh(const train_schedule& sched, std::uint64_t master_seed);
};

// One trace row per training slot.
struct train_trace_row {
    long global_slot = 0;
    long phase_slot = 0;
    double lambda = 0;
    double alpha = 0;
    double beta = 0;
    double loss = 0;  // NaN until the replay buffer can fill a batch
    double reward = 0;
    std::size_t transitions = 0;  // pushed this slot
};

using trace_sink = std::function<void(const train_trace_row&)>;

// Runs train_slots_per_lambda slots at the given arrival rate. Every
// buffer-holding user acts through the shared network; each contributes one
// transition carrying the global reward. One gradient step per slot once the
// replay buffer holds a full batch; the target network is refreshed every
// target_sync_interval slots. The learning rate follows lr_schedule during
// the first phase; later phases run at alpha_transfer, finishing with a
// settling tail at alpha_settle when the arrival rate is congested (see
// train_schedule). The temperature ramps over the first phase and stays at
// beta_max afterwards.
void train_for_lambda(trainer_state& st, double lambda, int n_users,
                      const train_schedule& sched, std::uint64_t master_seed,
                      const trace_sink& trace = {});

// Snapshot taken after each phase of the sweep.
struct phase_result {
    double lambda = 0;
    qnetwork checkpoint;
    policy_table table;
};

// Sequential transfer learning over the lambda grid: each phase starts from
// the previous phase's weights, target and replay contents.
std::vector<phase_result> transfer_sweep(const train_schedule& sched, int n_users,
                                         std::uint64_t master_seed,
                                         const trace_sink& trace = {});

// Frozen-policy evaluation: one independent episode per seed.
struct eval_result {
    std::vector<metrics_log> per_seed;
    double mean_throughput = 0;
    double mean_system_aop = 0;
};

eval_result evaluate(const policy_spec& pol, double lambda, int n_users, long eval_slots,
                     const std::vector<std::uint64_t>& seeds);

}  // namespace aloha
