#include "aloha/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aloha {

std::vector<double> train_schedule::default_lambda_grid() {
    std::vector<double> grid;
    // integer construction keeps the values identical to parsed "0.20" etc.
    for (int i = 20; i <= 100; i += 5) grid.push_back(i / 100.0);
    return grid;
}

void train_schedule::validate() const {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(alpha_init > 0) || !(alpha_floor > 0) || alpha_floor > alpha_init)
        throw std::invalid_argument("learning-rate bounds must satisfy 0 < floor <= init");
    if (!(alpha_decay_base > 1))
        throw std::invalid_argument("learning-rate decay base must exceed 1");
    if (!(alpha_settle > 0) || alpha_settle > alpha_transfer || alpha_transfer > alpha_init)
        throw std::invalid_argument(
            "transfer rates must satisfy 0 < settle <= transfer <= init");
    if (settle_tail_slots < 0 || peak_tail_slots < 0)
        throw std::invalid_argument("settling tails must be nonnegative");
    if (!(settle_lambda_min <= peak_lambda_min))
        throw std::invalid_argument("settling band must not start above the peak band");
    if (!(beta_start > 0) || beta_start > beta_max)
        throw std::invalid_argument("temperature bounds must satisfy 0 < start <= max");
    if (alpha_update_interval < 1 || target_sync_interval < 1)
        throw std::invalid_argument("schedule intervals must be positive");
    if (train_slots_per_lambda < 1 || eval_slots < 1)
        throw std::invalid_argument("slot horizons must be positive");
    if (batch_size < 1 || batch_size > replay_capacity)
        throw std::invalid_argument("batch size must fit into the replay buffer");
    if (layers.size() < 2 || layers.front() != 3 || layers.back() != 2)
        throw std::invalid_argument("network must map 3 observation bits to 2 action values");
    if (lambda_grid.empty() || !std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
        throw std::invalid_argument("lambda grid must be nonempty and ascending");
    for (double l : lambda_grid)
        if (!(l > 0)) throw std::invalid_argument("lambda values must be positive");
}

double lr_schedule(long step, const train_schedule& sched) {
    if (step < 0) throw std::invalid_argument("schedule step must be nonnegative");
    const double decayed =
        sched.alpha_init * std::pow(sched.alpha_decay_base, -static_cast<double>(step));
    return std::max(decayed, sched.alpha_floor);
}

double beta_schedule(long slot, long total_slots, const train_schedule& sched) {
    if (slot < 0) throw std::invalid_argument("slot index must be nonnegative");
    if (total_slots < 1 || slot >= total_slots) return sched.beta_max;
    const double frac = static_cast<double>(slot) / static_cast<double>(total_slots);
    return sched.beta_start + (sched.beta_max - sched.beta_start) * frac;
}

trainer_state trainer_state::fresh(const train_schedule& sched, std::uint64_t master_seed) {
    sched.validate();
    rng_stream init_rng(stream_seed(master_seed, "init"));
    qnetwork net = qnetwork::make(sched.layers, init_rng);
    qnetwork target = net;
    return trainer_state{std::move(net), std::move(target),
                         replay_buffer(sched.replay_capacity),
                         rng_stream(stream_seed(master_seed, "replay")), 0, 0};
}

void train_for_lambda(trainer_state& st, double lambda, int n_users,
                      const train_schedule& sched, std::uint64_t master_seed,
                      const trace_sink& trace) {
    sched.validate();
    sim_config cfg;
    cfg.n_users = n_users;
    cfg.total_arrival_rate = lambda;
    cfg.horizon = sched.train_slots_per_lambda;
    cfg.master_seed =
        stream_seed(master_seed, "train-phase", static_cast<std::uint64_t>(st.phases_done));
    cfg.validate();

    simulator sim(cfg);
    dqn_policy pol(st.net, sched.beta_max);
    // Past the initial phase the temperature sits at beta_max and the learning
    // rate at alpha_transfer, except for the settling tail of congested phases.
    const bool first_phase = st.phases_done == 0;
    const long tail = lambda >= sched.peak_lambda_min     ? sched.peak_tail_slots
                      : lambda >= sched.settle_lambda_min ? sched.settle_tail_slots
                                                          : 0;
    const long settle_start = std::max<long>(0, sched.train_slots_per_lambda - tail);

    for (long slot = 0; slot < sched.train_slots_per_lambda; ++slot) {
        const double beta =
            first_phase ? beta_schedule(slot, sched.train_slots_per_lambda, sched)
                        : sched.beta_max;
        const double alpha =
            first_phase ? lr_schedule(slot / sched.alpha_update_interval, sched)
            : slot >= settle_start ? sched.alpha_settle
                                   : sched.alpha_transfer;
        pol.set_beta(beta);

        const slot_record& rec = sim.step(pol);
        double reward = 0;  // global: 1 iff some user delivered this slot
        for (std::uint8_t g : rec.successes) reward += g;

        std::size_t pushed = 0;
        for (int n = 0; n < n_users; ++n) {
            if (!rec.participated[n]) continue;  // forced idle is not a decision
            transition t;
            t.state = rec.state_before[n];
            t.action = rec.actions[n];
            t.reward = reward;
            t.next_state = rec.state_after[n];
            st.replay.push(t);
            ++pushed;
        }

        double loss = std::numeric_limits<double>::quiet_NaN();
        if (st.replay.size() >= sched.batch_size) {
            const auto batch = st.replay.sample(sched.batch_size, st.sample_rng);
            loss = grad_step(st.net, batch, st.target, sched.gamma, alpha);
        }
        if ((slot + 1) % sched.target_sync_interval == 0) sync_target(st.net, st.target);

        ++st.global_slots;
        if (trace) {
            train_trace_row row;
            row.global_slot = st.global_slots - 1;
            row.phase_slot = slot;
            row.lambda = lambda;
            row.alpha = alpha;
            row.beta = beta;
            row.loss = loss;
            row.reward = reward;
            row.transitions = pushed;
            trace(row);
        }
    }
    ++st.phases_done;
}

std::vector<phase_result> transfer_sweep(const train_schedule& sched, int n_users,
                                         std::uint64_t master_seed,
                                         const trace_sink& trace) {
    sched.validate();
    trainer_state st = trainer_state::fresh(sched, master_seed);
    std::vector<phase_result> out;
    out.reserve(sched.lambda_grid.size());
    for (double lambda : sched.lambda_grid) {
        train_for_lambda(st, lambda, n_users, sched, master_seed, trace);
        phase_result r;
        r.lambda = lambda;
        r.checkpoint = st.net;
        r.table = extract_policy_table(st.net, sched.beta_max);
        out.push_back(std::move(r));
    }
    return out;
}

eval_result evaluate(const policy_spec& pol, double lambda, int n_users, long eval_slots,
                     const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("evaluate: empty seed list");
    eval_result res;
    res.per_seed.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        sim_config cfg;
        cfg.n_users = n_users;
        cfg.total_arrival_rate = lambda;
        cfg.horizon = eval_slots;
        cfg.master_seed = seed;
        cfg.validate();
        const auto instance = pol.make(n_users);
        res.per_seed.push_back(run_episode(*instance, cfg));
    }
    for (const metrics_log& log : res.per_seed) {
        res.mean_throughput += throughput(log);
        res.mean_system_aop += average_aop(log).system;
    }
    res.mean_throughput /= static_cast<double>(res.per_seed.size());
    res.mean_system_aop /= static_cast<double>(res.per_seed.size());
    return res;
}

}  // namespace aloha
