#include "aloha/env.hpp"

#include <stdexcept>
#include <string>

#include "aloha/metrics.hpp"
#include "aloha/policy.hpp"

namespace aloha {

void sim_config::validate() const {
    if (n_users < 1) throw std::invalid_argument("n_users must be at least 1");
    if (total_arrival_rate < 0) throw std::invalid_argument("total_arrival_rate must be nonnegative");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

history history::from_index(int i) {
    if (i < 0 || i > 7) throw std::invalid_argument("history index out of range");
    return history{static_cast<std::uint8_t>((i >> 2) & 1),
                   static_cast<std::uint8_t>((i >> 1) & 1),
                   static_cast<std::uint8_t>(i & 1)};
}

std::pair<std::uint8_t, int> apply_arrivals(std::uint8_t buffer, int arrivals) {
    const int held = buffer + arrivals;
    const std::uint8_t updated = held > 0 ? 1 : 0;
    return {updated, held > 1 ? held - 1 : 0};
}

std::uint8_t resolve_slot(const std::vector<std::uint8_t>& actions,
                          std::vector<std::uint8_t>& successes) {
    int transmitters = 0;
    for (std::uint8_t a : actions) transmitters += a;
    const std::uint8_t feedback = transmitters >= 2 ? 0 : 1;
    successes.resize(actions.size());
    for (std::size_t n = 0; n < actions.size(); ++n)
        successes[n] = (actions[n] == 1 && feedback == 1) ? 1 : 0;
    return feedback;
}

void advance_user(user_state& state, std::uint8_t action, std::uint8_t feedback) {
    if (action == 1 && state.intermediate_buffer == 0)
        throw std::logic_error("policy transmitted from an empty buffer");
    const std::uint8_t delivered = (action == 1 && feedback == 1) ? 1 : 0;
    const std::uint8_t next_buffer = state.intermediate_buffer - delivered;
    state.hist = history{action, feedback, next_buffer};
    state.aop = update_aop(state.aop, next_buffer);
    state.intermediate_buffer = next_buffer;
}

std::uint8_t draw_action(const policy_base& pol, int user, const user_state& state,
                         rng_stream& rng) {
    if (state.intermediate_buffer == 0) return 0;
    return rng.bernoulli(pol.transmit_prob(user, state.hist)) ? 1 : 0;
}

simulator::simulator(const sim_config& cfg) : cfg_(cfg) {
    cfg_.validate();
    users_.resize(cfg_.n_users);
    arrival_rng_.reserve(cfg_.n_users);
    action_rng_.reserve(cfg_.n_users);
    for (int n = 0; n < cfg_.n_users; ++n) {
        arrival_rng_.emplace_back(stream_seed(cfg_.master_seed, "arrivals", n));
        action_rng_.emplace_back(stream_seed(cfg_.master_seed, "actions", n));
    }
    const std::size_t count = static_cast<std::size_t>(cfg_.n_users);
    rec_.actions.resize(count);
    rec_.successes.resize(count);
    rec_.arrivals.resize(count);
    rec_.discarded.resize(count);
    rec_.participated.resize(count);
    rec_.state_before.resize(count);
    rec_.state_after.resize(count);
    rec_.aop_before.resize(count);
}

const slot_record& simulator::step(policy_base& pol) {
    const double rate = cfg_.per_user_rate();
    for (int n = 0; n < cfg_.n_users; ++n) {
        user_state& u = users_[n];
        if (cfg_.saturated) {
            rec_.arrivals[n] = 0;
            rec_.discarded[n] = 0;
            u.intermediate_buffer = 1;
        } else {
            const int arrived = arrival_rng_[n].poisson(rate);
            auto [updated, discarded] = apply_arrivals(u.hist.buffer, arrived);
            rec_.arrivals[n] = arrived;
            rec_.discarded[n] = discarded;
            u.intermediate_buffer = updated;
        }
        rec_.aop_before[n] = u.aop;
        rec_.state_before[n] = u.hist;
        rec_.participated[n] = u.intermediate_buffer;
        rec_.actions[n] = draw_action(pol, n, u, action_rng_[n]);
    }

    rec_.feedback = resolve_slot(rec_.actions, rec_.successes);

    for (int n = 0; n < cfg_.n_users; ++n)
        pol.observe(n, rec_.actions[n], rec_.feedback);

    for (int n = 0; n < cfg_.n_users; ++n) {
        advance_user(users_[n], rec_.actions[n], rec_.feedback);
        rec_.state_after[n] = users_[n].hist;
    }
    ++slot_;
    return rec_;
}

metrics_log run_episode(policy_base& pol, const sim_config& cfg,
                        const slot_observer& observer) {
    simulator sim(cfg);
    metrics_log log(cfg.n_users);
    log.horizon = cfg.horizon;
    log.total_arrival_rate = cfg.total_arrival_rate;
    log.seed = cfg.master_seed;
    log.policy_id = pol.id();
    for (long k = 0; k < cfg.horizon; ++k) {
        const slot_record& rec = sim.step(pol);
        log.record_slot(rec);
        if (observer) observer(sim, rec);
    }
    return log;
}

}  // namespace aloha
