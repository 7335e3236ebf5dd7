#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aloha/rng.hpp"

namespace aloha {

class policy_base;
struct metrics_log;

// Experiment parameters for one episode.
struct sim_config {
    int n_users = 10;
    double total_arrival_rate = 0.0;  // packets per slot, summed over users
    long horizon = 0;                 // number of slots
    std::uint64_t master_seed = 0;
    // Test fixture: every user's buffer is refilled each slot and no arrivals
    // are drawn. Not used by any experiment mode.
    bool saturated = false;

    double per_user_rate() const { return total_arrival_rate / n_users; }
    void validate() const;  // throws std::invalid_argument
};

// Per-user observation tuple: previous action, previous feedback, and the
// buffer state at the start of the current slot. This is the only input a
// policy sees.
struct history {
    std::uint8_t prev_action = 0;
    std::uint8_t prev_feedback = 1;
    std::uint8_t buffer = 0;

    bool operator==(const history&) const = default;

    // bit-packed index in [0, 8)
    int index() const { return (prev_action << 2) | (prev_feedback << 1) | buffer; }
    static history from_index(int i);
};

struct user_state {
    history hist;                        // observation at the start of the slot
    std::uint8_t intermediate_buffer = 0;  // buffer after arrivals, before resolution
    std::uint32_t aop = 0;               // age of the buffered packet, in slots
};

// Everything that happened in one slot. The simulator reuses one instance, so
// references stay valid only until the next step().
struct slot_record {
    std::uint8_t feedback = 1;
    std::vector<std::uint8_t> actions;
    std::vector<std::uint8_t> successes;
    std::vector<int> arrivals;
    std::vector<int> discarded;
    std::vector<std::uint8_t> participated;  // had a packet available at decision time
    std::vector<history> state_before;       // observations the actions were drawn from
    std::vector<history> state_after;        // observations entering the next slot
    std::vector<std::uint32_t> aop_before;   // packet ages at the start of the slot
};

// Buffer update on packet arrival: the single-packet buffer clamps, overflow
// is discarded. Returns (new buffer, discarded count).
std::pair<std::uint8_t, int> apply_arrivals(std::uint8_t buffer, int arrivals);

// Receiver side of a slot: feedback is 0 iff two or more users transmitted,
// 1 otherwise (idle slots are indistinguishable from successes). A user
// succeeds iff it transmitted and feedback is 1.
std::uint8_t resolve_slot(const std::vector<std::uint8_t>& actions,
                          std::vector<std::uint8_t>& successes);

// End-of-slot update for one user: delivered packets leave the buffer, the
// observation tuple rolls forward, the packet age advances. Throws
// std::logic_error if a policy transmitted from an empty buffer.
void advance_user(user_state& state, std::uint8_t action, std::uint8_t feedback);

// Discrete-time slotted random-access channel with N users, single-packet
// buffers, Poisson arrivals and broadcast binary feedback.
class simulator {
public:
    explicit simulator(const sim_config& cfg);

    // Runs one slot: arrivals, action draws (forced idle on an empty buffer),
    // resolution, feedback broadcast, buffer/history/age updates.
    const slot_record& step(policy_base& pol);

    const std::vector<user_state>& users() const { return users_; }
    const sim_config& config() const { return cfg_; }
    long slots_done() const { return slot_; }

private:
    sim_config cfg_;
    std::vector<user_state> users_;
    std::vector<rng_stream> arrival_rng_;
    std::vector<rng_stream> action_rng_;
    slot_record rec_;
    long slot_ = 0;
};

// Draws one action: a Bernoulli trial at the policy's transmit probability for
// the user's current observation, bypassed (always 0) when no packet is
// available to send.
std::uint8_t draw_action(const policy_base& pol, int user, const user_state& state,
                         rng_stream& rng);

using slot_observer = std::function<void(const simulator&, const slot_record&)>;

// Runs a full episode of cfg.horizon slots and returns the aggregated metrics.
// The observer, when given, sees every slot record; tests use it to capture
// raw traces.
metrics_log run_episode(policy_base& pol, const sim_config& cfg,
                        const slot_observer& observer = {});

}  // namespace aloha
