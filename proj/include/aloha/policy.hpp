#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "aloha/env.hpp"
#include "aloha/qnet.hpp"

namespace aloha {

// Uniform policy interface: map a user's observation to a transmit
// probability, and absorb the end-of-slot feedback. Implementations own any
// per-user scratch state (e.g. backoff counters).
class policy_base {
public:
    virtual ~policy_base() = default;
    virtual double transmit_prob(int user, const history& h) const = 0;
    virtual void observe(int /*user*/, std::uint8_t /*own_action*/, std::uint8_t /*feedback*/) {}
    virtual std::string id() const = 0;
};

enum class backoff_variant {
    non_symmetric,  // only users whose own transmission collided back off
    symmetric,      // every user backs off whenever the feedback signals a collision
};

// How the backoff counter recovers. All three rules use only a user's own
// action and the broadcast feedback bit, which is everything a user can
// observe (an idle slot is indistinguishable from another user's success).
// The shipped baselines pair the non-symmetric variant with on_own_success
// (a winner rejoins at probability 1 while losers stay backed off, which
// produces the channel-capture behaviour) and the symmetric variant with
// step_down_on_feedback (the whole population drifts around the efficient
// transmit probability and takes fair turns).
enum class backoff_reset {
    on_feedback_success,    // c <- 0 whenever feedback is 1
    on_own_success,         // c <- 0 only when the user transmitted and feedback is 1
    step_down_on_feedback,  // c <- c - 1 whenever feedback is 1 (multiplicative recovery)
};

struct eb_config {
    backoff_variant variant = backoff_variant::non_symmetric;
    double sigma = 2.0;  // backoff factor, > 1
    int c_max = 16;      // counter cap; bounds the transmit probability below
    backoff_reset reset = backoff_reset::on_feedback_success;

    void validate() const;  // throws std::invalid_argument
};

double eb_transmit_prob(double sigma, int collision_count, int c_max);
int eb_update(const eb_config& cfg, int collision_count, std::uint8_t own_action,
              std::uint8_t feedback);

// Exponential backoff baseline, non-symmetric or symmetric.
class eb_policy : public policy_base {
public:
    eb_policy(const eb_config& cfg, int n_users);

    double transmit_prob(int user, const history& h) const override;
    void observe(int user, std::uint8_t own_action, std::uint8_t feedback) override;
    std::string id() const override;

    int counter(int user) const { return counters_[user]; }

private:
    eb_config cfg_;
    std::vector<int> counters_;
};

// Constant transmit probability; test fixture and analytic oracle.
class fixed_policy : public policy_base {
public:
    explicit fixed_policy(double p);
    double transmit_prob(int, const history&) const override { return p_; }
    std::string id() const override;

private:
    double p_;
};

// Boltzmann distribution over the two actions at temperature parameter beta;
// numerically stabilized, always sums to 1. Throws on non-finite inputs.
std::array<double, 2> softmax_probs(const std::array<double, 2>& q_values, double beta);

// Transmit probabilities at the four observations with an occupied buffer,
// ordered by (prev_action, prev_feedback): (0,0), (0,1), (1,0), (1,1).
struct policy_table {
    std::array<double, 4> transmit_prob{};
    static const std::array<const char*, 4>& labels();
    static const std::array<history, 4>& states();
};

policy_table extract_policy_table(const qnetwork& net, double beta);

// Softmax-over-Q policy backed by a shared value network. Does not own the
// network; the same instance backs every user.
class dqn_policy : public policy_base {
public:
    dqn_policy(const qnetwork& net, double beta);

    double transmit_prob(int user, const history& h) const override;
    std::string id() const override;

    void set_beta(double beta) { beta_ = beta; }
    double beta() const { return beta_; }

private:
    const qnetwork* net_;
    double beta_;
};

// Value description of a policy, from which fresh instances are made per
// episode. Keeps evaluation units self-contained so they can run in parallel.
struct policy_spec {
    enum class kind { dqn, nseb, seb, fixed };
    kind k = kind::nseb;
    double sigma = 2.0;
    backoff_reset nseb_reset = backoff_reset::on_own_success;
    backoff_reset seb_reset = backoff_reset::step_down_on_feedback;
    double fixed_p = 0.0;
    double beta = 20.0;
    const qnetwork* net = nullptr;  // not owned; required for kind::dqn

    std::unique_ptr<policy_base> make(int n_users) const;
    std::string id() const;
};

}  // namespace aloha
