#include "aloha/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace aloha {

void eb_config::validate() const {
    if (sigma <= 1.0) throw std::invalid_argument("backoff factor sigma must exceed 1");
    if (c_max < 0) throw std::invalid_argument("c_max must be nonnegative");
}

double eb_transmit_prob(double sigma, int collision_count, int c_max) {
    return std::pow(sigma, -static_cast<double>(std::min(collision_count, c_max)));
}

int eb_update(const eb_config& cfg, int collision_count, std::uint8_t own_action,
              std::uint8_t feedback) {
    if (feedback == 0) {
        const bool backs_off =
            cfg.variant == backoff_variant::symmetric || own_action == 1;
        return backs_off ? std::min(collision_count + 1, cfg.c_max) : collision_count;
    }
    switch (cfg.reset) {
        case backoff_reset::on_feedback_success:
            return 0;
        case backoff_reset::on_own_success:
            return own_action == 1 ? 0 : collision_count;
        case backoff_reset::step_down_on_feedback:
            return std::max(collision_count - 1, 0);
    }
    return collision_count;
}

eb_policy::eb_policy(const eb_config& cfg, int n_users)
    : cfg_(cfg), counters_(n_users, 0) {
    cfg_.validate();
}

double eb_policy::transmit_prob(int user, const history&) const {
    return eb_transmit_prob(cfg_.sigma, counters_[user], cfg_.c_max);
}

void eb_policy::observe(int user, std::uint8_t own_action, std::uint8_t feedback) {
    counters_[user] = eb_update(cfg_, counters_[user], own_action, feedback);
}

std::string eb_policy::id() const {
    const char* name = cfg_.variant == backoff_variant::symmetric ? "seb" : "nseb";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%g", name, cfg_.sigma);
    return buf;
}

fixed_policy::fixed_policy(double p) : p_(p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("transmit probability out of [0,1]");
}

std::string fixed_policy::id() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fixed-%g", p_);
    return buf;
}

std::array<double, 2> softmax_probs(const std::array<double, 2>& q_values, double beta) {
    if (!std::isfinite(q_values[0]) || !std::isfinite(q_values[1]))
        throw std::invalid_argument("softmax_probs: non-finite Q-values");
    if (!(beta > 0)) throw std::invalid_argument("softmax_probs: beta must be positive");
    const double top = std::max(q_values[0], q_values[1]);
    const double e0 = std::exp(beta * (q_values[0] - top));
    const double e1 = std::exp(beta * (q_values[1] - top));
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

const std::array<const char*, 4>& policy_table::labels() {
    static const std::array<const char*, 4> v = {"a0_f0_b1", "a0_f1_b1", "a1_f0_b1",
                                                 "a1_f1_b1"};
    return v;
}

const std::array<history, 4>& policy_table::states() {
    static const std::array<history, 4> v = {history{0, 0, 1}, history{0, 1, 1},
                                             history{1, 0, 1}, history{1, 1, 1}};
    return v;
}

policy_table extract_policy_table(const qnetwork& net, double beta) {
    policy_table table;
    const auto& states = policy_table::states();
    for (std::size_t i = 0; i < states.size(); ++i)
        table.transmit_prob[i] = softmax_probs(net.forward(states[i]), beta)[1];
    return table;
}

dqn_policy::dqn_policy(const qnetwork& net, double beta) : net_(&net), beta_(beta) {}

double dqn_policy::transmit_prob(int, const history& h) const {
    return softmax_probs(net_->forward(h), beta_)[1];
}

std::string dqn_policy::id() const { return "dqn"; }

std::unique_ptr<policy_base> policy_spec::make(int n_users) const {
    switch (k) {
        case kind::dqn:
            if (net == nullptr) throw std::invalid_argument("dqn policy needs a network");
            return std::make_unique<dqn_policy>(*net, beta);
        case kind::nseb:
            return std::make_unique<eb_policy>(
                eb_config{backoff_variant::non_symmetric, sigma, 16, nseb_reset}, n_users);
        case kind::seb:
            return std::make_unique<eb_policy>(
                eb_config{backoff_variant::symmetric, sigma, 16, seb_reset}, n_users);
        case kind::fixed:
            return std::make_unique<fixed_policy>(fixed_p);
    }
    throw std::logic_error("unknown policy kind");
}

std::string policy_spec::id() const {
    switch (k) {
        case kind::dqn:
            return "dqn";
        case kind::nseb: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "nseb-%g", sigma);
            return buf;
        }
        case kind::seb: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "seb-%g", sigma);
            return buf;
        }
        case kind::fixed: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "fixed-%g", fixed_p);
            return buf;
        }
    }
    return "unknown";
}

}  // namespace aloha
