#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aloha/env.hpp"
#include "aloha/rng.hpp"

namespace aloha {

// One replay sample, pooled across users: observation, action taken, global
// reward, observation at the start of the following slot.
struct transition {
    history state;
    std::uint8_t action = 0;
    double reward = 0;  // 0 or 1
    history next_state;
};

// Small fully connected value network: rectifier hidden layers, linear output
// pair (Q(a=0|s), Q(a=1|s)). Weight matrices are row-major [out x in].
// Layer sizes are kept generic so tests can use hand-sized nets; experiments
// use 3-30-20-2.
struct qnetwork {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t update_count = 0;  // bumped by every gradient step

    static qnetwork make(const std::vector<int>& sizes, rng_stream& init_rng);

    std::vector<double> forward_vec(const std::vector<double>& input) const;
    std::array<double, 2> forward(const history& s) const;

    std::size_t parameter_count() const;
    bool all_finite() const;
    bool same_shape(const qnetwork& other) const;
    bool same_parameters(const qnetwork& other) const;  // bitwise
};

inline std::vector<double> encode_state(const history& s) {
    return {static_cast<double>(s.prev_action), static_cast<double>(s.prev_feedback),
            static_cast<double>(s.buffer)};
}

// Mean squared Bellman error over a batch; bootstrap targets come from the
// target network and carry no gradient. The task is continuing, so there is
// no terminal masking.
double q_loss(const std::vector<transition>& batch, const qnetwork& net,
              const qnetwork& target, double gamma);

struct gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

gradients q_loss_gradients(const std::vector<transition>& batch, const qnetwork& net,
                           const qnetwork& target, double gamma);

// One plain gradient-descent step on the batch loss. Returns the pre-update
// loss. Throws std::runtime_error if parameters stop being finite, which
// signals divergence.
double grad_step(qnetwork& net, const std::vector<transition>& batch,
                 const qnetwork& target, double gamma, double alpha);

// Copies policy parameters into the target network. Throws on architecture
// mismatch.
void sync_target(const qnetwork& net, qnetwork& target);

// Fixed-capacity FIFO ring of transitions with uniform sampling.
class replay_buffer {
public:
    explicit replay_buffer(std::size_t capacity);

    void push(const transition& t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return ring_.size(); }

    // m uniform draws with replacement; throws if fewer than m stored
    std::vector<transition> sample(std::size_t m, rng_stream& rng) const;

    // i-th oldest stored transition
    const transition& at(std::size_t i) const;

private:
    std::vector<transition> ring_;
    std::size_t head_ = 0;  // next write position
    std::size_t size_ = 0;
};

// Checkpoint format: JSON with layer sizes and row-major weight/bias arrays.
// Values round-trip exactly.
std::string checkpoint_string(const qnetwork& net);
qnetwork qnetwork_from_string(const std::string& text);
void save_checkpoint(const qnetwork& net, const std::filesystem::path& path);
qnetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace aloha
