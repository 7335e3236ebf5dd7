#include "aloha/qnet.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace aloha {

qnetwork qnetwork::make(const std::vector<int>& sizes, rng_stream& init_rng) {
    if (sizes.size() < 2) throw std::invalid_argument("network needs at least two layers");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");

    qnetwork net;
    net.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        // uniform with stddev 1/sqrt(fan_in); biases start at zero
        const double bound = std::sqrt(3.0 / fan_in);
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& x : w) x = (2.0 * init_rng.next_double() - 1.0) * bound;
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

std::vector<double> qnetwork::forward_vec(const std::vector<double>& input) const {
    if (input.size() != static_cast<std::size_t>(layer_sizes.front()))
        throw std::invalid_argument("forward: input size mismatch");
    std::vector<double> act = input;
    std::vector<double> next;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        next.assign(out, 0.0);
        const bool hidden = l + 1 < weights.size();
        for (int i = 0; i < out; ++i) {
            double z = biases[l][i];
            const double* row = &weights[l][static_cast<std::size_t>(i) * in];
            for (int j = 0; j < in; ++j) z += row[j] * act[j];
            next[i] = hidden && z < 0 ? 0.0 : z;  // rectifier on hidden layers
        }
        act.swap(next);
    }
    return act;
}

std::array<double, 2> qnetwork::forward(const history& s) const {
    const auto out = forward_vec(encode_state(s));
    if (out.size() != 2) throw std::logic_error("forward: output layer is not a pair");
    return {out[0], out[1]};
}

std::size_t qnetwork::parameter_count() const {
    std::size_t count = 0;
    for (const auto& w : weights) count += w.size();
    for (const auto& b : biases) count += b.size();
    return count;
}

bool qnetwork::all_finite() const {
    for (const auto& layer : weights)
        for (double v : layer)
            if (!std::isfinite(v)) return false;
    for (const auto& layer : biases)
        for (double v : layer)
            if (!std::isfinite(v)) return false;
    return true;
}

bool qnetwork::same_shape(const qnetwork& other) const {
    return layer_sizes == other.layer_sizes;
}

bool qnetwork::same_parameters(const qnetwork& other) const {
    return same_shape(other) && weights == other.weights && biases == other.biases;
}

namespace {

struct forward_trace {
    // activations[0] is the input; activations.back() is the output layer
    std::vector<std::vector<double>> activations;
    // pre-activation values per non-input layer, needed for rectifier gating
    std::vector<std::vector<double>> pre;
};

forward_trace traced_forward(const qnetwork& net, const std::vector<double>& input) {
    forward_trace t;
    t.activations.push_back(input);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const bool hidden = l + 1 < net.weights.size();
        std::vector<double> z(out), a(out);
        const auto& prev = t.activations.back();
        for (int i = 0; i < out; ++i) {
            double v = net.biases[l][i];
            const double* row = &net.weights[l][static_cast<std::size_t>(i) * in];
            for (int j = 0; j < in; ++j) v += row[j] * prev[j];
            z[i] = v;
            a[i] = hidden && v < 0 ? 0.0 : v;
        }
        t.pre.push_back(std::move(z));
        t.activations.push_back(std::move(a));
    }
    return t;
}

double bootstrap_target(const transition& t, const qnetwork& target, double gamma) {
    const auto q_next = target.forward(t.next_state);
    return t.reward + gamma * std::max(q_next[0], q_next[1]);
}

void check_batch(const std::vector<transition>& batch, double gamma) {
    if (batch.empty()) throw std::invalid_argument("empty transition batch");
    // gamma = 0 is legal and degenerates into reward regression, which the
    // tabular sanity tests rely on
    if (!(gamma >= 0.0) || gamma > 1.0)
        throw std::invalid_argument("gamma must lie in [0, 1]");
}

}  // namespace

double q_loss(const std::vector<transition>& batch, const qnetwork& net,
              const qnetwork& target, double gamma) {
    check_batch(batch, gamma);
    double total = 0;
    for (const transition& t : batch) {
        const double residual =
            bootstrap_target(t, target, gamma) - net.forward(t.state)[t.action];
        total += residual * residual;
    }
    return total / static_cast<double>(batch.size());
}

gradients q_loss_gradients(const std::vector<transition>& batch, const qnetwork& net,
                           const qnetwork& target, double gamma) {
    check_batch(batch, gamma);
    gradients g;
    g.weights.reserve(net.weights.size());
    g.biases.reserve(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights.emplace_back(net.weights[l].size(), 0.0);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }

    const double scale = 2.0 / static_cast<double>(batch.size());
    for (const transition& t : batch) {
        const auto trace = traced_forward(net, encode_state(t.state));
        const double q_taken = trace.activations.back()[t.action];
        const double residual = bootstrap_target(t, target, gamma) - q_taken;

        // delta for the output layer: loss only touches the taken action
        std::vector<double> delta(net.layer_sizes.back(), 0.0);
        delta[t.action] = -scale * residual;

        for (std::size_t l = net.weights.size(); l-- > 0;) {
            const int in = net.layer_sizes[l];
            const int out = net.layer_sizes[l + 1];
            const auto& prev_act = trace.activations[l];
            for (int i = 0; i < out; ++i) {
                if (delta[i] == 0.0) continue;
                g.biases[l][i] += delta[i];
                double* grow = &g.weights[l][static_cast<std::size_t>(i) * in];
                for (int j = 0; j < in; ++j) grow[j] += delta[i] * prev_act[j];
            }
            if (l == 0) break;
            std::vector<double> prev_delta(in, 0.0);
            for (int j = 0; j < in; ++j) {
                if (trace.pre[l - 1][j] < 0) continue;  // rectifier gate closed
                double acc = 0;
                for (int i = 0; i < out; ++i)
                    acc += delta[i] * net.weights[l][static_cast<std::size_t>(i) * in + j];
                prev_delta[j] = acc;
            }
            delta.swap(prev_delta);
        }
    }
    return g;
}

double grad_step(qnetwork& net, const std::vector<transition>& batch,
                 const qnetwork& target, double gamma, double alpha) {
    if (!(alpha >= 0)) throw std::invalid_argument("alpha must be nonnegative");
    const double loss = q_loss(batch, net, target, gamma);
    const gradients g = q_loss_gradients(batch, net, target, gamma);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i)
            net.weights[l][i] -= alpha * g.weights[l][i];
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            net.biases[l][i] -= alpha * g.biases[l][i];
    }
    ++net.update_count;
    if (!net.all_finite())
        throw std::runtime_error("gradient step produced non-finite parameters");
    return loss;
}

void sync_target(const qnetwork& net, qnetwork& target) {
    if (!net.same_shape(target))
        throw std::invalid_argument("sync_target: architecture mismatch");
    target.weights = net.weights;
    target.biases = net.biases;
    target.update_count = net.update_count;
}

replay_buffer::replay_buffer(std::size_t capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    ring_.resize(capacity);
}

void replay_buffer::push(const transition& t) {
    ring_[head_] = t;
    head_ = (head_ + 1) % ring_.size();
    if (size_ < ring_.size()) ++size_;
}

std::vector<transition> replay_buffer::sample(std::size_t m, rng_stream& rng) const {
    if (m > size_) throw std::invalid_argument("replay sample larger than stored data");
    std::vector<transition> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx =
            static_cast<std::size_t>(rng.next_double() * static_cast<double>(size_));
        out.push_back(at(idx < size_ ? idx : size_ - 1));
    }
    return out;
}

const transition& replay_buffer::at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("replay index");
    const std::size_t oldest = size_ == ring_.size() ? head_ : 0;
    return ring_[(oldest + i) % ring_.size()];
}

std::string checkpoint_string(const qnetwork& net) {
    nlohmann::json doc;
    doc["layer_sizes"] = net.layer_sizes;
    doc["weights"] = net.weights;
    doc["biases"] = net.biases;
    doc["update_count"] = net.update_count;
    return doc.dump(2) + "\n";
}

qnetwork qnetwork_from_string(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    qnetwork net;
    net.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
    net.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    net.biases = doc.at("biases").get<std::vector<std::vector<double>>>();
    net.update_count = doc.value("update_count", std::uint64_t{0});

    if (net.layer_sizes.size() < 2 || net.weights.size() != net.layer_sizes.size() - 1 ||
        net.biases.size() != net.weights.size())
        throw std::invalid_argument("checkpoint: inconsistent layer structure");
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const std::size_t expect_w = static_cast<std::size_t>(net.layer_sizes[l]) *
                                     static_cast<std::size_t>(net.layer_sizes[l + 1]);
        if (net.weights[l].size() != expect_w ||
            net.biases[l].size() != static_cast<std::size_t>(net.layer_sizes[l + 1]))
            throw std::invalid_argument("checkpoint: weight block size mismatch");
    }
    if (!net.all_finite()) throw std::invalid_argument("checkpoint: non-finite parameters");
    return net;
}

void save_checkpoint(const qnetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path.string());
    out << checkpoint_string(net);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

qnetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return qnetwork_from_string(text);
}

}  // namespace aloha
