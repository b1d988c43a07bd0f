#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace semaigc {

struct insufficient_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Latency-based satisfaction score: 1 below the lower requirement, linear
// ramp inside the window, 0 at and above the upper bound. The boundary at
// L == req_low maps to 1 (the window endpoints are open in the source rule).
inline double reward(double latency_s, double req_low, double req_high) {
    if (!(req_low < req_high)) {
        throw std::invalid_argument("reward: requirement bounds reversed");
    }
    if (latency_s <= req_low) {
        return 1.0;
    }
    if (latency_s < req_high) {
        return (req_high - latency_s) / (req_high - req_low);
    }
    return 0.0;
}

// The 7-field MDP state of the workload-adaptation problem.
struct AgentState {
    double w_edge = 0.0;        // average processing density of the transmitter (cycles/bit)
    double w_local = 0.0;       // same for the receiver
    double snr_db = 0.0;        // average link SNR
    double nu_edge = 0.0;       // effective transmitter core frequency (cycles/s)
    double nu_local = 0.0;      // effective receiver core frequency
    double bandwidth_hz = 0.0;  // allocated link bandwidth
    double latency_req_s = 0.0; // receiver delay requirement (lower edge)

    std::array<double, 7> raw() const {
        return {w_edge, w_local, snr_db, nu_edge, nu_local, bandwidth_hz, latency_req_s};
    }
};

// Per-field min/max used to squash states into [0,1] before the network.
struct StateBounds {
    std::array<double, 7> lo{};
    std::array<double, 7> hi{};

    std::array<double, 7> normalize(const AgentState& x) const {
        const auto raw = x.raw();
        std::array<double, 7> out{};
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double span = hi[i] - lo[i];
            const double v = span > 0.0 ? (raw[i] - lo[i]) / span : 0.0;
            out[i] = std::clamp(v, 0.0, 1.0);
        }
        return out;
    }
};

struct AgentAction {
    int index = 0;
    int transmitter_steps = 0;
};

// Discrete action k in {0..n-1} maps to a = round(k * t_hat / (n-1)).
inline int action_steps(int index, int t_hat, int n_actions) {
    if (index < 0 || index >= n_actions) {
        throw std::out_of_range("action_steps: index outside action set");
    }
    if (n_actions == 1) {
        return t_hat;
    }
    return static_cast<int>(std::lround(static_cast<double>(index) * t_hat /
                                        static_cast<double>(n_actions - 1)));
}

struct Transition {
    AgentState state;
    int action = 0;
    double reward = 0.0;
    AgentState next_state;
};

// Ring buffer with uniform without-replacement sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) {
            throw std::invalid_argument("ReplayBuffer: zero capacity");
        }
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[write_] = std::move(t);
        }
        write_ = (write_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return data_.at(i); }

    std::vector<Transition> sample(std::size_t m, Rng& rng) const {
        if (m > data_.size()) {
            throw insufficient_data("ReplayBuffer: fewer transitions than the batch size");
        }
        // Partial Fisher-Yates over the index range.
        std::vector<std::size_t> idx(data_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::vector<Transition> out;
        out.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + rng.integer(idx.size() - i);
            std::swap(idx[i], idx[j]);
            out.push_back(data_[idx[i]]);
        }
        return out;
    }

  private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<Transition> data_;
};

// Dueling architecture: shared trunk, scalar state-value head and an
// advantage head over the action set, aggregated as
//   Q(x,a) = V(x) + A(x,a) - mean_a' A(x,a').
class DuelingQNet {
  public:
    DuelingQNet() = default;

    DuelingQNet(int state_dim, int n_actions, int hidden, Rng& rng)
        : n_actions_(n_actions),
          trunk_({state_dim, hidden, hidden}, Activation::relu, Activation::relu, rng),
          value_({hidden, 1}, Activation::identity, Activation::identity, rng),
          advantage_({hidden, n_actions}, Activation::identity, Activation::identity, rng) {}

    int n_actions() const { return n_actions_; }
    int state_dim() const { return trunk_.in_dim(); }

    struct Cache {
        Mlp::Cache trunk;
        Mlp::Cache value;
        Mlp::Cache advantage;
    };

    std::vector<double> q_values(std::span<const double> x) const {
        Cache unused;
        return q_values(x, unused);
    }

    std::vector<double> q_values(std::span<const double> x, Cache& cache) const {
        const auto h = trunk_.forward(x, cache.trunk);
        const auto v = value_.forward(h, cache.value);
        auto adv = advantage_.forward(h, cache.advantage);
        double mean_adv = 0.0;
        for (double a : adv) {
            mean_adv += a;
        }
        mean_adv /= static_cast<double>(adv.size());
        for (double& a : adv) {
            a = v[0] + a - mean_adv;
        }
        return adv;
    }

    struct Grad {
        Mlp trunk;
        Mlp value;
        Mlp advantage;

        static Grad zeros_like(const DuelingQNet& net) {
            return Grad{Mlp::zeros_like(net.trunk_), Mlp::zeros_like(net.value_),
                        Mlp::zeros_like(net.advantage_)};
        }
    };

    // Accumulates dLoss/dParams given dLoss/dQ over all action slots.
    void backward(const Cache& cache, std::span<const double> d_q, Grad& grad) const {
        double d_sum = 0.0;
        for (double d : d_q) {
            d_sum += d;
        }
        const std::vector<double> d_v{d_sum};
        std::vector<double> d_adv(d_q.begin(), d_q.end());
        const double mean_share = d_sum / static_cast<double>(n_actions_);
        for (double& d : d_adv) {
            d -= mean_share;
        }
        std::vector<double> d_h_value;
        std::vector<double> d_h_adv;
        value_.backward(cache.value, d_v, grad.value, &d_h_value);
        advantage_.backward(cache.advantage, d_adv, grad.advantage, &d_h_adv);
        for (std::size_t i = 0; i < d_h_value.size(); ++i) {
            d_h_value[i] += d_h_adv[i];
        }
        trunk_.backward(cache.trunk, d_h_value, grad.trunk);
    }

    void apply(double scale, const Grad& grad) {
        trunk_.axpy(scale, grad.trunk);
        value_.axpy(scale, grad.value);
        advantage_.axpy(scale, grad.advantage);
    }

    std::vector<double> flatten() const {
        auto out = trunk_.flatten();
        const auto v = value_.flatten();
        const auto a = advantage_.flatten();
        out.insert(out.end(), v.begin(), v.end());
        out.insert(out.end(), a.begin(), a.end());
        return out;
    }

    void assign_flat(std::span<const double> flat) {
        const std::size_t nt = trunk_.param_count();
        const std::size_t nv = value_.param_count();
        const std::size_t na = advantage_.param_count();
        if (flat.size() != nt + nv + na) {
            throw std::invalid_argument("DuelingQNet::assign_flat: size mismatch");
        }
        trunk_.assign_flat(flat.subspan(0, nt));
        value_.assign_flat(flat.subspan(nt, nv));
        advantage_.assign_flat(flat.subspan(nt + nv, na));
    }

    nlohmann::json to_json() const {
        return {{"n_actions", n_actions_},
                {"trunk", trunk_.to_json()},
                {"value", value_.to_json()},
                {"advantage", advantage_.to_json()}};
    }

    static DuelingQNet from_json(const nlohmann::json& j) {
        DuelingQNet net;
        net.n_actions_ = j.at("n_actions").get<int>();
        net.trunk_ = Mlp::from_json(j.at("trunk"));
        net.value_ = Mlp::from_json(j.at("value"));
        net.advantage_ = Mlp::from_json(j.at("advantage"));
        return net;
    }

  private:
    int n_actions_ = 0;
    Mlp trunk_;
    Mlp value_;
    Mlp advantage_;
};

inline int argmax_lowest_index(std::span<const double> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i) {
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

// epsilon-greedy selection over the network's Q-values; ties break to the
// lowest action index.
inline int select_action(const DuelingQNet& net, std::span<const double> x_norm, double epsilon,
                         Rng& rng) {
    if (!(epsilon >= 0.0) || !(epsilon <= 1.0)) {
        throw std::invalid_argument("select_action: epsilon outside [0,1]");
    }
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        return static_cast<int>(rng.integer(static_cast<std::uint64_t>(net.n_actions())));
    }
    return argmax_lowest_index(net.q_values(x_norm));
}

// Double-DQN target: the online network picks the next action, the target
// network prices it.
inline double double_dqn_target(const DuelingQNet& online, const DuelingQNet& target,
                                std::span<const double> next_state_norm, double r,
                                double discount) {
    if (discount == 0.0) {
        return r;
    }
    const auto q_online = online.q_values(next_state_norm);
    const int a_star = argmax_lowest_index(q_online);
    const auto q_target = target.q_values(next_state_norm);
    return r + discount * q_target[static_cast<std::size_t>(a_star)];
}

struct D3qnConfig {
    int state_dim = 7;
    int n_actions = 10;
    int hidden = 256;
    int t_hat = 20;
    double learning_rate = 1e-3;
    double discount = 0.99;
    int batch_size = 64;
    int sync_every = 10;
    int replay_capacity = 10000;
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay = 0.995;
};

inline void to_json(nlohmann::json& j, const D3qnConfig& c) {
    j = {{"state_dim", c.state_dim},
         {"n_actions", c.n_actions},
         {"hidden", c.hidden},
         {"t_hat", c.t_hat},
         {"learning_rate", c.learning_rate},
         {"discount", c.discount},
         {"batch_size", c.batch_size},
         {"sync_every", c.sync_every},
         {"replay_capacity", c.replay_capacity},
         {"epsilon_start", c.epsilon_start},
         {"epsilon_min", c.epsilon_min},
         {"epsilon_decay", c.epsilon_decay}};
}

inline void from_json(const nlohmann::json& j, D3qnConfig& c) {
    c.state_dim = j.value("state_dim", c.state_dim);
    c.n_actions = j.value("n_actions", c.n_actions);
    c.hidden = j.value("hidden", c.hidden);
    c.t_hat = j.value("t_hat", c.t_hat);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.discount = j.value("discount", c.discount);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.sync_every = j.value("sync_every", c.sync_every);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
    c.epsilon_min = j.value("epsilon_min", c.epsilon_min);
    c.epsilon_decay = j.value("epsilon_decay", c.epsilon_decay);
}

// One gradient-descent step on the double-DQN objective over a minibatch;
// returns the pre-update loss mean (y - Q(x,a))^2.
inline double train_step(DuelingQNet& online, const DuelingQNet& target,
                         const std::vector<Transition>& batch, const StateBounds& bounds,
                         double discount, double learning_rate) {
    if (batch.empty()) {
        throw std::invalid_argument("train_step: empty batch");
    }
    auto grad = DuelingQNet::Grad::zeros_like(online);
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& tr : batch) {
        const auto x = bounds.normalize(tr.state);
        const auto x_next = bounds.normalize(tr.next_state);
        const double y = double_dqn_target(online, target, x_next, tr.reward, discount);
        DuelingQNet::Cache cache;
        const auto q = online.q_values(x, cache);
        const double err = q[static_cast<std::size_t>(tr.action)] - y;
        loss += err * err;
        std::vector<double> d_q(q.size(), 0.0);
        d_q[static_cast<std::size_t>(tr.action)] = 2.0 * err * inv_m;
        online.backward(cache, d_q, grad);
    }
    online.apply(-learning_rate, grad);
    return loss * inv_m;
}

// The ROOT scheme: dueling double DQN with replay, decaying epsilon-greedy
// exploration and periodic hard target sync.
class D3qnAgent {
  public:
    D3qnAgent(D3qnConfig cfg, StateBounds bounds, Rng& init_rng)
        : cfg_(cfg), bounds_(bounds),
          online_(cfg.state_dim, cfg.n_actions, cfg.hidden, init_rng), target_(online_),
          replay_(static_cast<std::size_t>(cfg.replay_capacity)),
          epsilon_(cfg.epsilon_start) {}

    const D3qnConfig& config() const { return cfg_; }
    const StateBounds& bounds() const { return bounds_; }
    double epsilon() const { return epsilon_; }
    DuelingQNet& online() { return online_; }
    const DuelingQNet& online() const { return online_; }
    const DuelingQNet& target() const { return target_; }
    const ReplayBuffer& replay() const { return replay_; }

    AgentAction act(const AgentState& x, Rng& rng) {
        const int idx = select_action(online_, bounds_.normalize(x), epsilon_, rng);
        return AgentAction{idx, action_steps(idx, cfg_.t_hat, cfg_.n_actions)};
    }

    AgentAction greedy(const AgentState& x) const {
        const int idx = argmax_lowest_index(online_.q_values(bounds_.normalize(x)));
        return AgentAction{idx, action_steps(idx, cfg_.t_hat, cfg_.n_actions)};
    }

    std::vector<double> q_values(const AgentState& x) const {
        return online_.q_values(bounds_.normalize(x));
    }

    void observe(Transition tr, Rng& rng) {
        replay_.push(std::move(tr));
        if (replay_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
            const auto batch = replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng);
            last_loss_ = train_step(online_, target_, batch, bounds_, cfg_.discount,
                                    cfg_.learning_rate);
            ++train_steps_;
            if (train_steps_ % cfg_.sync_every == 0) {
                sync_target();
            }
        }
    }

    void end_episode() { epsilon_ = std::max(cfg_.epsilon_min, epsilon_ * cfg_.epsilon_decay); }

    void sync_target() { target_ = online_; }

    double last_loss() const { return last_loss_; }
    long train_steps() const { return train_steps_; }

    nlohmann::json to_json() const {
        return {{"format", "semaigc-qnet-v1"},
                {"config", cfg_},
                {"bounds_lo", bounds_.lo},
                {"bounds_hi", bounds_.hi},
                {"online", online_.to_json()}};
    }

    static D3qnAgent from_json(const nlohmann::json& j) {
        if (j.value("format", "") != std::string("semaigc-qnet-v1")) {
            throw std::invalid_argument("D3qnAgent: unsupported weights format");
        }
        const D3qnConfig cfg = j.at("config").get<D3qnConfig>();
        StateBounds bounds;
        bounds.lo = j.at("bounds_lo").get<std::array<double, 7>>();
        bounds.hi = j.at("bounds_hi").get<std::array<double, 7>>();
        Rng dummy(0);
        D3qnAgent agent(cfg, bounds, dummy);
        agent.online_ = DuelingQNet::from_json(j.at("online"));
        agent.target_ = agent.online_;
        return agent;
    }

  private:
    D3qnConfig cfg_;
    StateBounds bounds_;
    DuelingQNet online_;
    DuelingQNet target_;
    ReplayBuffer replay_;
    double epsilon_ = 1.0;
    double last_loss_ = 0.0;
    long train_steps_ = 0;
};

template <class Env>
concept TrainingEnvironment = requires(Env e, Rng& rng, int action_index) {
    { e.reset(rng) } -> std::convertible_to<AgentState>;
    { e.step(action_index, rng) } -> std::convertible_to<double>;
};

struct EpisodeLog {
    double reward = 0.0;
    int action_index = 0;
    int transmitter_steps = 0;
};

// Algorithm: per episode pick an action for the current state, run the
// pipeline, observe the reward, chain the next sampled state into the stored
// transition, then replay-train once.
template <TrainingEnvironment Env>
std::vector<EpisodeLog> run_training(Env& env, int episodes, D3qnAgent& agent, Rng& rng) {
    std::vector<EpisodeLog> trace;
    trace.reserve(static_cast<std::size_t>(episodes));
    AgentState x = env.reset(rng);
    for (int ep = 0; ep < episodes; ++ep) {
        const AgentAction a = agent.act(x, rng);
        const double r = env.step(a.index, rng);
        const AgentState x_next = env.reset(rng);
        agent.observe(Transition{x, a.index, r, x_next}, rng);
        agent.end_episode();
        trace.push_back(EpisodeLog{r, a.index, a.transmitter_steps});
        x = x_next;
    }
    return trace;
}

}  // namespace semaigc
