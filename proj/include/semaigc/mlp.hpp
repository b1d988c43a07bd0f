#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "rng.hpp"

namespace semaigc {

enum class Activation { identity, relu, tanh_act };

namespace detail {

inline double act_apply(Activation a, double x) {
    switch (a) {
        case Activation::relu:
            return x > 0.0 ? x : 0.0;
        case Activation::tanh_act:
            return std::tanh(x);
        default:
            return x;
    }
}

inline double act_grad(Activation a, double pre) {
    switch (a) {
        case Activation::relu:
            return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_act: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        default:
            return 1.0;
    }
}

}  // namespace detail

// Small fully-connected network with hand-written backprop. Weights are
// row-major (out x in) per layer. The hidden activation applies to every
// layer except the last, which uses the output activation.
class Mlp {
  public:
    Mlp() = default;

    Mlp(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng)
        : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
        if (sizes_.size() < 2) {
            throw std::invalid_argument("Mlp: need at least input and output sizes");
        }
        weights_.resize(layer_count());
        biases_.resize(layer_count());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const int fan_in = sizes_[l];
            const int fan_out = sizes_[l + 1];
            const Activation act = l + 1 == layer_count() ? output_ : hidden_;
            const double scale = act == Activation::relu
                                     ? std::sqrt(2.0 / fan_in)
                                     : std::sqrt(1.0 / fan_in);
            weights_[l].resize(static_cast<std::size_t>(fan_in) * fan_out);
            biases_[l].assign(static_cast<std::size_t>(fan_out), 0.0);
            for (auto& w : weights_[l]) {
                w = scale * rng.normal();
            }
        }
    }

    // Gradient accumulator with the same topology, zero-initialized.
    static Mlp zeros_like(const Mlp& other) {
        Mlp g;
        g.sizes_ = other.sizes_;
        g.hidden_ = other.hidden_;
        g.output_ = other.output_;
        g.weights_.resize(other.weights_.size());
        g.biases_.resize(other.biases_.size());
        for (std::size_t l = 0; l < other.weights_.size(); ++l) {
            g.weights_[l].assign(other.weights_[l].size(), 0.0);
            g.biases_[l].assign(other.biases_[l].size(), 0.0);
        }
        return g;
    }

    int in_dim() const { return sizes_.front(); }
    int out_dim() const { return sizes_.back(); }
    std::size_t layer_count() const { return sizes_.size() - 1; }

    struct Cache {
        std::vector<double> input;
        std::vector<std::vector<double>> pre;   // pre-activation per layer
        std::vector<std::vector<double>> post;  // post-activation per layer
    };

    std::vector<double> forward(std::span<const double> x) const {
        Cache unused;
        return forward(x, unused);
    }

    std::vector<double> forward(std::span<const double> x, Cache& cache) const {
        if (static_cast<int>(x.size()) != in_dim()) {
            throw std::invalid_argument("Mlp::forward: input dimension mismatch");
        }
        cache.input.assign(x.begin(), x.end());
        cache.pre.assign(layer_count(), {});
        cache.post.assign(layer_count(), {});
        std::vector<double> a(x.begin(), x.end());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const int n_in = sizes_[l];
            const int n_out = sizes_[l + 1];
            const Activation act = l + 1 == layer_count() ? output_ : hidden_;
            std::vector<double> pre(static_cast<std::size_t>(n_out));
            for (int o = 0; o < n_out; ++o) {
                double acc = biases_[l][static_cast<std::size_t>(o)];
                const double* row = &weights_[l][static_cast<std::size_t>(o) * n_in];
                for (int i = 0; i < n_in; ++i) {
                    acc += row[i] * a[static_cast<std::size_t>(i)];
                }
                pre[static_cast<std::size_t>(o)] = acc;
            }
            std::vector<double> post(static_cast<std::size_t>(n_out));
            for (int o = 0; o < n_out; ++o) {
                post[static_cast<std::size_t>(o)] = detail::act_apply(act, pre[static_cast<std::size_t>(o)]);
            }
            cache.pre[l] = pre;
            cache.post[l] = post;
            a = std::move(post);
        }
        return a;
    }

    // Accumulates parameter gradients into `grad` and optionally returns the
    // gradient with respect to the input.
    void backward(const Cache& cache, std::span<const double> d_out, Mlp& grad,
                  std::vector<double>* d_input = nullptr) const {
        std::vector<double> delta(d_out.begin(), d_out.end());
        for (std::size_t li = layer_count(); li-- > 0;) {
            const int n_in = sizes_[li];
            const int n_out = sizes_[li + 1];
            const Activation act = li + 1 == layer_count() ? output_ : hidden_;
            for (int o = 0; o < n_out; ++o) {
                delta[static_cast<std::size_t>(o)] *=
                    detail::act_grad(act, cache.pre[li][static_cast<std::size_t>(o)]);
            }
            const std::vector<double>& a_prev = li == 0 ? cache.input : cache.post[li - 1];
            for (int o = 0; o < n_out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                double* grow = &grad.weights_[li][static_cast<std::size_t>(o) * n_in];
                for (int i = 0; i < n_in; ++i) {
                    grow[i] += d * a_prev[static_cast<std::size_t>(i)];
                }
                grad.biases_[li][static_cast<std::size_t>(o)] += d;
            }
            if (li == 0 && d_input == nullptr) {
                break;
            }
            std::vector<double> d_prev(static_cast<std::size_t>(n_in), 0.0);
            for (int o = 0; o < n_out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                const double* row = &weights_[li][static_cast<std::size_t>(o) * n_in];
                for (int i = 0; i < n_in; ++i) {
                    d_prev[static_cast<std::size_t>(i)] += d * row[i];
                }
            }
            if (li == 0) {
                *d_input = std::move(d_prev);
                break;
            }
            delta = std::move(d_prev);
        }
    }

    // params += a * g (plain gradient-descent step with a = -lr).
    void axpy(double a, const Mlp& g) {
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (std::size_t i = 0; i < weights_[l].size(); ++i) {
                weights_[l][i] += a * g.weights_[l][i];
            }
            for (std::size_t i = 0; i < biases_[l].size(); ++i) {
                biases_[l][i] += a * g.biases_[l][i];
            }
        }
    }

    void scale(double a) {
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (auto& w : weights_[l]) {
                w *= a;
            }
            for (auto& b : biases_[l]) {
                b *= a;
            }
        }
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            out.insert(out.end(), weights_[l].begin(), weights_[l].end());
            out.insert(out.end(), biases_[l].begin(), biases_[l].end());
        }
        return out;
    }

    void assign_flat(std::span<const double> flat) {
        std::size_t k = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (auto& w : weights_[l]) {
                w = flat[k++];
            }
            for (auto& b : biases_[l]) {
                b = flat[k++];
            }
        }
        if (k != flat.size()) {
            throw std::invalid_argument("Mlp::assign_flat: size mismatch");
        }
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            n += weights_[l].size() + biases_[l].size();
        }
        return n;
    }

    nlohmann::json to_json() const {
        return {{"sizes", sizes_},
                {"hidden", static_cast<int>(hidden_)},
                {"output", static_cast<int>(output_)},
                {"weights", weights_},
                {"biases", biases_}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp m;
        m.sizes_ = j.at("sizes").get<std::vector<int>>();
        m.hidden_ = static_cast<Activation>(j.at("hidden").get<int>());
        m.output_ = static_cast<Activation>(j.at("output").get<int>());
        m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
        m.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
        return m;
    }

  private:
    std::vector<int> sizes_;
    Activation hidden_ = Activation::relu;
    Activation output_ = Activation::identity;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
};

}  // namespace semaigc
