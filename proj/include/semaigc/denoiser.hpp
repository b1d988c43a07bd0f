#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "latent.hpp"
#include "mixture.hpp"
#include "mlp.hpp"
#include "schedules.hpp"

namespace semaigc {

struct numerical_degeneracy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact noise predictor for the Gaussian-mixture data model. Under the
// observation z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t + sigma_offset^2) eps
// the posterior mean E[z0 | z_t] is available in closed form, which makes the
// whole reverse process verifiable against brute-force conditioning.
class AnalyticGmmDenoiser {
  public:
    AnalyticGmmDenoiser() = default;

    explicit AnalyticGmmDenoiser(MixtureSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
    }

    int dim() const { return spec_.dim(); }
    const MixtureSpec& spec() const { return spec_; }

    // Posterior component probabilities of z_t under the marginals
    // N(sqrt(abar) mu_k, abar Sigma_k + obs_var I), via log-sum-exp.
    std::vector<double> responsibilities(const std::vector<double>& z_t, double alpha_bar_t,
                                         double obs_var, int label) const {
        const Mixture& mix = spec_.for_label(label);
        const std::size_t d = z_t.size();
        const std::size_t k_count = mix.components.size();
        const double root_abar = std::sqrt(alpha_bar_t);
        std::vector<double> log_r(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            const auto& c = mix.components[k];
            double lp = std::log(c.weight);
            for (std::size_t i = 0; i < d; ++i) {
                const double v = alpha_bar_t * c.var[i] + obs_var;
                const double diff = z_t[i] - root_abar * c.mean[i];
                lp += -0.5 * std::log(2.0 * M_PI * v) - 0.5 * diff * diff / v;
            }
            log_r[k] = lp;
        }
        const double max_lp = *std::max_element(log_r.begin(), log_r.end());
        if (!std::isfinite(max_lp)) {
            throw numerical_degeneracy("AnalyticGmmDenoiser: all responsibilities underflow");
        }
        double norm = 0.0;
        for (double& lr : log_r) {
            lr = std::exp(lr - max_lp);
            norm += lr;
        }
        for (double& lr : log_r) {
            lr /= norm;
        }
        return log_r;
    }

    std::vector<double> posterior_mean_z0(const std::vector<double>& z_t, double alpha_bar_t,
                                          double obs_var, int label) const {
        const Mixture& mix = spec_.for_label(label);
        const std::size_t d = z_t.size();
        const double root_abar = std::sqrt(alpha_bar_t);
        const auto resp = responsibilities(z_t, alpha_bar_t, obs_var, label);
        std::vector<double> z0_hat(d, 0.0);
        for (std::size_t k = 0; k < mix.components.size(); ++k) {
            const auto& c = mix.components[k];
            for (std::size_t i = 0; i < d; ++i) {
                const double gain = root_abar * c.var[i] /
                                    (alpha_bar_t * c.var[i] + obs_var);
                const double cond = c.mean[i] + gain * (z_t[i] - root_abar * c.mean[i]);
                z0_hat[i] += resp[k] * cond;
            }
        }
        return z0_hat;
    }

  private:
    MixtureSpec spec_;
};

// Learned noise predictor: a small smooth network over [z_t, t/T, guidance].
class MlpDenoiser {
  public:
    MlpDenoiser() = default;

    MlpDenoiser(int latent_dim, int guidance_dim, int t_max, Rng& rng, int hidden = 64)
        : latent_dim_(latent_dim), guidance_dim_(guidance_dim), t_max_(t_max),
          net_({latent_dim + 1 + guidance_dim, hidden, hidden, latent_dim},
               Activation::tanh_act, Activation::identity, rng) {}

    int dim() const { return latent_dim_; }
    int t_max() const { return t_max_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    std::vector<double> input_for(const std::vector<double>& z_t, int t,
                                  const Guidance& g) const {
        if (static_cast<int>(g.embedding.size()) != guidance_dim_) {
            throw std::invalid_argument("MlpDenoiser: guidance dimension mismatch");
        }
        std::vector<double> in;
        in.reserve(z_t.size() + 1 + g.embedding.size());
        in.insert(in.end(), z_t.begin(), z_t.end());
        in.push_back(static_cast<double>(t) / static_cast<double>(t_max_));
        in.insert(in.end(), g.embedding.begin(), g.embedding.end());
        return in;
    }

    std::vector<double> predict(const std::vector<double>& z_t, int t, const Guidance& g) const {
        return net_.forward(input_for(z_t, t, g));
    }

    nlohmann::json to_json() const {
        return {{"latent_dim", latent_dim_},
                {"guidance_dim", guidance_dim_},
                {"t_max", t_max_},
                {"net", net_.to_json()}};
    }

    static MlpDenoiser from_json(const nlohmann::json& j) {
        MlpDenoiser d;
        d.latent_dim_ = j.at("latent_dim").get<int>();
        d.guidance_dim_ = j.at("guidance_dim").get<int>();
        d.t_max_ = j.at("t_max").get<int>();
        d.net_ = Mlp::from_json(j.at("net"));
        return d;
    }

  private:
    int latent_dim_ = 0;
    int guidance_dim_ = 0;
    int t_max_ = 1;
    Mlp net_;
};

using Denoiser = std::variant<AnalyticGmmDenoiser, MlpDenoiser>;

inline int denoiser_dim(const Denoiser& d) {
    return std::visit([](const auto& inner) { return inner.dim(); }, d);
}

// Core of the noise prediction: needs only alpha_bar at the queried step.
// sigma_offset widens the observation noise to account for accumulated
// channel noise (Proposition-1 regime); it is zero for clean generation.
inline std::vector<double> predict_noise_at(const Denoiser& denoiser,
                                            const std::vector<double>& z_values, int t,
                                            const Guidance& g, double alpha_bar_t,
                                            double sigma_offset) {
    if (const auto* gmm = std::get_if<AnalyticGmmDenoiser>(&denoiser)) {
        const double obs_var = 1.0 - alpha_bar_t + sigma_offset * sigma_offset;
        const auto z0_hat = gmm->posterior_mean_z0(z_values, alpha_bar_t, obs_var, g.label);
        const double root_abar = std::sqrt(alpha_bar_t);
        const double s = std::sqrt(obs_var);
        std::vector<double> eps(z_values.size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            eps[i] = (z_values[i] - root_abar * z0_hat[i]) / s;
        }
        return eps;
    }
    // The trained net has seen the channel-augmented noise distribution, so
    // the offset does not enter the forward pass.
    return std::get<MlpDenoiser>(denoiser).predict(z_values, t, g);
}

inline std::vector<double> predict_noise(const Denoiser& denoiser, const Latent& z, int t,
                                         const Guidance& g, const NoiseSchedule& schedule,
                                         double sigma_offset = 0.0) {
    if (z.step != t) {
        throw std::invalid_argument("predict_noise: latent step does not match t");
    }
    return predict_noise_at(denoiser, z.values, t, g, schedule.alpha_bar_at(t), sigma_offset);
}

}  // namespace semaigc
