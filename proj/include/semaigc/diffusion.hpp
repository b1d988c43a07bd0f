#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "denoiser.hpp"
#include "latent.hpp"
#include "rng.hpp"
#include "schedules.hpp"

namespace semaigc {

struct step_range_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct schedule_mismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One forward noising step z_{t-1} -> z_t = sqrt(1-beta_t) z + sqrt(beta_t) eps.
inline Latent forward_diffuse_step(const Latent& z, const NoiseSchedule& schedule, Rng& rng) {
    const int t = z.step + 1;
    if (t > schedule.T) {
        throw step_range_error("forward_diffuse_step: step overflow, latent already at T");
    }
    z.require_finite();
    const double b = schedule.beta_at(t);
    const double keep = std::sqrt(1.0 - b);
    const double add = std::sqrt(b);
    Latent out;
    out.step = t;
    out.values.resize(z.values.size());
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        out.values[i] = keep * z.values[i] + add * rng.normal();
    }
    return out;
}

// One-shot jump to step t: sqrt(abar_t) z0 + sqrt(1-abar_t) eps.
inline Latent closed_form_diffuse(const Latent& z0, int t, const NoiseSchedule& schedule,
                                  Rng& rng) {
    if (t < 0 || t > schedule.T) {
        throw step_range_error("closed_form_diffuse: t outside [0, T]");
    }
    z0.require_finite();
    Latent out;
    out.step = t;
    if (t == 0) {
        out.values = z0.values;
        return out;
    }
    const double abar = schedule.alpha_bar_at(t);
    const double keep = std::sqrt(abar);
    const double add = std::sqrt(1.0 - abar);
    out.values.resize(z0.values.size());
    for (std::size_t i = 0; i < z0.values.size(); ++i) {
        out.values[i] = keep * z0.values[i] + add * rng.normal();
    }
    return out;
}

namespace detail {

// Deterministic part of a reverse step: (z - coeff * eps_hat) / sqrt(alpha_t).
inline std::vector<double> reverse_step_mean(const std::vector<double>& z, double alpha_t,
                                             double coeff, const std::vector<double>& eps_hat) {
    const double inv_root_alpha = 1.0 / std::sqrt(alpha_t);
    std::vector<double> mean(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        mean[i] = inv_root_alpha * (z[i] - coeff * eps_hat[i]);
    }
    return mean;
}

inline Latent reverse_step_kernel(const Latent& z, int t, double alpha_t, double coeff,
                                  double sigma_bar_t, const std::vector<double>& eps_hat,
                                  Rng& rng) {
    Latent out;
    out.step = t - 1;
    out.values = reverse_step_mean(z.values, alpha_t, coeff, eps_hat);
    for (auto& v : out.values) {
        v += sigma_bar_t * rng.normal();
    }
    return out;
}

}  // namespace detail

// Standard reverse (generation) step of the semantic generation module.
inline Latent reverse_step(const Latent& z, int t, const Denoiser& denoiser, const Guidance& g,
                           const NoiseSchedule& schedule, Rng& rng) {
    if (t < 1) {
        throw step_range_error("reverse_step: step underflow at t=0");
    }
    if (z.step != t || t > schedule.T) {
        throw step_range_error("reverse_step: latent step inconsistent with t");
    }
    const double alpha_t = schedule.alpha_at(t);
    const double coeff = channel_aware_coefficient(alpha_t, schedule.alpha_bar_at(t), 0.0, 0.0);
    const auto eps_hat = predict_noise_at(denoiser, z.values, t, g, schedule.alpha_bar_at(t), 0.0);
    return detail::reverse_step_kernel(z, t, alpha_t, coeff, schedule.sigma_bar_at(t), eps_hat,
                                       rng);
}

// Conditional mean of the channel-aware step (the sampling noise left out);
// exposed so oracle checks can compare means without unwinding the rng.
inline std::vector<double> reverse_step_channel_aware_mean(const Latent& z, int t,
                                                           const Denoiser& denoiser,
                                                           const Guidance& g,
                                                           const ChannelAwareSchedule& cas) {
    const auto eps_hat = predict_noise_at(denoiser, z.values, t, g, cas.alpha_bar_at(t),
                                          cas.sigma_t_at(t));
    return detail::reverse_step_mean(z.values, cas.alpha_at(t), coefficient_C(cas, t), eps_hat);
}

// Channel-noise-aware reverse step of the fine-tuning module. The noise
// prediction is widened by the accumulated channel noise sigma_t, and the
// removal coefficient C accounts for the per-step injection. With sigma_c = 0
// this is bitwise identical to reverse_step under the same rng stream.
inline Latent reverse_step_channel_aware(const Latent& z, int t, const Denoiser& denoiser,
                                         const Guidance& g, const ChannelAwareSchedule& cas,
                                         Rng& rng) {
    if (t < 1) {
        throw step_range_error("reverse_step_channel_aware: step underflow at t=0");
    }
    if (z.step != t || t > cas.T_bar) {
        throw step_range_error("reverse_step_channel_aware: latent step inconsistent with t");
    }
    const auto eps_hat = predict_noise_at(denoiser, z.values, t, g, cas.alpha_bar_at(t),
                                          cas.sigma_t_at(t));
    return detail::reverse_step_kernel(z, t, cas.alpha_at(t), coefficient_C(cas, t),
                                       cas.sigma_bar_at(t), eps_hat, rng);
}

// Full generation: start from pure noise at step T and denoise down to 0.
inline Latent generate(const Denoiser& denoiser, const Guidance& g, int T,
                       const NoiseSchedule& schedule, Rng& rng) {
    if (T < 0 || T > schedule.T) {
        throw step_range_error("generate: T outside schedule range");
    }
    Latent z;
    z.step = T;
    z.values = rng.normal_vec(static_cast<std::size_t>(denoiser_dim(denoiser)));
    for (int t = T; t >= 1; --t) {
        z = reverse_step(z, t, denoiser, g, schedule, rng);
    }
    return z;
}

// Receiver-side fine-tuning: T_bar channel-aware steps on the received latent.
inline Latent fine_tune(const Latent& z_received, const Guidance& g, int T_bar,
                        const ChannelAwareSchedule& cas, const Denoiser& denoiser, Rng& rng) {
    if (T_bar == 0) {
        return z_received;
    }
    if (T_bar < 0 || T_bar != cas.T_bar) {
        throw schedule_mismatch("fine_tune: T_bar does not match the channel-aware schedule");
    }
    if (z_received.step != T_bar) {
        throw step_range_error("fine_tune: received latent must carry step T_bar");
    }
    Latent z = z_received;
    for (int t = T_bar; t >= 1; --t) {
        z = reverse_step_channel_aware(z, t, denoiser, g, cas, rng);
    }
    return z;
}

namespace detail {

// Shared loss body; the predictor sees the true noise so tests can run a
// teacher-forced oracle through the same code path.
template <class PredictFn>
double diffusion_loss_impl(PredictFn&& predict, const std::vector<std::pair<Latent, Guidance>>& batch,
                           const NoiseSchedule& schedule, Rng& rng) {
    if (batch.empty()) {
        throw std::invalid_argument("diffusion_training_loss: empty batch");
    }
    double total = 0.0;
    for (const auto& [z0, g] : batch) {
        const int t = static_cast<int>(rng.integer(static_cast<std::uint64_t>(schedule.T))) + 1;
        const double abar = schedule.alpha_bar_at(t);
        const double keep = std::sqrt(abar);
        const double add = std::sqrt(1.0 - abar);
        std::vector<double> eps(z0.values.size());
        std::vector<double> z_t(z0.values.size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            eps[i] = rng.normal();
            z_t[i] = keep * z0.values[i] + add * eps[i];
        }
        const auto eps_hat = predict(z_t, t, g, eps);
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double d = eps[i] - eps_hat[i];
            total += d * d;
        }
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace detail

// Noise-prediction training objective: E ||eps - eps_theta(z_t, t | g)||^2
// with t drawn uniformly and fresh Gaussian noise per sample.
inline double diffusion_training_loss(const MlpDenoiser& denoiser,
                                      const std::vector<std::pair<Latent, Guidance>>& batch,
                                      const NoiseSchedule& schedule, Rng& rng) {
    return detail::diffusion_loss_impl(
        [&](const std::vector<double>& z_t, int t, const Guidance& g,
            const std::vector<double>&) { return denoiser.predict(z_t, t, g); },
        batch, schedule, rng);
}

// Loss with the analytic parameter gradient accumulated into `grad` when
// non-null. The rng drives the (t, eps) draws, so a frozen seed makes the
// loss a deterministic function of the parameters (finite differences check
// against exactly this).
inline double diffusion_loss_and_grad(const MlpDenoiser& denoiser,
                                      const std::vector<std::pair<Latent, Guidance>>& batch,
                                      const NoiseSchedule& schedule, Rng& rng,
                                      Mlp* grad = nullptr) {
    if (batch.empty()) {
        throw std::invalid_argument("diffusion_loss_and_grad: empty batch");
    }
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& [z0, g] : batch) {
        const int t = static_cast<int>(rng.integer(static_cast<std::uint64_t>(schedule.T))) + 1;
        const double abar = schedule.alpha_bar_at(t);
        const double keep = std::sqrt(abar);
        const double add = std::sqrt(1.0 - abar);
        std::vector<double> eps(z0.values.size());
        std::vector<double> z_t(z0.values.size());
        for (std::size_t i = 0; i < eps.size(); ++i) {
            eps[i] = rng.normal();
            z_t[i] = keep * z0.values[i] + add * eps[i];
        }
        Mlp::Cache cache;
        const auto eps_hat = denoiser.net().forward(denoiser.input_for(z_t, t, g), cache);
        std::vector<double> d_out(eps_hat.size());
        for (std::size_t i = 0; i < eps_hat.size(); ++i) {
            const double d = eps[i] - eps_hat[i];
            total += d * d;
            d_out[i] = 2.0 * (eps_hat[i] - eps[i]) * inv_n;
        }
        if (grad != nullptr) {
            denoiser.net().backward(cache, d_out, *grad);
        }
    }
    return total * inv_n;
}

// One gradient-descent step on the training loss; returns the pre-update loss.
inline double train_denoiser_step(MlpDenoiser& denoiser,
                                  const std::vector<std::pair<Latent, Guidance>>& batch,
                                  const NoiseSchedule& schedule, Rng& rng, double lr) {
    Mlp grad = Mlp::zeros_like(denoiser.net());
    const double loss = diffusion_loss_and_grad(denoiser, batch, schedule, rng, &grad);
    denoiser.net().axpy(-lr, grad);
    return loss;
}

}  // namespace semaigc
