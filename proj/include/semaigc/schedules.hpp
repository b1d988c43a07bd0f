#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace semaigc {

struct schedule_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when no strictly-increasing gamma sequence can satisfy the
// channel-noise normalization for the requested step count.
struct normalization_infeasible : schedule_error {
    using schedule_error::schedule_error;
};

// How the reverse-step sampling std sigma_bar_t is derived from beta.
//   posterior: sqrt(beta_t * (1 - abar_{t-1}) / (1 - abar_t))  (zero at t=1)
//   beta:      sqrt(beta_t)                                    (noisy final step)
enum class SigmaBarKind { posterior, beta };

// Time-dependent constants of the forward/reverse diffusion processes.
// beta must be strictly increasing inside (0,1); alpha_t = 1 - beta_t and
// alpha_bar_t is the running product of alpha. Immutable after construction.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;       // beta[t-1] holds beta_t, t = 1..T
    std::vector<double> alpha;      // 1 - beta_t
    std::vector<double> alpha_bar;  // prod_{i<=t} alpha_i
    std::vector<double> sigma_bar;  // reverse-step sampling std

    double beta_at(int t) const { return at(beta, t, "beta"); }
    double alpha_at(int t) const { return at(alpha, t, "alpha"); }
    double sigma_bar_at(int t) const { return at(sigma_bar, t, "sigma_bar"); }

    // alpha_bar_at(0) == 1 by convention (empty product).
    double alpha_bar_at(int t) const {
        if (t == 0) {
            return 1.0;
        }
        return at(alpha_bar, t, "alpha_bar");
    }

    // Stable identity used to detect mixing schedules across modules.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(static_cast<std::uint64_t>(T));
        for (double b : beta) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(b));
            std::memcpy(&bits, &b, sizeof(bits));
            mix(bits);
        }
        return h;
    }

  private:
    static double at(const std::vector<double>& v, int t, const char* name) {
        if (t < 1 || t > static_cast<int>(v.size())) {
            throw std::out_of_range(std::string(name) + ": step index " + std::to_string(t) +
                                    " outside [1, " + std::to_string(v.size()) + "]");
        }
        return v[static_cast<std::size_t>(t - 1)];
    }
};

// Constants of the channel-noise-aware reverse process. gamma weights how the
// channel noise is (notionally) injected across the fine-tuning steps so that
// sum_t sqrt(gamma_t) * prod_{j=t+1..T_bar} sqrt(alpha_j) == 1, and the sigma
// sequences are the per-step / accumulated injection stds:
//   sigma_{t,t-1} = sigma_c * sqrt(gamma_t)
//   sigma_t^2     = alpha_t * sigma_{t-1}^2 + sigma_c^2 * gamma_t
// The first T_bar steps of the base schedule are copied in so the reverse
// path needs no other schedule object.
struct ChannelAwareSchedule {
    int T_bar = 0;
    double sigma_c = 0.0;
    std::vector<double> gamma;
    std::vector<double> sigma_t;      // accumulated injected-noise std at step t
    std::vector<double> sigma_tm1;    // same sequence shifted; sigma_0 = 0
    std::vector<double> sigma_t_tm1;  // single-step injection std
    std::vector<double> coeff_c;

    std::vector<double> alpha;      // base alpha_t, t = 1..T_bar
    std::vector<double> alpha_bar;  // base alpha_bar_t
    std::vector<double> sigma_bar;  // base sigma_bar_t
    std::uint64_t base_fingerprint = 0;

    double gamma_at(int t) const { return at(gamma, t, "gamma"); }
    double sigma_t_at(int t) const { return at(sigma_t, t, "sigma_t"); }
    double sigma_tm1_at(int t) const { return at(sigma_tm1, t, "sigma_tm1"); }
    double sigma_t_tm1_at(int t) const { return at(sigma_t_tm1, t, "sigma_t_tm1"); }
    double alpha_at(int t) const { return at(alpha, t, "alpha"); }
    double alpha_bar_at(int t) const { return at(alpha_bar, t, "alpha_bar"); }
    double sigma_bar_at(int t) const { return at(sigma_bar, t, "sigma_bar"); }

    bool built_from(const NoiseSchedule& base) const {
        return base_fingerprint == base.fingerprint();
    }

  private:
    static double at(const std::vector<double>& v, int t, const char* name) {
        if (t < 1 || t > static_cast<int>(v.size())) {
            throw std::out_of_range(std::string(name) + ": step index " + std::to_string(t) +
                                    " outside [1, " + std::to_string(v.size()) + "]");
        }
        return v[static_cast<std::size_t>(t - 1)];
    }
};

// Reverse-step noise coefficient for a step with channel-injected noise.
//
//   C(t) = (1 - alpha_t + sigma_{t,t-1}^2)
//          / sqrt(1 - abar_t + sigma_{t-1}^2 alpha_t + sigma_{t,t-1}^2)
//
// The denominator is the conditional variance of z_t given z_0; together with
// a noise prediction normalized by sqrt(1 - abar_t + sigma_t^2) this step
// reproduces the exact Gaussian posterior mean of z_{t-1} given z_t. With all
// sigma terms zero it reduces to the plain reverse-step coefficient
// (1 - alpha_t) / sqrt(1 - abar_t), bit for bit.
inline double channel_aware_coefficient(double alpha_t, double alpha_bar_t, double sigma_tm1,
                                        double sigma_t_tm1) {
    const double num = 1.0 - alpha_t + sigma_t_tm1 * sigma_t_tm1;
    const double den_sq = 1.0 - alpha_bar_t + sigma_tm1 * sigma_tm1 * alpha_t +
                          sigma_t_tm1 * sigma_t_tm1;
    if (den_sq <= 0.0) {
        throw schedule_error("channel_aware_coefficient: non-positive denominator");
    }
    return num / std::sqrt(den_sq);
}

inline double coefficient_C(const ChannelAwareSchedule& s, int t) {
    if (t < 1 || t > s.T_bar) {
        throw std::out_of_range("coefficient_C: step index " + std::to_string(t) +
                                " outside [1, " + std::to_string(s.T_bar) + "]");
    }
    return s.coeff_c[static_cast<std::size_t>(t - 1)];
}

// Linear beta schedule over T steps. Defaults elsewhere follow the common
// 1e-4..0.02 choice; both endpoints are validated, not repaired.
inline NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end,
                                           SigmaBarKind kind = SigmaBarKind::posterior) {
    if (T < 1) {
        throw std::invalid_argument("build_linear_schedule: T must be >= 1");
    }
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start < beta_end)) {
        throw std::invalid_argument(
            "build_linear_schedule: need 0 < beta_start < beta_end < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(static_cast<std::size_t>(T));
    s.alpha.resize(static_cast<std::size_t>(T));
    s.alpha_bar.resize(static_cast<std::size_t>(T));
    s.sigma_bar.resize(static_cast<std::size_t>(T));
    double abar = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0
                                   : static_cast<double>(t - 1) / static_cast<double>(T - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        const double abar_prev = abar;
        const std::size_t i = static_cast<std::size_t>(t - 1);
        s.beta[i] = b;
        s.alpha[i] = 1.0 - b;
        abar *= s.alpha[i];
        s.alpha_bar[i] = abar;
        if (kind == SigmaBarKind::posterior) {
            s.sigma_bar[i] = std::sqrt(b * (1.0 - abar_prev) / (1.0 - abar));
        } else {
            s.sigma_bar[i] = std::sqrt(b);
        }
    }
    return s;
}

namespace detail {

// sum_t sqrt(gamma_t) prod_{j=t+1..T_bar} sqrt(alpha_j) for gamma_t = g r^t.
inline double gamma_normalization(double g, double ratio, const NoiseSchedule& base, int t_bar) {
    double total = 0.0;
    double tail = 1.0;  // prod_{j=t+1..T_bar} sqrt(alpha_j), built backwards
    std::vector<double> tails(static_cast<std::size_t>(t_bar));
    for (int t = t_bar; t >= 1; --t) {
        tails[static_cast<std::size_t>(t - 1)] = tail;
        tail *= std::sqrt(base.alpha_at(t));
    }
    for (int t = 1; t <= t_bar; ++t) {
        total += std::sqrt(g) * std::pow(std::sqrt(ratio), static_cast<double>(t)) *
                 tails[static_cast<std::size_t>(t - 1)];
    }
    return total;
}

}  // namespace detail

// Builds the Proposition-1 constants for a fine-tuning run of T_bar steps on
// top of `base`, given the post-equalization channel noise std sigma_c.
// gamma is a geometric progression g * ratio^t whose scale g is found by
// bisection on the normalization residual (tolerance 1e-12).
inline ChannelAwareSchedule build_channel_aware_schedule(const NoiseSchedule& base,
                                                         double sigma_c, int T_bar,
                                                         double gamma_ratio = 1.05) {
    if (!(sigma_c >= 0.0)) {
        throw std::invalid_argument("build_channel_aware_schedule: sigma_c must be >= 0");
    }
    if (T_bar < 1 || T_bar > base.T) {
        throw std::invalid_argument("build_channel_aware_schedule: need 1 <= T_bar <= base.T");
    }
    if (!(gamma_ratio > 1.0)) {
        throw normalization_infeasible(
            "build_channel_aware_schedule: gamma ratio must exceed 1 for a strictly "
            "increasing schedule");
    }

    // The residual is monotone in g, so bracket at [0, hi] and bisect.
    double lo = 0.0;
    double hi = 1.0;
    while (detail::gamma_normalization(hi, gamma_ratio, base, T_bar) < 1.0) {
        hi *= 2.0;
        if (hi > 1e12) {
            throw normalization_infeasible("build_channel_aware_schedule: no bracket for g");
        }
    }
    double g = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        g = 0.5 * (lo + hi);
        const double resid = detail::gamma_normalization(g, gamma_ratio, base, T_bar) - 1.0;
        if (std::fabs(resid) <= 1e-12) {
            break;
        }
        (resid < 0.0 ? lo : hi) = g;
    }

    ChannelAwareSchedule cas;
    cas.T_bar = T_bar;
    cas.sigma_c = sigma_c;
    cas.base_fingerprint = base.fingerprint();
    cas.gamma.resize(static_cast<std::size_t>(T_bar));
    for (int t = 1; t <= T_bar; ++t) {
        cas.gamma[static_cast<std::size_t>(t - 1)] =
            g * std::pow(gamma_ratio, static_cast<double>(t));
    }
    // gamma_T_bar == 1 is exact (and fine) for the single-step schedule; any
    // other excursion out of (0,1) means the request cannot be satisfied.
    for (int t = 1; t <= T_bar; ++t) {
        const double gt = cas.gamma[static_cast<std::size_t>(t - 1)];
        const bool in_range = gt > 0.0 && (gt < 1.0 || (T_bar == 1 && gt <= 1.0 + 1e-12));
        if (!in_range) {
            throw normalization_infeasible(
                "build_channel_aware_schedule: solved gamma leaves (0,1)");
        }
        if (t > 1 && !(gt > cas.gamma[static_cast<std::size_t>(t - 2)])) {
            throw normalization_infeasible(
                "build_channel_aware_schedule: gamma not strictly increasing");
        }
    }

    cas.alpha.resize(static_cast<std::size_t>(T_bar));
    cas.alpha_bar.resize(static_cast<std::size_t>(T_bar));
    cas.sigma_bar.resize(static_cast<std::size_t>(T_bar));
    cas.sigma_t.resize(static_cast<std::size_t>(T_bar));
    cas.sigma_tm1.resize(static_cast<std::size_t>(T_bar));
    cas.sigma_t_tm1.resize(static_cast<std::size_t>(T_bar));
    cas.coeff_c.resize(static_cast<std::size_t>(T_bar));
    double acc_var = 0.0;  // sigma_{t}^2 recursion
    for (int t = 1; t <= T_bar; ++t) {
        const std::size_t i = static_cast<std::size_t>(t - 1);
        cas.alpha[i] = base.alpha_at(t);
        cas.alpha_bar[i] = base.alpha_bar_at(t);
        cas.sigma_bar[i] = base.sigma_bar_at(t);
        cas.sigma_tm1[i] = std::sqrt(acc_var);
        const double inject = sigma_c * sigma_c * cas.gamma[i];
        acc_var = cas.alpha[i] * acc_var + inject;
        cas.sigma_t[i] = std::sqrt(acc_var);
        cas.sigma_t_tm1[i] = sigma_c * std::sqrt(cas.gamma[i]);
        cas.coeff_c[i] = channel_aware_coefficient(cas.alpha[i], cas.alpha_bar[i],
                                                   cas.sigma_tm1[i], cas.sigma_t_tm1[i]);
    }
    return cas;
}

// JSON document {T, beta[], gamma[], sigma_c} for experiment reproducibility.
inline nlohmann::json schedule_to_json(const NoiseSchedule& base,
                                       const ChannelAwareSchedule* cas = nullptr) {
    nlohmann::json j;
    j["T"] = base.T;
    j["beta"] = base.beta;
    j["gamma"] = cas != nullptr ? nlohmann::json(cas->gamma) : nlohmann::json::array();
    j["sigma_c"] = cas != nullptr ? cas->sigma_c : 0.0;
    return j;
}

inline NoiseSchedule schedule_from_json(const nlohmann::json& j,
                                        SigmaBarKind kind = SigmaBarKind::posterior) {
    const auto beta = j.at("beta").get<std::vector<double>>();
    const int T = j.at("T").get<int>();
    if (T != static_cast<int>(beta.size()) || T < 1) {
        throw schedule_error("schedule_from_json: T does not match beta length");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta = beta;
    s.alpha.resize(beta.size());
    s.alpha_bar.resize(beta.size());
    s.sigma_bar.resize(beta.size());
    double abar = 1.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        const double b = beta[i];
        if (!(b > 0.0) || !(b < 1.0) || (i > 0 && !(b > beta[i - 1]))) {
            throw schedule_error("schedule_from_json: beta must be strictly increasing in (0,1)");
        }
        const double abar_prev = abar;
        s.alpha[i] = 1.0 - b;
        abar *= s.alpha[i];
        s.alpha_bar[i] = abar;
        s.sigma_bar[i] = kind == SigmaBarKind::posterior
                             ? std::sqrt(b * (1.0 - abar_prev) / (1.0 - abar))
                             : std::sqrt(b);
    }
    return s;
}

}  // namespace semaigc
