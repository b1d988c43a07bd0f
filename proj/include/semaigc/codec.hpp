#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "latent.hpp"
#include "mixture.hpp"
#include "rng.hpp"

namespace semaigc {

struct unknown_label : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct too_few_samples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An "image" observation with its "text" label.
struct SourceSample {
    std::vector<double> observation;
    int label = 0;
};

// Deterministic text-semantics lookup: each known label maps to a fixed
// embedding drawn once from the table seed.
class LabelEmbedder {
  public:
    LabelEmbedder() = default;

    LabelEmbedder(const std::vector<int>& labels, int dim, std::uint64_t seed) : dim_(dim) {
        Rng rng(seed);
        for (int label : labels) {
            if (table_.count(label) != 0) {
                throw std::invalid_argument("LabelEmbedder: duplicate label");
            }
            table_[label] = rng.normal_vec(static_cast<std::size_t>(dim));
        }
    }

    int dim() const { return dim_; }

    Guidance extract(int label) const {
        const auto it = table_.find(label);
        if (it == table_.end()) {
            throw unknown_label("LabelEmbedder: unknown label " + std::to_string(label));
        }
        return Guidance{label, it->second};
    }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(table_.size());
        for (const auto& [label, _] : table_) {
            out.push_back(label);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    int dim_ = 0;
    std::unordered_map<int, std::vector<double>> table_;
};

inline Guidance extract_text_semantics(const LabelEmbedder& embedder, int label) {
    return embedder.extract(label);
}

// Affine encoder (observation -> latent mean and log-std) and affine decoder
// (latent + guidance -> observation). The desk-scale counterpart of the VAE
// encoder / autoencoder decoder pair.
struct VaeParams {
    int obs_dim = 0;
    int latent_dim = 0;
    int guidance_dim = 0;
    std::vector<double> enc_mu_w;   // latent_dim x obs_dim, row-major
    std::vector<double> enc_mu_b;   // latent_dim
    std::vector<double> enc_ls_w;   // latent_dim x obs_dim (log-std head)
    std::vector<double> enc_ls_b;   // latent_dim
    std::vector<double> dec_w;      // obs_dim x (latent_dim + guidance_dim)
    std::vector<double> dec_b;      // obs_dim
    bool trained = false;

    static VaeParams init(int obs_dim, int latent_dim, int guidance_dim, Rng& rng) {
        VaeParams p;
        p.obs_dim = obs_dim;
        p.latent_dim = latent_dim;
        p.guidance_dim = guidance_dim;
        const double se = std::sqrt(1.0 / obs_dim);
        const double sd = std::sqrt(1.0 / (latent_dim + guidance_dim));
        p.enc_mu_w.resize(static_cast<std::size_t>(latent_dim) * obs_dim);
        p.enc_ls_w.assign(static_cast<std::size_t>(latent_dim) * obs_dim, 0.0);
        p.enc_mu_b.assign(static_cast<std::size_t>(latent_dim), 0.0);
        p.enc_ls_b.assign(static_cast<std::size_t>(latent_dim), 0.0);
        p.dec_w.resize(static_cast<std::size_t>(obs_dim) * (latent_dim + guidance_dim));
        p.dec_b.assign(static_cast<std::size_t>(obs_dim), 0.0);
        for (auto& w : p.enc_mu_w) {
            w = se * rng.normal();
        }
        for (auto& w : p.dec_w) {
            w = sd * rng.normal();
        }
        return p;
    }

    static VaeParams zeros_like(const VaeParams& o) {
        VaeParams g = o;
        auto zero = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
        zero(g.enc_mu_w);
        zero(g.enc_mu_b);
        zero(g.enc_ls_w);
        zero(g.enc_ls_b);
        zero(g.dec_w);
        zero(g.dec_b);
        return g;
    }

    void encode(const std::vector<double>& s, std::vector<double>& mu,
                std::vector<double>& log_std) const {
        if (static_cast<int>(s.size()) != obs_dim) {
            throw std::invalid_argument("VaeParams: observation dimension mismatch");
        }
        mu.assign(static_cast<std::size_t>(latent_dim), 0.0);
        log_std.assign(static_cast<std::size_t>(latent_dim), 0.0);
        for (int j = 0; j < latent_dim; ++j) {
            double m = enc_mu_b[static_cast<std::size_t>(j)];
            double l = enc_ls_b[static_cast<std::size_t>(j)];
            for (int i = 0; i < obs_dim; ++i) {
                m += enc_mu_w[static_cast<std::size_t>(j) * obs_dim + i] * s[static_cast<std::size_t>(i)];
                l += enc_ls_w[static_cast<std::size_t>(j) * obs_dim + i] * s[static_cast<std::size_t>(i)];
            }
            mu[static_cast<std::size_t>(j)] = m;
            log_std[static_cast<std::size_t>(j)] = l;
        }
    }

    std::vector<double> decode(const std::vector<double>& z, const Guidance& g) const {
        if (static_cast<int>(z.size()) != latent_dim ||
            static_cast<int>(g.embedding.size()) != guidance_dim) {
            throw std::invalid_argument("VaeParams: decoder input dimension mismatch");
        }
        std::vector<double> s(static_cast<std::size_t>(obs_dim), 0.0);
        const int in_dim = latent_dim + guidance_dim;
        for (int o = 0; o < obs_dim; ++o) {
            double acc = dec_b[static_cast<std::size_t>(o)];
            for (int i = 0; i < latent_dim; ++i) {
                acc += dec_w[static_cast<std::size_t>(o) * in_dim + i] * z[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < guidance_dim; ++i) {
                acc += dec_w[static_cast<std::size_t>(o) * in_dim + latent_dim + i] *
                       g.embedding[static_cast<std::size_t>(i)];
            }
            s[static_cast<std::size_t>(o)] = acc;
        }
        return s;
    }

    void axpy(double a, const VaeParams& g) {
        auto add = [a](std::vector<double>& dst, const std::vector<double>& src) {
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] += a * src[i];
            }
        };
        add(enc_mu_w, g.enc_mu_w);
        add(enc_mu_b, g.enc_mu_b);
        add(enc_ls_w, g.enc_ls_w);
        add(enc_ls_b, g.enc_ls_b);
        add(dec_w, g.dec_w);
        add(dec_b, g.dec_b);
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        for (const auto* v : {&enc_mu_w, &enc_mu_b, &enc_ls_w, &enc_ls_b, &dec_w, &dec_b}) {
            out.insert(out.end(), v->begin(), v->end());
        }
        return out;
    }

    void assign_flat(const std::vector<double>& flat) {
        std::size_t k = 0;
        for (auto* v : {&enc_mu_w, &enc_mu_b, &enc_ls_w, &enc_ls_b, &dec_w, &dec_b}) {
            for (auto& x : *v) {
                x = flat[k++];
            }
        }
        if (k != flat.size()) {
            throw std::invalid_argument("VaeParams::assign_flat: size mismatch");
        }
    }

    nlohmann::json to_json() const {
        return {{"obs_dim", obs_dim},     {"latent_dim", latent_dim},
                {"guidance_dim", guidance_dim}, {"enc_mu_w", enc_mu_w},
                {"enc_mu_b", enc_mu_b},   {"enc_ls_w", enc_ls_w},
                {"enc_ls_b", enc_ls_b},   {"dec_w", dec_w},
                {"dec_b", dec_b},         {"trained", trained}};
    }

    static VaeParams from_json(const nlohmann::json& j) {
        VaeParams p;
        p.obs_dim = j.at("obs_dim").get<int>();
        p.latent_dim = j.at("latent_dim").get<int>();
        p.guidance_dim = j.at("guidance_dim").get<int>();
        p.enc_mu_w = j.at("enc_mu_w").get<std::vector<double>>();
        p.enc_mu_b = j.at("enc_mu_b").get<std::vector<double>>();
        p.enc_ls_w = j.at("enc_ls_w").get<std::vector<double>>();
        p.enc_ls_b = j.at("enc_ls_b").get<std::vector<double>>();
        p.dec_w = j.at("dec_w").get<std::vector<double>>();
        p.dec_b = j.at("dec_b").get<std::vector<double>>();
        p.trained = j.value("trained", false);
        return p;
    }
};

// Reparameterized encoding z = mu(s) + sigma(s) * eps, step 0.
inline Latent extract_image_semantics(const SourceSample& s, const VaeParams& p, Rng& rng,
                                      bool deterministic = false) {
    std::vector<double> mu;
    std::vector<double> log_std;
    p.encode(s.observation, mu, log_std);
    Latent z;
    z.step = 0;
    z.values.resize(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double sigma = deterministic ? 0.0 : std::exp(log_std[j]);
        z.values[j] = mu[j] + sigma * rng.normal();
    }
    return z;
}

// Final restructuring step; only clean latents may be decoded.
inline SourceSample decode_latent(const Latent& z, const Guidance& g, const VaeParams& p) {
    if (z.step != 0) {
        throw std::invalid_argument("decode_latent: latent step must be 0");
    }
    return SourceSample{p.decode(z.values, g), g.label};
}

// Joint VAE objective: KL(q(z|s) || N(0,I)) plus mean squared reconstruction
// error, both averaged over the batch:
//   -(1/2m) sum_i sum_j (1 + log sigma_j^2 - sigma_j^2 - mu_j^2)
//   + (1/m)  sum_i ||s_i - s_bar_i||^2
// If `grad` is non-null the analytic parameter gradient is accumulated there.
inline double vae_loss(const std::vector<SourceSample>& batch, const VaeParams& p,
                       const LabelEmbedder& embedder, Rng& rng, VaeParams* grad = nullptr) {
    if (batch.empty()) {
        throw std::invalid_argument("vae_loss: empty batch");
    }
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    const int in_dim = p.latent_dim + p.guidance_dim;
    double total = 0.0;
    std::vector<double> mu;
    std::vector<double> log_std;
    for (const auto& sample : batch) {
        const Guidance g = embedder.extract(sample.label);
        p.encode(sample.observation, mu, log_std);
        std::vector<double> eps(mu.size());
        std::vector<double> z(mu.size());
        std::vector<double> sigma(mu.size());
        for (std::size_t j = 0; j < mu.size(); ++j) {
            sigma[j] = std::exp(log_std[j]);
            eps[j] = rng.normal();
            z[j] = mu[j] + sigma[j] * eps[j];
        }
        const auto recon = p.decode(z, g);

        double kl = 0.0;
        for (std::size_t j = 0; j < mu.size(); ++j) {
            kl += -0.5 * (1.0 + 2.0 * log_std[j] - sigma[j] * sigma[j] - mu[j] * mu[j]);
        }
        double mse = 0.0;
        std::vector<double> d_recon(recon.size());
        for (std::size_t o = 0; o < recon.size(); ++o) {
            const double e = recon[o] - sample.observation[o];
            mse += e * e;
            d_recon[o] = 2.0 * e * inv_m;
        }
        total += kl + mse;

        if (grad != nullptr) {
            std::vector<double> d_z(z.size(), 0.0);
            for (int o = 0; o < p.obs_dim; ++o) {
                const double d = d_recon[static_cast<std::size_t>(o)];
                for (int i = 0; i < p.latent_dim; ++i) {
                    grad->dec_w[static_cast<std::size_t>(o) * in_dim + i] += d * z[static_cast<std::size_t>(i)];
                    d_z[static_cast<std::size_t>(i)] += d * p.dec_w[static_cast<std::size_t>(o) * in_dim + i];
                }
                for (int i = 0; i < p.guidance_dim; ++i) {
                    grad->dec_w[static_cast<std::size_t>(o) * in_dim + p.latent_dim + i] +=
                        d * g.embedding[static_cast<std::size_t>(i)];
                }
                grad->dec_b[static_cast<std::size_t>(o)] += d;
            }
            for (int j = 0; j < p.latent_dim; ++j) {
                const std::size_t js = static_cast<std::size_t>(j);
                // KL terms plus the reconstruction path through z.
                const double d_mu = mu[js] * inv_m + d_z[js];
                const double d_ls = (sigma[js] * sigma[js] - 1.0) * inv_m +
                                    d_z[js] * sigma[js] * eps[js];
                for (int i = 0; i < p.obs_dim; ++i) {
                    grad->enc_mu_w[js * static_cast<std::size_t>(p.obs_dim) + i] +=
                        d_mu * sample.observation[static_cast<std::size_t>(i)];
                    grad->enc_ls_w[js * static_cast<std::size_t>(p.obs_dim) + i] +=
                        d_ls * sample.observation[static_cast<std::size_t>(i)];
                }
                grad->enc_mu_b[js] += d_mu;
                grad->enc_ls_b[js] += d_ls;
            }
        }
    }
    return total * inv_m;
}

// Full-batch gradient descent on the joint loss.
inline double train_vae(VaeParams& p, const std::vector<SourceSample>& batch,
                        const LabelEmbedder& embedder, Rng& rng, int steps, double lr) {
    double loss = 0.0;
    for (int s = 0; s < steps; ++s) {
        VaeParams grad = VaeParams::zeros_like(p);
        loss = vae_loss(batch, p, embedder, rng, &grad);
        p.axpy(-lr, grad);
    }
    p.trained = true;
    return loss;
}

// Bounded [0,1] quality metric: exp(-W) where W combines a weighted
// 2-Wasserstein-style moment distance (samples assigned to the nearest
// component mean) with the total weight mismatch.
inline double quality_score(const std::vector<std::vector<double>>& samples,
                            const Mixture& target) {
    if (samples.size() < 100) {
        throw too_few_samples("quality_score: need at least 100 samples");
    }
    target.validate();
    const std::size_t k_count = target.components.size();
    const std::size_t d = static_cast<std::size_t>(target.dim());
    std::vector<std::size_t> counts(k_count, 0);
    std::vector<std::vector<double>> sums(k_count, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> sq_sums(k_count, std::vector<double>(d, 0.0));

    for (const auto& x : samples) {
        if (x.size() != d) {
            throw std::invalid_argument("quality_score: sample dimension mismatch");
        }
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < k_count; ++k) {
            double dist = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double delta = x[i] - target.components[k].mean[i];
                dist += delta * delta;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = k;
            }
        }
        counts[best] += 1;
        for (std::size_t i = 0; i < d; ++i) {
            sums[best][i] += x[i];
            sq_sums[best][i] += x[i] * x[i];
        }
    }

    const double n = static_cast<double>(samples.size());
    double moment_sq = 0.0;
    double weight_gap = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto& c = target.components[k];
        const double w_hat = static_cast<double>(counts[k]) / n;
        weight_gap += std::fabs(w_hat - c.weight);
        if (counts[k] == 0) {
            continue;
        }
        double w2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double m_hat = sums[k][i] / static_cast<double>(counts[k]);
            const double v_hat = std::max(0.0, sq_sums[k][i] / static_cast<double>(counts[k]) -
                                                   m_hat * m_hat);
            const double dm = m_hat - c.mean[i];
            const double ds = std::sqrt(v_hat) - std::sqrt(c.var[i]);
            w2 += dm * dm + ds * ds;
        }
        moment_sq += c.weight * w2;
    }
    const double distance = std::sqrt(moment_sq) + weight_gap;
    return std::exp(-distance);
}

inline double quality_score(const std::vector<Latent>& samples, const Mixture& target) {
    std::vector<std::vector<double>> pts;
    pts.reserve(samples.size());
    for (const auto& z : samples) {
        pts.push_back(z.values);
    }
    return quality_score(pts, target);
}

}  // namespace semaigc
