#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agent.hpp"
#include "channel.hpp"
#include "codec.hpp"
#include "csv.hpp"
#include "diffusion.hpp"
#include "json.hpp"
#include "latency.hpp"
#include "mixture.hpp"
#include "rng.hpp"
#include "schedules.hpp"

namespace semaigc {

enum class Framework { semaigc, non_root, non_finetune, edge, local };

inline const char* framework_name(Framework f) {
    switch (f) {
        case Framework::semaigc:
            return "semaigc";
        case Framework::non_root:
            return "non_root";
        case Framework::non_finetune:
            return "non_finetune";
        case Framework::edge:
            return "edge";
        case Framework::local:
            return "local";
    }
    return "?";
}

inline Framework framework_from_name(const std::string& name) {
    for (Framework f : {Framework::semaigc, Framework::non_root, Framework::non_finetune,
                        Framework::edge, Framework::local}) {
        if (name == framework_name(f)) {
            return f;
        }
    }
    throw std::invalid_argument("unknown framework tag: " + name);
}

// Everything a full experiment needs; loads from a JSON document and carries
// the simulation-setting defaults (SNR range, 20 MHz cap, [5,25] s latency
// requirement, 60 s failure cap, 7-256-256-10 agent).
struct ExperimentConfig {
    // Data model.
    int latent_dim = 2;
    std::vector<int> labels = {0};
    int guidance_dim = 4;
    std::uint64_t embedding_seed = 1234;
    MixtureSpec mixture;

    // Diffusion schedule (t_hat total denoising steps, shared across frameworks).
    int t_hat = 20;
    double beta_start = 0.05;
    double beta_end = 0.45;
    double gamma_ratio = 1.05;

    // Channel / link.
    double snr_db_min = -6.0;
    double snr_db_max = 15.0;
    double gain_h = 1.0;
    int bits_per_value = 32;
    double bandwidth_hz = 50.0;
    double bandwidth_cap_hz = 20e6;

    // Latency requirement and failure handling.
    double req_low_min_s = 5.0;
    double req_low_max_s = 25.0;
    double ramp_width_s = 20.0;
    double failure_cap_s = 60.0;

    // Compute specs (PACR scales core_freq_hz per episode).
    ComputeSpec edge_compute{1.1e9, 8, 0.8, 2e7, 0.1};
    ComputeSpec local_compute{3.41e8, 2, 0.8, 4e6, 0.1};
    double compression_factor = 48.0;  // edge framework's over-the-air size vs the latent

    // Delivered-content acceptance. A delivery fails when the final latent
    // lands farther than quality_gate_distance from every target component
    // mean, or when the transmitter had already committed to a component
    // (posterior mass >= mode_commit_threshold at the split point) and the
    // delivered content settles on a different one. Zero distance disables
    // the whole gate.
    double quality_gate_distance = 0.7;
    double mode_commit_threshold = 0.8;
    int quality_batch = 200;  // samples per episode for the [0,1] quality score in eval

    D3qnConfig agent;

    int train_episodes = 1500;
    int eval_episodes = 200;
    std::vector<double> snr_grid = {-6.0, 0.0, 6.0, 15.0};
    std::vector<double> pacr_grid = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::string> frameworks = {"semaigc", "non_root", "non_finetune", "edge",
                                           "local"};
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string weights_file;

    static MixtureSpec default_mixture() {
        MixtureSpec spec;
        Mixture mix;
        const double angles[] = {M_PI / 2.0, M_PI / 2.0 + 2.0 * M_PI / 3.0,
                                 M_PI / 2.0 + 4.0 * M_PI / 3.0};
        const double weights[] = {0.5, 0.3, 0.2};
        for (int k = 0; k < 3; ++k) {
            mix.components.push_back(GaussianComponent{
                weights[k],
                {2.0 * std::cos(angles[k]), 2.0 * std::sin(angles[k])},
                {0.04, 0.04}});
        }
        spec.by_label[0] = mix;
        return spec;
    }

    ExperimentConfig() : mixture(default_mixture()) {
        agent.t_hat = t_hat;
        // The full-pipeline environment needs a faster step size than the
        // bare-agent default to settle within the episode budget.
        agent.learning_rate = 3e-3;
    }

    void validate() const {
        if (latent_dim < 1 || labels.empty() || t_hat < 1) {
            throw std::invalid_argument("ExperimentConfig: bad dimensions");
        }
        if (!(snr_db_min <= snr_db_max) || !(req_low_min_s <= req_low_max_s) ||
            !(ramp_width_s > 0.0)) {
            throw std::invalid_argument("ExperimentConfig: ranges must be ordered");
        }
        if (bandwidth_hz > bandwidth_cap_hz) {
            throw std::invalid_argument("ExperimentConfig: bandwidth exceeds cap");
        }
        mixture.validate();
        if (mixture.dim() != latent_dim) {
            throw std::invalid_argument("ExperimentConfig: mixture dimension mismatch");
        }
        for (int label : labels) {
            mixture.for_label(label);  // throws on unknown
        }
        edge_compute.validate();
        local_compute.validate();
    }

    NoiseSchedule schedule() const { return build_linear_schedule(t_hat, beta_start, beta_end); }

    LabelEmbedder embedder() const { return LabelEmbedder(labels, guidance_dim, embedding_seed); }

    double payload_bits() const { return static_cast<double>(latent_dim) * bits_per_value; }

    StateBounds state_bounds() const {
        StateBounds b;
        b.lo = {0.0, 0.0, snr_db_min, 0.0, 0.0, 0.0, req_low_min_s};
        b.hi = {2.0 * edge_compute.density_per_step, 2.0 * local_compute.density_per_step,
                snr_db_max, edge_compute.core_freq_hz, local_compute.core_freq_hz,
                std::max(bandwidth_hz, 1.0), req_low_max_s};
        return b;
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"latent_dim", c.latent_dim},
         {"labels", c.labels},
         {"guidance_dim", c.guidance_dim},
         {"embedding_seed", c.embedding_seed},
         {"mixture", mixture_to_json(c.mixture)},
         {"t_hat", c.t_hat},
         {"beta_start", c.beta_start},
         {"beta_end", c.beta_end},
         {"gamma_ratio", c.gamma_ratio},
         {"snr_db_min", c.snr_db_min},
         {"snr_db_max", c.snr_db_max},
         {"gain_h", c.gain_h},
         {"bits_per_value", c.bits_per_value},
         {"bandwidth_hz", c.bandwidth_hz},
         {"bandwidth_cap_hz", c.bandwidth_cap_hz},
         {"req_low_min_s", c.req_low_min_s},
         {"req_low_max_s", c.req_low_max_s},
         {"ramp_width_s", c.ramp_width_s},
         {"failure_cap_s", c.failure_cap_s},
         {"edge_compute",
          {{"core_freq_hz", c.edge_compute.core_freq_hz},
           {"cores", c.edge_compute.cores},
           {"parallel_fraction", c.edge_compute.parallel_fraction},
           {"density_per_step", c.edge_compute.density_per_step},
           {"overhead_s", c.edge_compute.overhead_s}}},
         {"local_compute",
          {{"core_freq_hz", c.local_compute.core_freq_hz},
           {"cores", c.local_compute.cores},
           {"parallel_fraction", c.local_compute.parallel_fraction},
           {"density_per_step", c.local_compute.density_per_step},
           {"overhead_s", c.local_compute.overhead_s}}},
         {"compression_factor", c.compression_factor},
         {"quality_gate_distance", c.quality_gate_distance},
         {"mode_commit_threshold", c.mode_commit_threshold},
         {"quality_batch", c.quality_batch},
         {"agent", c.agent},
         {"train_episodes", c.train_episodes},
         {"eval_episodes", c.eval_episodes},
         {"snr_grid", c.snr_grid},
         {"pacr_grid", c.pacr_grid},
         {"frameworks", c.frameworks},
         {"seed", c.seed},
         {"out_dir", c.out_dir},
         {"weights_file", c.weights_file}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.labels = j.value("labels", c.labels);
    c.guidance_dim = j.value("guidance_dim", c.guidance_dim);
    c.embedding_seed = j.value("embedding_seed", c.embedding_seed);
    if (j.contains("mixture")) {
        c.mixture = mixture_from_json(j.at("mixture"));
    }
    c.t_hat = j.value("t_hat", c.t_hat);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.gamma_ratio = j.value("gamma_ratio", c.gamma_ratio);
    c.snr_db_min = j.value("snr_db_min", c.snr_db_min);
    c.snr_db_max = j.value("snr_db_max", c.snr_db_max);
    c.gain_h = j.value("gain_h", c.gain_h);
    c.bits_per_value = j.value("bits_per_value", c.bits_per_value);
    c.bandwidth_hz = j.value("bandwidth_hz", c.bandwidth_hz);
    c.bandwidth_cap_hz = j.value("bandwidth_cap_hz", c.bandwidth_cap_hz);
    c.req_low_min_s = j.value("req_low_min_s", c.req_low_min_s);
    c.req_low_max_s = j.value("req_low_max_s", c.req_low_max_s);
    c.ramp_width_s = j.value("ramp_width_s", c.ramp_width_s);
    c.failure_cap_s = j.value("failure_cap_s", c.failure_cap_s);
    auto load_spec = [&](const char* key, ComputeSpec& spec) {
        if (!j.contains(key)) {
            return;
        }
        const auto& s = j.at(key);
        spec.core_freq_hz = s.value("core_freq_hz", spec.core_freq_hz);
        spec.cores = s.value("cores", spec.cores);
        spec.parallel_fraction = s.value("parallel_fraction", spec.parallel_fraction);
        spec.density_per_step = s.value("density_per_step", spec.density_per_step);
        spec.overhead_s = s.value("overhead_s", spec.overhead_s);
    };
    load_spec("edge_compute", c.edge_compute);
    load_spec("local_compute", c.local_compute);
    c.compression_factor = j.value("compression_factor", c.compression_factor);
    c.quality_gate_distance = j.value("quality_gate_distance", c.quality_gate_distance);
    c.mode_commit_threshold = j.value("mode_commit_threshold", c.mode_commit_threshold);
    c.quality_batch = j.value("quality_batch", c.quality_batch);
    if (j.contains("agent")) {
        c.agent = j.at("agent").get<D3qnConfig>();
    }
    c.agent.t_hat = c.t_hat;
    c.train_episodes = j.value("train_episodes", c.train_episodes);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.snr_grid = j.value("snr_grid", c.snr_grid);
    c.pacr_grid = j.value("pacr_grid", c.pacr_grid);
    c.frameworks = j.value("frameworks", c.frameworks);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.weights_file = j.value("weights_file", c.weights_file);
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string dump = nlohmann::json(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// One sampled service request: channel quality, per-side compute
// availability and the receiver's latency requirement.
struct EnvDraw {
    double snr_db = 0.0;
    double pacr_edge = 1.0;
    double pacr_local = 1.0;
    double req_low_s = 5.0;
    double req_high_s = 25.0;
    int label = 0;
    ComputeSpec edge_eff;
    ComputeSpec local_eff;
    LinkSpec link;
    AgentState state;
};

// Optional pins used by the sweep axes.
struct EnvPins {
    std::optional<double> snr_db;
    std::optional<double> pacr_edge;
    std::optional<double> pacr_local;
};

inline EnvDraw sample_environment(const ExperimentConfig& cfg, Rng& rng,
                                  const EnvPins& pins = {}) {
    EnvDraw d;
    d.snr_db = pins.snr_db ? *pins.snr_db : rng.uniform(cfg.snr_db_min, cfg.snr_db_max);
    // PACR in (0,1]: 1 - U[0,1).
    d.pacr_edge = pins.pacr_edge ? *pins.pacr_edge : 1.0 - rng.uniform();
    d.pacr_local = pins.pacr_local ? *pins.pacr_local : 1.0 - rng.uniform();
    d.req_low_s = rng.uniform(cfg.req_low_min_s, cfg.req_low_max_s);
    d.req_high_s = d.req_low_s + cfg.ramp_width_s;
    d.label = cfg.labels[rng.integer(cfg.labels.size())];

    d.edge_eff = cfg.edge_compute;
    d.edge_eff.core_freq_hz *= d.pacr_edge;
    d.local_eff = cfg.local_compute;
    d.local_eff.core_freq_hz *= d.pacr_local;
    d.link = LinkSpec{cfg.bandwidth_hz, d.snr_db, cfg.bandwidth_cap_hz};

    d.state.w_edge = cfg.edge_compute.density_per_step;
    d.state.w_local = cfg.local_compute.density_per_step;
    d.state.snr_db = d.snr_db;
    d.state.nu_edge = d.edge_eff.core_freq_hz;
    d.state.nu_local = d.local_eff.core_freq_hz;
    d.state.bandwidth_hz = cfg.bandwidth_hz;
    d.state.latency_req_s = d.req_low_s;
    return d;
}

struct EpisodeRecord {
    std::string framework;
    long episode = 0;
    std::uint64_t seed_tag = 0;
    double snr_db = 0.0;
    double pacr_edge = 1.0;
    double pacr_local = 1.0;
    double req_low_s = 0.0;
    double req_high_s = 0.0;
    int action_index = -1;
    int transmitter_steps = 0;
    double sigma_c = 0.0;
    double transmission_s = 0.0;
    double edge_compute_s = 0.0;
    double local_compute_s = 0.0;
    double total_s = 0.0;
    double reward = 0.0;
    bool failed = false;
    bool gate_failed = false;
    bool mode_committed = false;
    bool mode_matched = true;
    double quality = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline int nearest_component(const std::vector<double>& point, const Mixture& target) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < target.components.size(); ++k) {
        const auto& c = target.components[k];
        double d = 0.0;
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            const double delta = point[i] - c.mean[i];
            d += delta * delta;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

// Runs the transmit-side partial generation, the channel, and the receiver
// fine-tuning for a given split. Alongside the delivered latent it reports
// which mixture component the transmitter's latent had committed to (if the
// posterior mass at the split point was decisive), and which component the
// delivered content ended on.
struct DeliveryResult {
    Latent content;
    double sigma_c = 0.0;
    bool tx_committed = false;
    int tx_mode = -1;
    int rx_mode = -1;
};

inline void stamp_tx_mode(DeliveryResult& out, const Latent& z_split, int t_bar,
                          const ExperimentConfig& cfg, const NoiseSchedule& schedule,
                          const Denoiser& denoiser, int label) {
    const auto* gmm = std::get_if<AnalyticGmmDenoiser>(&denoiser);
    if (gmm == nullptr || cfg.mode_commit_threshold <= 0.0) {
        return;
    }
    const double abar = schedule.alpha_bar_at(t_bar);  // == 1 at t_bar == 0
    const auto resp =
        gmm->responsibilities(z_split.values, abar, 1.0 - abar + 1e-12, label);
    const std::size_t k =
        static_cast<std::size_t>(std::max_element(resp.begin(), resp.end()) - resp.begin());
    if (resp[k] >= cfg.mode_commit_threshold) {
        out.tx_committed = true;
        out.tx_mode = static_cast<int>(k);
    }
}

inline DeliveryResult deliver_split(int a, const EnvDraw& env, const ExperimentConfig& cfg,
                                    const NoiseSchedule& schedule, const Denoiser& denoiser,
                                    const Guidance& g, Rng& rng, std::uint32_t seed_tag) {
    Latent z;
    z.step = cfg.t_hat;
    z.values = rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim));
    for (int t = cfg.t_hat; t > cfg.t_hat - a; --t) {
        z = reverse_step(z, t, denoiser, g, schedule, rng);
    }
    const int t_bar = cfg.t_hat - a;

    DeliveryResult out;
    stamp_tx_mode(out, z, t_bar, cfg, schedule, denoiser, env.label);

    const FrameHeader header{static_cast<std::uint16_t>(a),
                             static_cast<std::uint16_t>(env.label), seed_tag};
    const Frame frame = channel_encode(z, header, cfg.bits_per_value);
    const ChannelModel ch{env.snr_db, cfg.gain_h,
                          measured_signal_power(frame.payload)};
    const Frame received = transmit(frame, ch, rng);
    auto [z_rx, hdr] = channel_decode(received, ch);
    out.sigma_c = semantic_noise_std(ch);

    const int rx_t_bar = cfg.t_hat - static_cast<int>(hdr.split_step);
    if (rx_t_bar > 0) {
        const auto cas = build_channel_aware_schedule(schedule, out.sigma_c, rx_t_bar,
                                                      cfg.gamma_ratio);
        if (!cas.built_from(schedule)) {
            throw schedule_mismatch("deliver_split: fine-tuning schedule mismatch");
        }
        z_rx.step = rx_t_bar;
        out.content = fine_tune(z_rx, g, rx_t_bar, cas, denoiser, rng);
    } else {
        z_rx.step = 0;
        out.content = z_rx;
    }
    out.rx_mode = nearest_component(out.content.values, cfg.mixture.for_label(env.label));
    return out;
}

// Edge framework: full generation at the edge, raw (no fine-tuning) delivery.
inline DeliveryResult deliver_edge(const EnvDraw& env, const ExperimentConfig& cfg,
                                   const NoiseSchedule& schedule, const Denoiser& denoiser,
                                   const Guidance& g, Rng& rng, std::uint32_t seed_tag) {
    Latent z = generate(denoiser, g, cfg.t_hat, schedule, rng);
    DeliveryResult out;
    stamp_tx_mode(out, z, 0, cfg, schedule, denoiser, env.label);
    const FrameHeader header{static_cast<std::uint16_t>(cfg.t_hat),
                             static_cast<std::uint16_t>(env.label), seed_tag};
    const Frame frame = channel_encode(z, header, cfg.bits_per_value);
    const ChannelModel ch{env.snr_db, cfg.gain_h, measured_signal_power(frame.payload)};
    auto [z_rx, hdr] = channel_decode(transmit(frame, ch, rng), ch);
    z_rx.step = 0;
    out.content = std::move(z_rx);
    out.sigma_c = semantic_noise_std(ch);
    out.rx_mode = nearest_component(out.content.values, cfg.mixture.for_label(env.label));
    return out;
}

// Delivered content is acceptable when it sits close enough to some target
// component and, for committed transmissions, on the component the
// transmitter meant.
inline bool passes_quality_gate(const DeliveryResult& delivery, const Mixture& target,
                                double gate_distance) {
    if (gate_distance <= 0.0) {
        return true;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : target.components) {
        double d = 0.0;
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            const double delta = delivery.content.values[i] - c.mean[i];
            d += delta * delta;
        }
        best = std::min(best, d);
    }
    if (std::sqrt(best) > gate_distance) {
        return false;
    }
    return !delivery.tx_committed || delivery.rx_mode == delivery.tx_mode;
}

}  // namespace detail

// Runs one content-generation request under the given framework. The split
// for `semaigc` must be supplied (the agent's choice); the fixed frameworks
// derive theirs. Latency comes from the latency model, satisfaction from the
// reward rule, with delivery failing on the latency cap or the quality gate.
inline EpisodeRecord run_episode(Framework framework, const EnvDraw& env,
                                 const ExperimentConfig& cfg, const NoiseSchedule& schedule,
                                 const Denoiser& denoiser, const LabelEmbedder& embedder,
                                 Rng& rng, int semaigc_steps = -1, int action_index = -1) {
    EpisodeRecord rec;
    rec.framework = framework_name(framework);
    rec.snr_db = env.snr_db;
    rec.pacr_edge = env.pacr_edge;
    rec.pacr_local = env.pacr_local;
    rec.req_low_s = env.req_low_s;
    rec.req_high_s = env.req_high_s;
    rec.action_index = action_index;
    const std::uint32_t seed_tag = static_cast<std::uint32_t>(rng.raw() & 0xffffffffu);
    rec.seed_tag = seed_tag;

    const Guidance g = embedder.extract(env.label);
    const Mixture& target = cfg.mixture.for_label(env.label);
    const double o_latent = cfg.payload_bits();

    int a = 0;
    switch (framework) {
        case Framework::semaigc:
            if (semaigc_steps < 0) {
                throw std::invalid_argument("run_episode: semaigc needs the chosen split");
            }
            a = semaigc_steps;
            break;
        case Framework::non_root:
            a = cfg.t_hat / 2;
            break;
        case Framework::non_finetune:
        case Framework::edge:
            a = cfg.t_hat;
            break;
        case Framework::local:
            a = 0;
            break;
    }
    rec.transmitter_steps = a;

    detail::DeliveryResult delivery;
    LatencyBreakdown lat;
    if (framework == Framework::local) {
        // No wireless link involved; every denoising step runs locally.
        delivery.content = generate(denoiser, g, cfg.t_hat, schedule, rng);
        delivery.rx_mode = detail::nearest_component(delivery.content.values, target);
        lat.transmission_s = 0.0;
        lat.edge_compute_s = 0.0;
        lat.local_compute_s = compute_delay(cfg.t_hat, o_latent, env.local_eff);
        lat.total_s = lat.local_compute_s;
    } else if (framework == Framework::edge) {
        delivery = detail::deliver_edge(env, cfg, schedule, denoiser, g, rng, seed_tag);
        const ContentSizes sizes{o_latent, cfg.compression_factor * o_latent};
        lat = total_latency(cfg.t_hat, cfg.t_hat, sizes, env.link, env.edge_eff, env.local_eff);
    } else {
        delivery = detail::deliver_split(a, env, cfg, schedule, denoiser, g, rng, seed_tag);
        const ContentSizes sizes{o_latent, o_latent};
        lat = total_latency(a, cfg.t_hat, sizes, env.link, env.edge_eff, env.local_eff);
    }
    rec.sigma_c = delivery.sigma_c;
    rec.transmission_s = lat.transmission_s;
    rec.edge_compute_s = lat.edge_compute_s;
    rec.local_compute_s = lat.local_compute_s;
    rec.total_s = lat.total_s;

    const bool gate_ok =
        detail::passes_quality_gate(delivery, target, cfg.quality_gate_distance);
    rec.gate_failed = !gate_ok;
    rec.mode_committed = delivery.tx_committed;
    rec.mode_matched = !delivery.tx_committed || delivery.rx_mode == delivery.tx_mode;
    const bool capped = lat.total_s > cfg.failure_cap_s;
    rec.failed = capped || !gate_ok;
    rec.reward = rec.failed ? 0.0 : reward(lat.total_s, env.req_low_s, env.req_high_s);

    if (cfg.quality_batch >= 100) {
        std::vector<std::vector<double>> samples;
        samples.reserve(static_cast<std::size_t>(cfg.quality_batch));
        samples.push_back(delivery.content.values);
        for (int i = 1; i < cfg.quality_batch; ++i) {
            if (framework == Framework::local) {
                samples.push_back(generate(denoiser, g, cfg.t_hat, schedule, rng).values);
            } else if (framework == Framework::edge) {
                samples.push_back(
                    detail::deliver_edge(env, cfg, schedule, denoiser, g, rng, seed_tag)
                        .content.values);
            } else {
                samples.push_back(
                    detail::deliver_split(a, env, cfg, schedule, denoiser, g, rng, seed_tag)
                        .content.values);
            }
        }
        rec.quality = quality_score(samples, target);
    }
    return rec;
}

// Adapter exposing the full pipeline as a training environment. Quality
// scoring is skipped during training (it does not enter the reward).
class SemaigcEnvironment {
  public:
    explicit SemaigcEnvironment(ExperimentConfig cfg)
        : cfg_(std::move(cfg)), schedule_(cfg_.schedule()), embedder_(cfg_.embedder()),
          denoiser_(AnalyticGmmDenoiser(cfg_.mixture)) {
        cfg_.validate();
        cfg_.quality_batch = 0;
    }

    const ExperimentConfig& config() const { return cfg_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const Denoiser& denoiser() const { return denoiser_; }
    const LabelEmbedder& embedder() const { return embedder_; }

    AgentState reset(Rng& rng) {
        current_ = sample_environment(cfg_, rng);
        return current_.state;
    }

    double step(int action_index, Rng& rng) {
        const int steps = action_steps(action_index, cfg_.t_hat, cfg_.agent.n_actions);
        const auto rec = run_episode(Framework::semaigc, current_, cfg_, schedule_, denoiser_,
                                     embedder_, rng, steps, action_index);
        return rec.reward;
    }

    const EnvDraw& current_draw() const { return current_; }

  private:
    ExperimentConfig cfg_;
    NoiseSchedule schedule_;
    LabelEmbedder embedder_;
    Denoiser denoiser_;
    EnvDraw current_;
};

}  // namespace semaigc
