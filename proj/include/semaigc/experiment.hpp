#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "harness.hpp"
#include "stats.hpp"

namespace semaigc {

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t h = seed ^ (0x9e3779b97f4a7c15ull + salt);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
}

inline std::uint64_t tag_hash(const std::string& tag) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

struct TrainResult {
    std::vector<EpisodeLog> trace;
    nlohmann::json weights;
};

// Trains the ROOT agent on the full pipeline environment.
inline TrainResult train_root_agent(const ExperimentConfig& cfg, D3qnAgent* out_agent = nullptr) {
    SemaigcEnvironment env(cfg);
    Rng init(detail::mix_seed(cfg.seed, detail::tag_hash("agent-init")));
    D3qnConfig agent_cfg = cfg.agent;
    agent_cfg.t_hat = cfg.t_hat;
    D3qnAgent agent(agent_cfg, cfg.state_bounds(), init);
    Rng rng(detail::mix_seed(cfg.seed, detail::tag_hash("train")));
    TrainResult result;
    result.trace = run_training(env, cfg.train_episodes, agent, rng);
    result.weights = agent.to_json();
    if (out_agent != nullptr) {
        *out_agent = D3qnAgent::from_json(result.weights);
    }
    return result;
}

// Evaluates one framework over `episodes` fresh environment draws (optionally
// pinned to a sweep cell). The semaigc framework uses the greedy policy.
inline std::vector<EpisodeRecord> evaluate_cell(const ExperimentConfig& cfg,
                                                const NoiseSchedule& schedule,
                                                const Denoiser& denoiser,
                                                const LabelEmbedder& embedder,
                                                Framework framework, const D3qnAgent* agent,
                                                const EnvPins& pins, int episodes,
                                                std::uint64_t cell_seed) {
    std::vector<EpisodeRecord> records;
    records.reserve(static_cast<std::size_t>(episodes));
    Rng rng(cell_seed);
    for (int i = 0; i < episodes; ++i) {
        const EnvDraw env = sample_environment(cfg, rng, pins);
        int steps = -1;
        int action_index = -1;
        if (framework == Framework::semaigc) {
            if (agent == nullptr) {
                throw std::invalid_argument("evaluate_cell: semaigc needs a trained agent");
            }
            const AgentAction act = agent->greedy(env.state);
            steps = act.transmitter_steps;
            action_index = act.index;
        }
        auto rec = run_episode(framework, env, cfg, schedule, denoiser, embedder, rng, steps,
                               action_index);
        rec.episode = i;
        records.push_back(std::move(rec));
    }
    return records;
}

struct CellAggregate {
    std::string axis;
    double x = 0.0;
    std::string framework;
    int n = 0;
    double mean_latency = 0.0;
    double stderr_latency = 0.0;
    double mean_satisfaction = 0.0;
    double stderr_satisfaction = 0.0;
    double failure_rate = 0.0;
    double mean_quality = 0.0;
    double stderr_quality = 0.0;
    double mean_steps = 0.0;
};

inline CellAggregate aggregate_records(const std::string& axis, double x,
                                       const std::string& framework,
                                       const std::vector<EpisodeRecord>& records) {
    CellAggregate agg;
    agg.axis = axis;
    agg.x = x;
    agg.framework = framework;
    agg.n = static_cast<int>(records.size());
    if (records.empty()) {
        return agg;
    }
    std::vector<double> lat;
    std::vector<double> sat;
    std::vector<double> qual;
    std::vector<double> steps;
    double failures = 0.0;
    for (const auto& r : records) {
        lat.push_back(r.total_s);
        sat.push_back(r.reward);
        steps.push_back(static_cast<double>(r.transmitter_steps));
        if (!std::isnan(r.quality)) {
            qual.push_back(r.quality);
        }
        failures += r.failed ? 1.0 : 0.0;
    }
    agg.mean_latency = stats::mean(lat);
    agg.stderr_latency = stats::stderr_of_mean(lat);
    agg.mean_satisfaction = stats::mean(sat);
    agg.stderr_satisfaction = stats::stderr_of_mean(sat);
    agg.failure_rate = failures / static_cast<double>(records.size());
    agg.mean_steps = stats::mean(steps);
    if (!qual.empty()) {
        agg.mean_quality = stats::mean(qual);
        agg.stderr_quality = stats::stderr_of_mean(qual);
    } else {
        agg.mean_quality = std::numeric_limits<double>::quiet_NaN();
        agg.stderr_quality = std::numeric_limits<double>::quiet_NaN();
    }
    return agg;
}

namespace detail {

inline const std::vector<std::string> kEpisodeHeader = {
    "axis",         "x",          "framework",   "episode",      "seed_tag",
    "snr_db",       "pacr_edge",  "pacr_local",  "req_low_s",    "req_high_s",
    "action_index", "tx_steps",   "sigma_c",     "transmission_s", "edge_compute_s",
    "local_compute_s", "total_s", "reward",      "failed",       "gate_failed",
    "mode_committed", "mode_matched", "quality"};

inline std::vector<std::string> episode_row(const std::string& axis, double x,
                                            const EpisodeRecord& r) {
    auto n = [](double v) { return CsvWriter::num(v); };
    return {axis,
            n(x),
            r.framework,
            std::to_string(r.episode),
            std::to_string(r.seed_tag),
            n(r.snr_db),
            n(r.pacr_edge),
            n(r.pacr_local),
            n(r.req_low_s),
            n(r.req_high_s),
            std::to_string(r.action_index),
            std::to_string(r.transmitter_steps),
            n(r.sigma_c),
            n(r.transmission_s),
            n(r.edge_compute_s),
            n(r.local_compute_s),
            n(r.total_s),
            n(r.reward),
            r.failed ? "1" : "0",
            r.gate_failed ? "1" : "0",
            r.mode_committed ? "1" : "0",
            r.mode_matched ? "1" : "0",
            std::isnan(r.quality) ? "" : n(r.quality)};
}

}  // namespace detail

struct missing_aggregate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Long-format plot files: one per figure family, rows (x, series, mean, stderr).
inline void emit_plot_data(const std::vector<CellAggregate>& aggregates,
                           const std::string& out_dir) {
    if (aggregates.empty()) {
        throw missing_aggregate("emit_plot_data: no aggregates to emit");
    }
    struct Family {
        const char* file;
        const char* axis;
        double CellAggregate::* mean;
        double CellAggregate::* err;
    };
    const Family families[] = {
        {"latency_vs_snr.csv", "snr", &CellAggregate::mean_latency,
         &CellAggregate::stderr_latency},
        {"satisfaction_vs_snr.csv", "snr", &CellAggregate::mean_satisfaction,
         &CellAggregate::stderr_satisfaction},
        {"latency_vs_pacr.csv", "pacr", &CellAggregate::mean_latency,
         &CellAggregate::stderr_latency},
        {"satisfaction_vs_pacr.csv", "pacr", &CellAggregate::mean_satisfaction,
         &CellAggregate::stderr_satisfaction},
    };
    for (const auto& fam : families) {
        CsvWriter csv((std::filesystem::path(out_dir) / fam.file).string(),
                      {"x", "series", "mean", "stderr"});
        for (const auto& agg : aggregates) {
            if (agg.axis != fam.axis) {
                continue;
            }
            csv.row({CsvWriter::num(agg.x), agg.framework, CsvWriter::num(agg.*fam.mean),
                     CsvWriter::num(agg.*fam.err)});
        }
    }
}

inline void write_reward_trace(const std::vector<EpisodeLog>& trace,
                               const std::string& out_dir) {
    CsvWriter csv((std::filesystem::path(out_dir) / "reward_vs_episode.csv").string(),
                  {"episode", "series", "reward", "moving_avg_50", "tx_steps"});
    double window_sum = 0.0;
    std::vector<double> window;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        window.push_back(trace[i].reward);
        window_sum += trace[i].reward;
        if (window.size() > 50) {
            window_sum -= window[window.size() - 51];
        }
        const double ma = window_sum / std::min<std::size_t>(window.size(), 50);
        csv.row({std::to_string(i), "semaigc", CsvWriter::num(trace[i].reward),
                 CsvWriter::num(ma), std::to_string(trace[i].transmitter_steps)});
    }
}

// Full experiment: train (or load) the agent, sweep the SNR and PACR grids
// for every requested framework, and emit all result files.
inline void run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto out_dir = std::filesystem::path(cfg.out_dir);
    std::filesystem::create_directories(out_dir);

    const NoiseSchedule schedule = cfg.schedule();
    const LabelEmbedder embedder = cfg.embedder();
    const Denoiser denoiser = AnalyticGmmDenoiser(cfg.mixture);

    bool needs_agent = false;
    for (const auto& name : cfg.frameworks) {
        if (framework_from_name(name) == Framework::semaigc) {
            needs_agent = true;
        }
    }

    std::optional<D3qnAgent> agent;
    if (needs_agent) {
        if (!cfg.weights_file.empty()) {
            std::ifstream in(cfg.weights_file);
            if (!in) {
                throw io_error("run_experiment: cannot read weights file " + cfg.weights_file);
            }
            nlohmann::json j;
            in >> j;
            agent = D3qnAgent::from_json(j);
        } else {
            const TrainResult result = train_root_agent(cfg);
            write_reward_trace(result.trace, out_dir.string());
            std::ofstream w(out_dir / "qnet.json");
            w << result.weights.dump(2) << "\n";
            agent = D3qnAgent::from_json(result.weights);
        }
    }

    CsvWriter episodes_csv((out_dir / "episodes.csv").string(), detail::kEpisodeHeader);
    std::vector<CellAggregate> aggregates;

    auto sweep = [&](const std::string& axis, const std::vector<double>& grid) {
        for (double x : grid) {
            EnvPins pins;
            if (axis == "snr") {
                pins.snr_db = x;
            } else {
                pins.pacr_edge = x;
            }
            for (const auto& name : cfg.frameworks) {
                const Framework fw = framework_from_name(name);
                const std::uint64_t cell_seed = detail::mix_seed(
                    cfg.seed, detail::tag_hash(axis + "/" + CsvWriter::num(x) + "/" + name));
                const auto records =
                    evaluate_cell(cfg, schedule, denoiser, embedder, fw,
                                  agent ? &*agent : nullptr, pins, cfg.eval_episodes,
                                  cell_seed);
                for (const auto& r : records) {
                    episodes_csv.row(detail::episode_row(axis, x, r));
                }
                aggregates.push_back(aggregate_records(axis, x, name, records));
            }
        }
    };
    sweep("snr", cfg.snr_grid);
    sweep("pacr", cfg.pacr_grid);
    episodes_csv.close();

    CsvWriter agg_csv((out_dir / "aggregates.csv").string(),
                      {"axis", "x", "framework", "n", "mean_latency_s", "stderr_latency_s",
                       "mean_satisfaction", "stderr_satisfaction", "failure_rate",
                       "mean_quality", "stderr_quality", "mean_tx_steps"});
    for (const auto& a : aggregates) {
        agg_csv.row({a.axis, CsvWriter::num(a.x), a.framework, std::to_string(a.n),
                     CsvWriter::num(a.mean_latency), CsvWriter::num(a.stderr_latency),
                     CsvWriter::num(a.mean_satisfaction), CsvWriter::num(a.stderr_satisfaction),
                     CsvWriter::num(a.failure_rate),
                     std::isnan(a.mean_quality) ? "" : CsvWriter::num(a.mean_quality),
                     std::isnan(a.stderr_quality) ? "" : CsvWriter::num(a.stderr_quality),
                     CsvWriter::num(a.mean_steps)});
    }
    agg_csv.close();

    emit_plot_data(aggregates, out_dir.string());

    nlohmann::json manifest = {
        {"config_hash", config_hash(cfg)},
        {"seed", cfg.seed},
        {"schedule_fingerprint", schedule.fingerprint()},
        {"version", "semaigc-0.1.0"},
        {"config", cfg},
    };
    std::ofstream m(out_dir / "manifest.json");
    m << manifest.dump(2) << "\n";
}

}  // namespace semaigc
