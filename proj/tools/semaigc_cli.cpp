// Command-line front end: train the workload-adaptation agent, run framework
// comparison sweeps, self-check the reverse-process and latency propositions,
// or dump schedule documents.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semaigc/experiment.hpp"
#include "semaigc/harness.hpp"

namespace {

using namespace semaigc;

void emit_error(const std::string& where, const std::string& message) {
    const nlohmann::json err = {{"error", message}, {"context", where}};
    std::cerr << err.dump() << "\n";
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) {
        return ExperimentConfig{};
    }
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config file: " + path);
    }
    nlohmann::json j;
    in >> j;
    return j.get<ExperimentConfig>();
}

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> frameworks;
    std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config");
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--out", opts.out_dir, "output directory override");
    cmd->add_option("--frameworks", opts.frameworks,
                    "framework tags to evaluate (subset of semaigc non_root non_finetune "
                    "edge local)")
        ->delimiter(',');
    cmd->add_option("--episodes", opts.episodes, "episode count override");
}

ExperimentConfig resolve(const CommonOpts& opts, bool episodes_are_training) {
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    if (!opts.out_dir.empty()) {
        cfg.out_dir = opts.out_dir;
    }
    if (!opts.frameworks.empty()) {
        cfg.frameworks = opts.frameworks;
    }
    if (opts.episodes) {
        (episodes_are_training ? cfg.train_episodes : cfg.eval_episodes) = *opts.episodes;
    }
    cfg.validate();
    return cfg;
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    const nlohmann::json manifest = {{"config_hash", config_hash(cfg)},
                                     {"seed", cfg.seed},
                                     {"version", "semaigc-0.1.0"},
                                     {"config", cfg}};
    std::ofstream m(dir / "manifest.json");
    m << manifest.dump(2) << "\n";
}

int cmd_train(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve(opts, /*episodes_are_training=*/true);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    const TrainResult result = train_root_agent(cfg);
    write_reward_trace(result.trace, dir.string());
    std::ofstream w(dir / "qnet.json");
    w << result.weights.dump(2) << "\n";
    write_manifest(cfg, dir);
    double tail = 0.0;
    const std::size_t window = std::min<std::size_t>(100, result.trace.size());
    for (std::size_t i = result.trace.size() - window; i < result.trace.size(); ++i) {
        tail += result.trace[i].reward;
    }
    std::printf("trained %d episodes; final-%zu-episode mean reward %.4f\n", cfg.train_episodes,
                window, tail / static_cast<double>(window));
    std::printf("wrote %s and %s\n", (dir / "qnet.json").c_str(),
                (dir / "reward_vs_episode.csv").c_str());
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve(opts, /*episodes_are_training=*/false);
    run_experiment(cfg);
    std::printf("evaluation sweeps written to %s\n", cfg.out_dir.c_str());
    return 0;
}

// Independent re-derivation of the channel-aware reverse step's conditional
// mean: build the joint Gaussian of the noising chain explicitly and
// condition step by step. Kept free of the library's reverse-process code.
struct ChainOracle {
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;

    ChainOracle(double mu0, double s0, const std::vector<double>& alpha,
                const std::vector<double>& step_var) {
        const std::size_t n = alpha.size() + 1;
        mean.assign(n, 0.0);
        cov.assign(n, std::vector<double>(n, 0.0));
        mean[0] = mu0;
        cov[0][0] = s0 * s0;
        for (std::size_t t = 1; t < n; ++t) {
            const double ra = std::sqrt(alpha[t - 1]);
            mean[t] = ra * mean[t - 1];
            for (std::size_t u = 0; u < t; ++u) {
                cov[t][u] = cov[u][t] = ra * cov[t - 1][u];
            }
            cov[t][t] = alpha[t - 1] * cov[t - 1][t - 1] + step_var[t - 1];
        }
    }

    double cond_mean(std::size_t i, std::size_t j, double v) const {
        return mean[i] + cov[i][j] / cov[j][j] * (v - mean[j]);
    }
};

int cmd_oracle() {
    int failures = 0;

    // Proposition 1: exact posterior means on 1-D Gaussian chains.
    {
        const auto base = build_linear_schedule(4, 0.05, 0.4);
        const double mu0 = 1.5;
        const double s0 = 0.5;
        double worst = 0.0;
        bool bitwise_ok = true;
        for (int t_bar = 1; t_bar <= 4; ++t_bar) {
            for (double sigma : {0.0, 0.1, 0.5, 1.0}) {
                const auto cas = build_channel_aware_schedule(base, sigma, t_bar);
                MixtureSpec spec;
                Mixture mix;
                mix.components.push_back(GaussianComponent{1.0, {mu0}, {s0 * s0}});
                spec.by_label[0] = mix;
                const Denoiser den = AnalyticGmmDenoiser(spec);
                std::vector<double> alphas;
                std::vector<double> qs;
                for (int t = 1; t <= t_bar; ++t) {
                    alphas.push_back(base.alpha_at(t));
                    qs.push_back(1.0 - base.alpha_at(t) + sigma * sigma * cas.gamma_at(t));
                }
                const ChainOracle oracle(mu0, s0, alphas, qs);
                Rng rng(2024);
                double zt = oracle.mean[static_cast<std::size_t>(t_bar)] +
                            std::sqrt(oracle.cov[static_cast<std::size_t>(t_bar)]
                                               [static_cast<std::size_t>(t_bar)]) *
                                rng.normal();
                for (int t = t_bar; t >= 1; --t) {
                    Latent z;
                    z.values = {zt};
                    z.step = t;
                    const auto mean =
                        reverse_step_channel_aware_mean(z, t, den, Guidance{0, {}}, cas);
                    const double want = oracle.cond_mean(static_cast<std::size_t>(t - 1),
                                                         static_cast<std::size_t>(t), zt);
                    worst = std::max(worst,
                                     std::fabs(mean[0] - want) / std::max(1.0, std::fabs(want)));
                    zt = want;
                }
                if (sigma == 0.0) {
                    Rng ra(7);
                    Rng rb(7);
                    Latent z;
                    z.values = {0.8};
                    z.step = t_bar;
                    Latent za = z;
                    Latent zb = z;
                    for (int t = t_bar; t >= 1; --t) {
                        za = reverse_step(za, t, den, Guidance{0, {}}, base, ra);
                        zb = reverse_step_channel_aware(zb, t, den, Guidance{0, {}}, cas, rb);
                        bitwise_ok = bitwise_ok && za.values == zb.values;
                    }
                }
            }
        }
        const bool ok = worst <= 1e-6 && bitwise_ok;
        failures += ok ? 0 : 1;
        std::printf("[%s] reverse-step oracle: max relative mean error %.3e (tol 1e-6), "
                    "zero-noise trajectories %s\n",
                    ok ? "PASS" : "FAIL", worst, bitwise_ok ? "bitwise-equal" : "DIVERGED");
    }

    // Proposition 2: compression bound vs direct latency comparison.
    {
        Rng rng(97);
        const int draws = 1000;
        int agree = 0;
        for (int i = 0; i < draws; ++i) {
            const LinkSpec link{rng.uniform(1e3, 2e7), rng.uniform(-6.0, 15.0)};
            const ComputeSpec edge{rng.uniform(1e7, 1e10),
                                   1 + static_cast<int>(rng.integer(64)), rng.uniform(),
                                   rng.uniform(1e2, 1e6), 0.0};
            const ComputeSpec local{rng.uniform(1e7, 1e10),
                                    1 + static_cast<int>(rng.integer(64)),
                                    edge.parallel_fraction, rng.uniform(1e2, 1e6), 0.0};
            const double o_s = rng.uniform(1e2, 1e7);
            const ContentSizes sizes{o_s, o_s * rng.uniform(0.01, 2.0)};
            const auto r = semaigc_beats_edge(sizes, link, edge, local, 20,
                                              static_cast<int>(rng.integer(21)));
            agree += r.beats_edge == r.bound_satisfied ? 1 : 0;
        }
        const bool ok = agree == draws;
        failures += ok ? 0 : 1;
        std::printf("[%s] latency-advantage bound: %d/%d draws agree with the direct "
                    "comparison\n",
                    ok ? "PASS" : "FAIL", agree, draws);
    }
    return failures == 0 ? 0 : 1;
}

int cmd_schedule(const CommonOpts& opts, double sigma, int t_bar, const std::string& file) {
    const ExperimentConfig cfg = resolve(opts, false);
    const NoiseSchedule base = cfg.schedule();
    nlohmann::json doc;
    if (t_bar > 0) {
        const auto cas = build_channel_aware_schedule(base, sigma, t_bar, cfg.gamma_ratio);
        doc = schedule_to_json(base, &cas);
    } else {
        doc = schedule_to_json(base);
    }
    if (file.empty()) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ofstream out(file);
        if (!out) {
            throw io_error("cannot write schedule file: " + file);
        }
        out << doc.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"split diffusion semantic communication simulator"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    auto* train = app.add_subcommand("train", "train the workload-adaptation agent");
    add_common(train, train_opts);

    CommonOpts eval_opts;
    auto* eval = app.add_subcommand("eval", "run framework comparison sweeps");
    add_common(eval, eval_opts);

    auto* oracle = app.add_subcommand("oracle", "run the reverse-step and latency-bound "
                                                "oracle suites");

    CommonOpts sched_opts;
    double sigma = 0.0;
    int t_bar = 0;
    std::string sched_file;
    auto* schedule = app.add_subcommand("schedule", "dump the noise schedule document");
    add_common(schedule, sched_opts);
    schedule->add_option("--sigma", sigma, "channel semantic-noise std");
    schedule->add_option("--t-bar", t_bar, "fine-tuning steps (0: base schedule only)");
    schedule->add_option("--file", sched_file, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
        if (train->parsed()) {
            return cmd_train(train_opts);
        }
        if (eval->parsed()) {
            return cmd_eval(eval_opts);
        }
        if (oracle->parsed()) {
            return cmd_oracle();
        }
        if (schedule->parsed()) {
            return cmd_schedule(sched_opts, sigma, t_bar, sched_file);
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        emit_error("argument parsing", e.what());
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    } catch (const std::exception& e) {
        emit_error(argc > 1 ? argv[1] : "cli", e.what());
        return 2;
    }
    return 0;
}
