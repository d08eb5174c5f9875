// merge_rl: train, evaluate and inspect the ramp-merge agent.
//
//   merge_rl train --config PATH --out DIR [--seed U64]
//   merge_rl eval --checkpoint PATH --episodes N --seed U64 --out DIR [--config PATH]
//   merge_rl trace --checkpoint PATH --seed U64 --out PATH [--config PATH]
//   merge_rl gradcheck
//   merge_rl oracle [--seed U64] [--steps N] [--episodes N]
//
// Exit codes: 0 ok, 1 usage error, 2 runtime or numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "merge_rl/merge_rl.hpp"

namespace fs = std::filesystem;
using namespace merge_rl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("merge_rl");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("MERGE_RL_LOG")) {
        const std::string v = env;
        if (v == "error") spdlog::set_level(spdlog::level::err);
        else if (v == "info") spdlog::set_level(spdlog::level::info);
        else if (v == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("ignoring MERGE_RL_LOG={} (expected error, info or debug)", v);
    }
}

RunConfig config_or_default(const std::optional<std::string>& path) {
    if (!path) {
        RunConfig c;
        c.finalize();
        return c;
    }
    return load_config(*path);
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text_file(path, j.dump(2) + "\n");
}

struct TrainArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& args) {
    RunConfig cfg = load_config(args.config);
    if (args.seed) cfg.train.seed = *args.seed;
    spdlog::info("training {} env steps, seed {}", cfg.train.total_steps, cfg.train.seed);
    spdlog::debug("resolved config: {}", config_to_json(cfg).dump());

    MergeTask task(cfg.env, cfg.reward);
    std::int64_t successes = 0;
    auto out = train(cfg.train, cfg.net, task, [&](const EpisodeRecord& rec, std::int64_t step) {
        successes += rec.outcome == EpisodeStatus::Success;
        spdlog::debug("episode {} {} reward {:.3f} at step {}", rec.episode, to_string(rec.outcome), rec.reward.total,
                      step);
        if ((rec.episode + 1) % 100 == 0)
            spdlog::info("step {:>7}: {} episodes, {} successes", step, rec.episode + 1, successes);
    });

    write_training_outputs(out, args.out);
    write_json(fs::path(args.out) / "config.json", config_to_json(cfg));
    spdlog::info("{} updates, {} episodes; outputs in {}", out.metrics.updates, out.metrics.episodes.size(), args.out);
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::int64_t episodes = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::string> config;
};

int run_eval(const EvalArgs& args) {
    const RunConfig cfg = config_or_default(args.config);
    const auto nets = load_checkpoint(args.checkpoint, cfg.net);
    MergeTask task(cfg.env, cfg.reward);
    const auto rep = evaluate(task, nets.prediction, args.episodes, args.seed, cfg.train.action_hold, cfg.train.gamma);
    write_json(fs::path(args.out) / "eval_report.json", eval_report_to_json(rep, args.seed));
    if (rep.success_rate)
        spdlog::info("{} episodes: success {:.3f}, collision {:.3f}, timeout {:.3f}", rep.episodes, *rep.success_rate,
                     *rep.collision_rate, *rep.timeout_rate);
    else
        spdlog::info("no episodes run");
    return 0;
}

struct TraceArgs {
    std::string checkpoint;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::string> config;
};

int run_trace(const TraceArgs& args) {
    const RunConfig cfg = config_or_default(args.config);
    const auto nets = load_checkpoint(args.checkpoint, cfg.net);
    MergeTask task(cfg.env, cfg.reward);
    const fs::path path(args.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto f = csv::open(path);
    const auto ep = write_trace(task, nets.prediction, args.seed, cfg.train.action_hold, cfg.train.gamma, f);
    spdlog::info("trace: {} after {} ticks", to_string(ep.record.outcome), ep.record.steps);
    return 0;
}

int run_gradcheck() {
    constexpr double kTol = 1e-4;
    bool ok = true;
    auto report = [&](const std::string& name, double err) {
        std::cout << name << " max_rel_error " << err << (err < kTol ? "" : "  FAIL") << '\n';
        ok = ok && err < kTol;
    };
    report("qloss (100 batches)", gradcheck::qloss_max_error(100, 4, 17));
    for (auto act : {nn::Activation::Tanh, nn::Activation::ReLU, nn::Activation::Sigmoid, nn::Activation::Softplus,
                     nn::Activation::Identity}) {
        const std::vector<nn::LayerSpec> specs{{6, 16, act}, {16, 8, act}, {8, 2, nn::Activation::Identity}};
        report(std::string("mlp ") + std::string(nn::to_string(act)), gradcheck::network_max_error(specs, 20, 23));
    }
    return ok ? 0 : kExitRuntime;
}

struct OracleArgs {
    std::uint64_t seed = 1;
    std::int64_t steps = 100'000;
    std::int64_t episodes = 200;
};

int run_oracle(const OracleArgs& args) {
    const ToyMdpConfig mdp;
    const auto table = oracle_q_iteration(mdp);
    spdlog::info("oracle converged after {} sweeps, residual {:.2e}", table.iterations, table.max_residual);
    ToyTask task(mdp);
    const auto out = train(toy_train_config(args.seed, args.steps), toy_net_config(), task);
    const auto cmp = compare_with_oracle(out.nets.prediction, table, mdp, 1'000'000, args.episodes);
    std::cout << "oracle_return " << cmp.oracle_return << '\n'
              << "learned_return " << cmp.learned_return << '\n'
              << "relative_gap " << cmp.relative_gap << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Ramp-merge Q-learning with a quadratic action-value function"};
    app.require_subcommand(1);

    TrainArgs targs;
    auto* train_cmd = app.add_subcommand("train", "Train from a config file");
    train_cmd->add_option("--config", targs.config, "JSON config")->required();
    train_cmd->add_option("--out", targs.out, "Output directory")->required();
    train_cmd->add_option("--seed", targs.seed, "Overrides train.seed");

    EvalArgs eargs;
    auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
    eval_cmd->add_option("--checkpoint", eargs.checkpoint, "Checkpoint JSON")->required();
    eval_cmd->add_option("--episodes", eargs.episodes, "Episode count")->required()->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--seed", eargs.seed, "Seed of the first episode")->required();
    eval_cmd->add_option("--out", eargs.out, "Output directory")->required();
    eval_cmd->add_option("--config", eargs.config, "JSON config (defaults otherwise)");

    TraceArgs rargs;
    auto* trace_cmd = app.add_subcommand("trace", "Write one greedy episode as CSV");
    trace_cmd->add_option("--checkpoint", rargs.checkpoint, "Checkpoint JSON")->required();
    trace_cmd->add_option("--seed", rargs.seed, "Episode seed")->required();
    trace_cmd->add_option("--out", rargs.out, "Trace CSV path")->required();
    trace_cmd->add_option("--config", rargs.config, "JSON config (defaults otherwise)");

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");

    OracleArgs oargs;
    auto* oracle_cmd = app.add_subcommand("oracle", "Toy problem: learner versus value iteration");
    oracle_cmd->add_option("--seed", oargs.seed, "Training seed");
    oracle_cmd->add_option("--steps", oargs.steps, "Training steps")->check(CLI::NonNegativeNumber);
    oracle_cmd->add_option("--episodes", oargs.episodes, "Evaluation episodes")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n";
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return kExitUsage;
    }

    try {
        if (*train_cmd) return run_train(targs);
        if (*eval_cmd) return run_eval(eargs);
        if (*trace_cmd) return run_trace(rargs);
        if (*grad_cmd) return run_gradcheck();
        if (*oracle_cmd) return run_oracle(oargs);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
