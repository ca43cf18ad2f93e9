// evcoord: batch pipeline driver for the EV charging coordination experiments.
//
// Subcommands: gen-sessions, gen-experience, train, evaluate, bench.
// Every stage is seeded and writes a manifest next to its artifacts so runs
// can be reproduced exactly.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "evcoord/evcoord.hpp"

namespace fs = std::filesystem;
using namespace evcoord;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string sessions_path;
    std::int64_t seed_override = -1;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = RunConfig::from_toml(Toml::parse_file(args.config_path));
    if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::vector<EvSession> load_or_generate_sessions(const RunConfig& cfg, const CommonArgs& args) {
    if (!args.sessions_path.empty()) return load_sessions_csv(args.sessions_path, cfg.mdp).sessions;
    const std::string default_path = cfg.out_dir + "/sessions.csv";
    if (fs::exists(default_path)) return load_sessions_csv(default_path, cfg.mdp).sessions;
    return generate_synthetic(cfg.generator, cfg.mdp, cfg.year_days).sessions;
}

std::string checkpoint_path(const RunConfig& cfg, Mode mode, int n_traj, int months, std::uint64_t seed) {
    return cfg.out_dir + "/qnet_" + to_string(mode) + "_n" + std::to_string(n_traj) + "_m" +
           std::to_string(months) + "_s" + std::to_string(seed) + ".evqn";
}

void echo(const std::vector<std::string>& artifacts) {
    for (const auto& path : artifacts) std::cout << path << '\n';
}

int cmd_gen_sessions(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    GenerationResult gen = generate_synthetic(cfg.generator, cfg.mdp, cfg.year_days);
    const std::string csv = cfg.out_dir + "/sessions.csv";
    save_sessions_csv(csv, gen.sessions);
    if (gen.truncated > 0)
        std::cerr << "gen-sessions: " << gen.truncated << " sessions dropped (no free station)\n";
    write_manifest(cfg, "gen-sessions", {csv}, cfg.out_dir + "/manifest_gen-sessions.json");
    echo({csv, cfg.out_dir + "/manifest_gen-sessions.json"});
    return 0;
}

int cmd_gen_experience(const CommonArgs& args, const std::string& mode_str, int n_traj, int months) {
    RunConfig cfg = load_config(args);
    const Mode mode = mode_from_string(mode_str);
    const auto sessions = load_or_generate_sessions(cfg, args);
    const int first_day = training_period_start(cfg, months, cfg.seed);
    ExperienceSet set =
        build_experience_set(sessions, first_day, months * 30, n_traj, mode, cfg.mdp, cfg.seed);
    const std::string csv = cfg.out_dir + "/experience_" + mode_str + "_n" + std::to_string(n_traj) +
                            "_m" + std::to_string(months) + "_s" + std::to_string(cfg.seed) + ".csv";
    save_experience_csv(csv, set);
    write_manifest(cfg, "gen-experience", {csv}, cfg.out_dir + "/manifest_gen-experience.json");
    echo({csv, cfg.out_dir + "/manifest_gen-experience.json"});
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& mode_str, int n_traj, int months) {
    RunConfig cfg = load_config(args);
    const Mode mode = mode_from_string(mode_str);
    const auto sessions = load_or_generate_sessions(cfg, args);
    const int first_day = training_period_start(cfg, months, cfg.seed);

    ExperienceSet set;
    const auto t0 = std::chrono::steady_clock::now();
    QNetwork net = train_policy(sessions, first_day, months * 30, n_traj, mode, cfg, cfg.seed, &set);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string ckpt = checkpoint_path(cfg, mode, n_traj, months, cfg.seed);
    net.save(ckpt);
    const std::string log = ckpt + ".log";
    {
        std::ofstream out(log, std::ios::binary);
        out << "mode=" << mode_str << " n_traj=" << n_traj << " months=" << months
            << " first_day=" << first_day << " seed=" << cfg.seed << "\n"
            << "tuples=" << set.tuples.size() << " trajectories=" << set.provenance.total_trajectories
            << " underfilled_days=" << set.provenance.underfilled_days << "\n"
            << "train_seconds=" << seconds << "\n";
    }
    write_manifest(cfg, "train", {ckpt, log}, cfg.out_dir + "/manifest_train_" + mode_str + ".json");
    echo({ckpt, log});
    return 0;
}

int cmd_evaluate(const CommonArgs& args, std::string qnet_old, std::string qnet_updated,
                 std::int64_t seed_old, std::int64_t seed_updated, int n_traj, int months) {
    RunConfig cfg = load_config(args);
    const auto sessions = load_or_generate_sessions(cfg, args);
    const std::uint64_t s_old = seed_old >= 0 ? static_cast<std::uint64_t>(seed_old) : cfg.seed;
    const std::uint64_t s_upd = seed_updated >= 0 ? static_cast<std::uint64_t>(seed_updated) : cfg.seed;
    if (qnet_old.empty()) qnet_old = checkpoint_path(cfg, Mode::old_cost, n_traj, months, s_old);
    if (qnet_updated.empty()) qnet_updated = checkpoint_path(cfg, Mode::updated, n_traj, months, s_upd);

    NetSpec spec = cfg.net;
    QNetwork q_old = QNetwork::load(qnet_old, spec);
    QNetwork q_updated = QNetwork::load(qnet_updated, spec);

    EvaluationReport report = evaluate_policies(sessions, q_old, q_updated, cfg, s_old, s_upd);
    const std::string costs_csv = cfg.out_dir + "/costs.csv";
    const std::string flex_csv = cfg.out_dir + "/flex.csv";
    const std::string json_path = cfg.out_dir + "/report.json";
    write_costs_csv(report, costs_csv);
    write_flex_csv(report, cfg.mdp, flex_csv);
    {
        std::ofstream out(json_path, std::ios::binary);
        out << report_to_json(report).dump(2) << '\n';
    }
    write_manifest(cfg, "evaluate", {costs_csv, flex_csv, json_path},
                   cfg.out_dir + "/manifest_evaluate.json");
    echo({costs_csv, flex_csv, json_path});
    for (const auto& [policy, value] : report.normalized)
        std::cout << "normalized_cost " << policy << " = " << value << '\n';
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    const auto sessions = load_or_generate_sessions(cfg, args);
    BenchReport report =
        run_benchmark(sessions, cfg.ntraj_axis, cfg.months_axis, cfg.bench_repetitions, cfg.mdp,
                      cfg.net, cfg.fqi, cfg.seed, cfg.train_pool_days());
    const std::string csv = cfg.out_dir + "/bench.csv";
    write_bench_csv(report, csv);
    write_manifest(cfg, "bench", {csv}, cfg.out_dir + "/manifest_bench.json");
    echo({csv});
    for (const auto& cell : report.cells)
        std::cout << "reduction n_traj=" << cell.n_traj << " months=" << cell.months << " -> "
                  << cell.reduction() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging coordination: data generation, batch RL training, evaluation"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string mode = "updated";
    int n_traj = 1000;
    int months = 1;
    std::string qnet_old, qnet_updated;
    std::int64_t seed_old = -1, seed_updated = -1;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", common.config_path, "run config (TOML)");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", common.out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", common.seed_override, "seed override");
        cmd->add_option("--sessions", common.sessions_path, "sessions CSV (otherwise generated)");
    };

    auto* gen_sessions = app.add_subcommand("gen-sessions", "generate the synthetic session year");
    add_common(gen_sessions);

    auto* gen_experience = app.add_subcommand("gen-experience", "build an experience set");
    add_common(gen_experience);
    gen_experience->add_option("--mode", mode, "old|updated");
    gen_experience->add_option("--ntraj", n_traj, "trajectories per day");
    gen_experience->add_option("--months", months, "training period length");

    auto* train = app.add_subcommand("train", "train a policy with fitted Q-iteration");
    add_common(train);
    train->add_option("--mode", mode, "old|updated");
    train->add_option("--ntraj", n_traj, "trajectories per day");
    train->add_option("--months", months, "training period length");

    auto* evaluate = app.add_subcommand("evaluate", "evaluate policies on the test window");
    add_common(evaluate);
    evaluate->add_option("--qnet-old", qnet_old, "old-mode checkpoint");
    evaluate->add_option("--qnet-updated", qnet_updated, "updated-mode checkpoint");
    evaluate->add_option("--seed-old", seed_old, "training seed of the old checkpoint");
    evaluate->add_option("--seed-updated", seed_updated, "training seed of the updated checkpoint");
    evaluate->add_option("--ntraj", n_traj, "n_traj of the default checkpoint names");
    evaluate->add_option("--months", months, "months of the default checkpoint names");

    auto* bench = app.add_subcommand("bench", "time the two pipelines over the config grid");
    add_common(bench);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_sessions->parsed()) return cmd_gen_sessions(common);
        if (gen_experience->parsed()) return cmd_gen_experience(common, mode, n_traj, months);
        if (train->parsed()) return cmd_train(common, mode, n_traj, months);
        if (evaluate->parsed()) return cmd_evaluate(common, qnet_old, qnet_updated, seed_old,
                                                    seed_updated, n_traj, months);
        if (bench->parsed()) return cmd_bench(common);
    } catch (const std::exception& e) {
        std::cerr << "evcoord: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
