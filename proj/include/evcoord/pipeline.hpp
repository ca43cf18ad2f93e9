#pragma once

// Batch pipeline shared by the CLI subcommands and the acceptance suite:
// run-config parsing, policy training, test-window evaluation, manifests.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcoord/eval.hpp"
#include "evcoord/experience.hpp"
#include "evcoord/fqi.hpp"
#include "evcoord/mdp.hpp"
#include "evcoord/sessions.hpp"
#include "evcoord/toml.hpp"

namespace evcoord {

struct RunConfig {
    MdpConfig mdp;
    GeneratorConfig generator;
    NetSpec net;
    FqiOptions fqi;
    int year_days = 365;
    int test_days = 92;           // test window = last test_days of the year
    std::vector<int> ntraj_axis = {1000};
    std::vector<int> months_axis = {1};
    int bench_repetitions = 3;
    std::vector<std::uint64_t> train_seeds = {1};
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string canonical_config;  // for hashing/manifests

    int train_pool_days() const { return year_days - test_days; }
    int test_first_day() const { return year_days - test_days + 1; }

    void validate() const {
        mdp.validate();
        generator.validate(mdp);
        if (test_days < 1 || test_days >= year_days)
            throw std::invalid_argument("RunConfig: experiment.test_days out of range");
        if (ntraj_axis.empty() || months_axis.empty() || train_seeds.empty())
            throw std::invalid_argument("RunConfig: experiment axes must be nonempty");
        for (int n : ntraj_axis)
            if (n < 1) throw std::invalid_argument("RunConfig: experiment.ntraj entries must be >= 1");
        for (int m : months_axis)
            if (m < 1 || m * 30 > train_pool_days())
                throw std::invalid_argument(
                    "RunConfig: experiment.months entries must keep training inside the train pool "
                    "(disjoint from the test window)");
    }

    static RunConfig from_toml(const Toml& toml) {
        RunConfig c;
        c.mdp.s_max = static_cast<int>(toml.get_int("mdp.s_max", 12));
        c.mdp.n_max = static_cast<int>(toml.get_int("mdp.n_max", 10));
        c.mdp.slot_hours = toml.get_double("mdp.slot_hours", 2.0);
        c.mdp.penalty_weight = toml.get_double("mdp.penalty_weight", c.mdp.s_max + 1.0);

        c.generator.arrival_weights = toml.get_double_array("generator.arrival_weights", {});
        c.generator.duration_geometric_p = toml.get_double("generator.duration_geometric_p", 0.35);
        c.generator.mean_sessions_per_day = toml.get_double("generator.mean_sessions_per_day", 8.0);
        c.generator.seed = static_cast<std::uint64_t>(toml.get_int("generator.seed", 1));

        c.net.hidden1 = static_cast<int>(toml.get_int("network.hidden1", 64));
        c.net.hidden2 = static_cast<int>(toml.get_int("network.hidden2", 64));
        c.net.learning_rate = toml.get_double("network.learning_rate", 1e-3);
        c.net.momentum = toml.get_double("network.momentum", 0.9);
        c.net.epochs = static_cast<int>(toml.get_int("network.epochs", 20));
        c.net.batch_size = static_cast<int>(toml.get_int("network.batch_size", 256));

        c.fqi.action_cap = static_cast<std::uint64_t>(toml.get_int("fqi.action_cap", 200000));
        c.fqi.subsample = static_cast<size_t>(toml.get_int("fqi.subsample", 4096));
        c.fqi.tie_tolerance = toml.get_double("fqi.tie_tolerance", 0.0);

        c.year_days = static_cast<int>(toml.get_int("experiment.year_days", 365));
        c.test_days = static_cast<int>(toml.get_int("experiment.test_days", 92));
        c.seed = static_cast<std::uint64_t>(toml.get_int("experiment.seed", 1));
        c.out_dir = toml.get_string("experiment.out_dir", "out");
        c.ntraj_axis.clear();
        for (long long v : toml.get_int_array("experiment.ntraj", {1000}))
            c.ntraj_axis.push_back(static_cast<int>(v));
        c.months_axis.clear();
        for (long long v : toml.get_int_array("experiment.months", {1}))
            c.months_axis.push_back(static_cast<int>(v));
        c.bench_repetitions = static_cast<int>(toml.get_int("experiment.bench_repetitions", 3));
        c.train_seeds.clear();
        for (long long v : toml.get_int_array("experiment.train_seeds", {1}))
            c.train_seeds.push_back(static_cast<std::uint64_t>(v));
        c.canonical_config = toml.canonical();
        c.validate();
        return c;
    }

    std::uint64_t config_hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (char ch : canonical_config) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ull;
        }
        return h;
    }
};

/// Deterministic contiguous training period within the train pool, derived
/// from a period seed.
inline int training_period_start(const RunConfig& cfg, int months, std::uint64_t period_seed) {
    const int n_days = months * 30;
    std::mt19937_64 rng(detail::splitmix64(period_seed ^ 0x7261696eull));
    const int max_start = std::max(1, cfg.train_pool_days() - n_days + 1);
    return std::uniform_int_distribution<int>(1, max_start)(rng);
}

inline QNetwork train_policy(const std::vector<EvSession>& sessions, int first_day, int n_days,
                             int n_traj, Mode mode, const RunConfig& cfg, std::uint64_t seed,
                             ExperienceSet* set_out = nullptr) {
    ExperienceSet set = build_experience_set(sessions, first_day, n_days, n_traj, mode, cfg.mdp, seed);
    NetSpec spec = cfg.net;
    spec.seed = seed;
    FqiOptions opts = cfg.fqi;
    opts.seed = seed;
    QNetwork net = fit_fqi(set, cfg.mdp, spec, opts);
    if (set_out) *set_out = std::move(set);
    return net;
}

/// Evaluate the trained policies plus the reference schedulers over the test
/// window. Zero-demand days are excluded (their optimal cost is zero).
/// Old-mode rollout shortfall is reported separately and never folded into
/// the normalized cost.
inline EvaluationReport evaluate_policies(const std::vector<EvSession>& sessions, const QNetwork& q_old,
                                          const QNetwork& q_updated, const RunConfig& cfg,
                                          std::uint64_t fqi_seed_old, std::uint64_t fqi_seed_updated) {
    EvaluationReport report;
    const std::vector<std::string> policies = {"optimal", "bau", "heuristic", "rl_old", "rl_updated"};
    for (const auto& p : policies) {
        report.day_costs[p] = {};
        report.shortfall_slots[p] = 0;
    }

    // flexibility metrics aggregate sessions across all test days
    std::map<std::string, std::vector<std::vector<int>>> all_patterns;
    std::vector<EvSession> all_sessions;
    bool rl_old_finished_everywhere = true;

    FqiOptions opts_old = cfg.fqi;
    opts_old.seed = fqi_seed_old;
    FqiOptions opts_updated = cfg.fqi;
    opts_updated.seed = fqi_seed_updated;

    for (int day = cfg.test_first_day(); day <= cfg.year_days; ++day) {
        std::vector<EvSession> day_sessions;
        for (const auto& s : sessions)
            if (s.day == day) day_sessions.push_back(s);
        int demand = 0;
        for (const auto& s : day_sessions) demand += s.charge_slots;
        if (demand == 0) continue;  // optimal cost would be zero

        const DaySchedule opt = optimal_schedule(day_sessions, cfg.mdp);
        const DaySchedule bau = bau_schedule(day_sessions, cfg.mdp);
        const DaySchedule heur = heuristic_schedule(day_sessions, cfg.mdp);
        const RolloutResult rl_old = rollout_policy(
            day_sessions,
            [&](const StateMatrix& s) { return greedy_action(q_old, s, Mode::old_cost, cfg.mdp, opts_old); },
            cfg.mdp);
        const RolloutResult rl_upd = rollout_policy(
            day_sessions,
            [&](const StateMatrix& s) {
                return greedy_action(q_updated, s, Mode::updated, cfg.mdp, opts_updated);
            },
            cfg.mdp);

        report.days.push_back(day);
        report.day_costs["optimal"].push_back(day_cost(opt.load, cfg.mdp));
        report.day_costs["bau"].push_back(day_cost(bau.load, cfg.mdp));
        report.day_costs["heuristic"].push_back(day_cost(heur.load, cfg.mdp));
        report.day_costs["rl_old"].push_back(day_cost(rl_old.schedule.load, cfg.mdp));
        report.day_costs["rl_updated"].push_back(day_cost(rl_upd.schedule.load, cfg.mdp));
        report.shortfall_slots["rl_old"] += rl_old.shortfall_slots;
        report.shortfall_slots["rl_updated"] += rl_upd.shortfall_slots;

        all_sessions.insert(all_sessions.end(), day_sessions.begin(), day_sessions.end());
        for (const auto& [name, sched] :
             std::initializer_list<std::pair<std::string, const DaySchedule*>>{
                 {"optimal", &opt}, {"bau", &bau}, {"heuristic", &heur}, {"rl_updated", &rl_upd.schedule}})
            all_patterns[name].insert(all_patterns[name].end(), sched->charge_slots.begin(),
                                      sched->charge_slots.end());
        if (rl_old.shortfall_slots == 0)
            all_patterns["rl_old"].insert(all_patterns["rl_old"].end(),
                                          rl_old.schedule.charge_slots.begin(),
                                          rl_old.schedule.charge_slots.end());
        else
            rl_old_finished_everywhere = false;
    }
    if (report.days.empty()) throw std::runtime_error("evaluate_policies: empty test window");

    const auto& opt_costs = report.day_costs["optimal"];
    for (const auto& p : policies) report.normalized[p] = normalized_cost(report.day_costs[p], opt_costs);
    for (const auto& p : policies) {
        if (p == "rl_old" && !rl_old_finished_everywhere) continue;  // needs full-charge schedules
        report.flex[p] = flexibility_metrics(all_patterns[p], all_sessions, cfg.mdp);
    }
    return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["days"] = report.days;
    for (const auto& [p, costs] : report.day_costs) j["day_costs"][p] = costs;
    for (const auto& [p, v] : report.normalized) j["normalized_cost"][p] = v;
    for (const auto& [p, v] : report.shortfall_slots) j["shortfall_slots"][p] = v;
    for (const auto& [p, m] : report.flex) {
        nlohmann::json jm;
        jm["mean_e_flex"] = m.mean_e_flex;
        jm["mean_t_flex"] = m.mean_t_flex;
        jm["flex_sessions"] = m.flex_sessions;
        j["flex"][p] = jm;
    }
    return j;
}

/// Run manifest: everything needed to reproduce the artifacts bit for bit.
inline void write_manifest(const RunConfig& cfg, const std::string& command,
                           const std::vector<std::string>& artifacts, const std::string& path) {
    nlohmann::json j;
    j["tool"] = "evcoord";
    j["version"] = 1;
    j["command"] = command;
    j["config_hash"] = cfg.config_hash();
    j["seed"] = cfg.seed;
    j["generator_seed"] = cfg.generator.seed;
    j["train_seeds"] = cfg.train_seeds;
    j["artifacts"] = artifacts;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << j.dump(2) << '\n';
}

}  // namespace evcoord
