#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "evcoord/baselines.hpp"
#include "evcoord/experience.hpp"
#include "evcoord/fqi.hpp"
#include "evcoord/mdp.hpp"
#include "evcoord/sessions.hpp"

namespace evcoord {

/// Day-level demand cost: sum over slots of the squared fraction of stations
/// drawing power.
inline double day_cost(const std::vector<int>& loads, const MdpConfig& cfg) {
    if (static_cast<int>(loads.size()) != cfg.s_max)
        throw std::invalid_argument("day_cost: loads must have s_max entries");
    double total = 0;
    for (int l : loads) {
        if (l < 0 || l > cfg.n_max) throw std::invalid_argument("day_cost: load out of range");
        const double f = static_cast<double>(l) / cfg.n_max;
        total += f * f;
    }
    return total;
}

/// Mean over days of the per-day cost ratio against the perfect-knowledge
/// optimum. Days with zero optimal cost must be excluded by the caller.
inline double normalized_cost(const std::vector<double>& policy_costs,
                              const std::vector<double>& optimal_costs) {
    if (policy_costs.empty()) throw std::invalid_argument("normalized_cost: empty test set");
    if (policy_costs.size() != optimal_costs.size())
        throw std::invalid_argument("normalized_cost: day-set mismatch");
    double total = 0;
    for (size_t i = 0; i < policy_costs.size(); ++i) {
        if (!(optimal_costs[i] > 0))
            throw std::invalid_argument("normalized_cost: optimal day cost must be > 0");
        total += policy_costs[i] / optimal_costs[i];
    }
    return total / static_cast<double>(policy_costs.size());
}

using PolicyFn = std::function<Action(const StateMatrix&)>;

struct RolloutResult {
    DaySchedule schedule;     // realized loads and per-session charge slots
    int shortfall_slots = 0;  // charge demand stranded at departure
};

/// Roll a policy through a day at car level, mirroring the aggregate
/// transition dynamics: within a diagonal the most urgent cars charge first
/// (smallest remaining connection, then smallest remaining charge, then
/// session order). No foresight: arrivals are injected as they occur.
inline RolloutResult rollout_policy(const std::vector<EvSession>& day_sessions, const PolicyFn& policy,
                                    const MdpConfig& cfg) {
    struct Car {
        int depart;
        int charge;
        size_t session;
    };
    RolloutResult result;
    result.schedule.load.assign(static_cast<size_t>(cfg.s_max), 0);
    result.schedule.charge_slots.assign(day_sessions.size(), {});

    std::vector<Car> cars;
    for (size_t i = 0; i < day_sessions.size(); ++i)
        if (day_sessions[i].arrival_slot == 1)
            cars.push_back({day_sessions[i].duration_slots, day_sessions[i].charge_slots, i});

    for (int t = 1; t <= cfg.s_max; ++t) {
        std::vector<ConnectedCar> as_bins;
        as_bins.reserve(cars.size());
        for (const auto& c : cars) as_bins.push_back({c.depart, c.charge});
        const StateMatrix state = state_from_cars(as_bins, t, cfg);
        const Action u = policy(state);
        const DiagonalTotals totals = diagonal_totals(state, cfg);
        if (!action_feasible(u, totals)) throw std::runtime_error("rollout_policy: infeasible action");

        // charge the chosen count per diagonal, most urgent first
        std::vector<size_t> order(cars.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&cars](size_t a, size_t b) {
            return std::tie(cars[a].depart, cars[a].charge, cars[a].session) <
                   std::tie(cars[b].depart, cars[b].charge, cars[b].session);
        });
        std::vector<int> remaining = u.counts;
        for (size_t idx : order) {
            Car& car = cars[idx];
            const int d = car.depart - car.charge;
            if (remaining[static_cast<size_t>(d)] > 0) {
                --remaining[static_cast<size_t>(d)];
                --car.charge;
                result.schedule.charge_slots[car.session].push_back(t);
                ++result.schedule.load[static_cast<size_t>(t - 1)];
            }
        }

        // time shift, clamping and departures
        std::vector<Car> survivors;
        for (Car& car : cars) {
            --car.depart;
            if (car.charge > car.depart) {
                result.shortfall_slots += car.charge - car.depart;
                car.charge = car.depart;
            }
            if (car.depart > 0 && car.charge > 0) survivors.push_back(car);
        }
        cars = std::move(survivors);

        if (t < cfg.s_max)
            for (size_t i = 0; i < day_sessions.size(); ++i)
                if (day_sessions[i].arrival_slot == t + 1)
                    cars.push_back({day_sessions[i].duration_slots, day_sessions[i].charge_slots, i});
    }
    return result;
}

struct FlexMetrics {
    std::vector<double> e_flex_by_arrival;  // s_max entries; NaN where no flex sessions arrived
    std::vector<double> t_flex_by_arrival;
    double mean_e_flex = 0.0;  // over all sessions with d > c
    double mean_t_flex = 0.0;
    int flex_sessions = 0;
};

/// Energy/time flexibility utilization per arrival slot. A session's BAU
/// window is its first c slots; deferred energy counts the charged slots
/// outside that window; the shiftable energy is min(c, d-c). Sessions with
/// d == c have no flex window and are excluded.
inline FlexMetrics flexibility_metrics(const std::vector<std::vector<int>>& charge_slots,
                                       const std::vector<EvSession>& sessions, const MdpConfig& cfg) {
    if (charge_slots.size() != sessions.size())
        throw std::invalid_argument("flexibility_metrics: schedule/session mismatch");

    std::vector<double> e_sum(static_cast<size_t>(cfg.s_max), 0), t_sum(static_cast<size_t>(cfg.s_max), 0);
    std::vector<int> n(static_cast<size_t>(cfg.s_max), 0);
    FlexMetrics out;
    for (size_t i = 0; i < sessions.size(); ++i) {
        const EvSession& s = sessions[i];
        if (static_cast<int>(charge_slots[i].size()) != s.charge_slots)
            throw std::invalid_argument("flexibility_metrics: unfinished schedule for session " +
                                        std::to_string(i));
        if (s.duration_slots == s.charge_slots) continue;

        const int bau_end = s.arrival_slot + s.charge_slots - 1;
        int deferred = 0, last = 0;
        for (int t : charge_slots[i]) {
            if (t > bau_end) ++deferred;
            last = std::max(last, t);
        }
        const int shiftable = std::min(s.charge_slots, s.duration_slots - s.charge_slots);
        const double e = static_cast<double>(deferred) / shiftable;
        const double tf = static_cast<double>(last - bau_end) / (s.duration_slots - s.charge_slots);
        e_sum[static_cast<size_t>(s.arrival_slot - 1)] += e;
        t_sum[static_cast<size_t>(s.arrival_slot - 1)] += tf;
        ++n[static_cast<size_t>(s.arrival_slot - 1)];
        out.mean_e_flex += e;
        out.mean_t_flex += tf;
        ++out.flex_sessions;
    }
    out.e_flex_by_arrival.assign(static_cast<size_t>(cfg.s_max), std::nan(""));
    out.t_flex_by_arrival.assign(static_cast<size_t>(cfg.s_max), std::nan(""));
    for (int t = 0; t < cfg.s_max; ++t)
        if (n[static_cast<size_t>(t)] > 0) {
            out.e_flex_by_arrival[static_cast<size_t>(t)] = e_sum[static_cast<size_t>(t)] / n[static_cast<size_t>(t)];
            out.t_flex_by_arrival[static_cast<size_t>(t)] = t_sum[static_cast<size_t>(t)] / n[static_cast<size_t>(t)];
        }
    if (out.flex_sessions > 0) {
        out.mean_e_flex /= out.flex_sessions;
        out.mean_t_flex /= out.flex_sessions;
    }
    return out;
}

struct EvaluationReport {
    std::vector<int> days;  // test days with nonzero optimal cost, ascending
    std::map<std::string, std::vector<double>> day_costs;  // per policy, aligned to days
    std::map<std::string, double> normalized;
    std::map<std::string, FlexMetrics> flex;
    std::map<std::string, int> shortfall_slots;  // reported separately, not folded into costs
};

struct BenchCell {
    int n_traj = 0;
    int months = 0;
    double old_gen_s = 0, old_fqi_s = 0;
    double updated_gen_s = 0, updated_fqi_s = 0;

    double old_total_s() const { return old_gen_s + old_fqi_s; }
    double updated_total_s() const { return updated_gen_s + updated_fqi_s; }
    double reduction() const { return 1.0 - updated_total_s() / old_total_s(); }
};

struct BenchReport {
    std::vector<BenchCell> cells;  // means over repetitions
    int repetitions = 1;
};

/// Wall-clock comparison of the two pipelines (experience generation plus
/// T-iteration FQI) over a (n_traj, months) grid. Training periods are drawn
/// identically for both modes of a cell; a warm-up run is discarded before
/// timing starts. Serial by contract.
inline BenchReport run_benchmark(const std::vector<EvSession>& sessions,
                                 const std::vector<int>& n_traj_axis, const std::vector<int>& months_axis,
                                 int repetitions, const MdpConfig& cfg, const NetSpec& net_spec,
                                 const FqiOptions& fqi_opts, std::uint64_t seed,
                                 int train_pool_days = 273) {
    if (repetitions < 1) throw std::invalid_argument("run_benchmark: repetitions must be >= 1");

    auto run_once = [&](Mode mode, int first_day, int n_days, int n_traj, std::uint64_t run_seed,
                        double& gen_s, double& fqi_s) {
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        ExperienceSet set = build_experience_set(sessions, first_day, n_days, n_traj, mode, cfg, run_seed);
        const auto t1 = clock::now();
        NetSpec spec = net_spec;
        spec.seed = run_seed;
        FqiOptions opts = fqi_opts;
        opts.seed = run_seed;
        (void)fit_fqi(set, cfg, spec, opts);
        const auto t2 = clock::now();
        gen_s = std::chrono::duration<double>(t1 - t0).count();
        fqi_s = std::chrono::duration<double>(t2 - t1).count();
    };

    // warm-up, discarded
    {
        double g, f;
        const int days = std::min(2, train_pool_days);
        run_once(Mode::updated, 1, days, std::min(50, n_traj_axis.front()), seed ^ 0xabcdefull, g, f);
    }

    BenchReport report;
    report.repetitions = repetitions;
    for (int n_traj : n_traj_axis) {
        for (int months : months_axis) {
            const int n_days = std::min(months * 30, train_pool_days);
            BenchCell cell;
            cell.n_traj = n_traj;
            cell.months = months;
            for (int rep = 0; rep < repetitions; ++rep) {
                const std::uint64_t rep_seed =
                    detail::splitmix64(seed ^ (0x1000003ull * rep) ^ (0x10001ull * n_traj) ^ months);
                std::mt19937_64 rng(rep_seed);
                const int max_start = std::max(1, train_pool_days - n_days + 1);
                const int first_day = std::uniform_int_distribution<int>(1, max_start)(rng);
                double g, f;
                run_once(Mode::old_cost, first_day, n_days, n_traj, rep_seed, g, f);
                cell.old_gen_s += g;
                cell.old_fqi_s += f;
                run_once(Mode::updated, first_day, n_days, n_traj, rep_seed, g, f);
                cell.updated_gen_s += g;
                cell.updated_fqi_s += f;
            }
            cell.old_gen_s /= repetitions;
            cell.old_fqi_s /= repetitions;
            cell.updated_gen_s /= repetitions;
            cell.updated_fqi_s /= repetitions;
            report.cells.push_back(cell);
        }
    }
    return report;
}

// --- CSV emission -------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_costs_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_costs_csv: cannot open " + path);
    out << "day,policy,day_cost,cost_ratio\n";
    const auto& opt = report.day_costs.at("optimal");
    for (size_t i = 0; i < report.days.size(); ++i)
        for (const auto& [policy, costs] : report.day_costs)
            out << report.days[i] << ',' << policy << ',' << detail::fmt_double(costs[i]) << ','
                << detail::fmt_double(costs[i] / opt[i]) << '\n';
}

inline void write_flex_csv(const EvaluationReport& report, const MdpConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_flex_csv: cannot open " + path);
    out << "arrival_slot,policy,e_flex,t_flex\n";
    for (int t = 1; t <= cfg.s_max; ++t)
        for (const auto& [policy, metrics] : report.flex)
            out << t << ',' << policy << ','
                << detail::fmt_double(metrics.e_flex_by_arrival[static_cast<size_t>(t - 1)]) << ','
                << detail::fmt_double(metrics.t_flex_by_arrival[static_cast<size_t>(t - 1)]) << '\n';
}

inline void write_bench_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_bench_csv: cannot open " + path);
    out << "n_traj,months,old_gen_s,old_fqi_s,old_total_s,updated_gen_s,updated_fqi_s,"
           "updated_total_s,reduction\n";
    for (const auto& c : report.cells)
        out << c.n_traj << ',' << c.months << ',' << detail::fmt_double(c.old_gen_s) << ','
            << detail::fmt_double(c.old_fqi_s) << ',' << detail::fmt_double(c.old_total_s()) << ','
            << detail::fmt_double(c.updated_gen_s) << ',' << detail::fmt_double(c.updated_fqi_s) << ','
            << detail::fmt_double(c.updated_total_s()) << ',' << detail::fmt_double(c.reduction())
            << '\n';
}

}  // namespace evcoord
