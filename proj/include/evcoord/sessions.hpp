#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "evcoord/mdp.hpp"

namespace evcoord {

/// One EV charging session, already discretized to slots.
struct EvSession {
    int day = 1;             // calendar-day index, 1-based
    int arrival_slot = 1;    // 1..s_max
    int duration_slots = 1;  // connection time, arrival + d - 1 <= s_max
    int charge_slots = 1;    // 1..duration_slots
    int station_id = 0;      // 0..n_max-1
};

struct GeneratorConfig {
    std::vector<double> arrival_weights;    // per-slot categorical weights; empty = bimodal default
    double duration_geometric_p = 0.35;     // truncated geometric over 1..s_max
    double mean_sessions_per_day = 8.0;
    std::uint64_t seed = 1;

    void validate(const MdpConfig& mdp) const {
        if (mean_sessions_per_day < 0)
            throw std::invalid_argument("GeneratorConfig: mean_sessions_per_day must be >= 0");
        if (!(duration_geometric_p > 0.0 && duration_geometric_p < 1.0))
            throw std::invalid_argument("GeneratorConfig: duration_geometric_p must be in (0,1)");
        if (!arrival_weights.empty()) {
            if (static_cast<int>(arrival_weights.size()) != mdp.s_max)
                throw std::invalid_argument("GeneratorConfig: arrival_weights must have s_max entries");
            double total = 0;
            for (double w : arrival_weights) {
                if (w < 0) throw std::invalid_argument("GeneratorConfig: arrival weights must be >= 0");
                total += w;
            }
            if (!(total > 0)) throw std::invalid_argument("GeneratorConfig: at least one positive weight");
        }
    }
};

/// Morning/evening double peak over the horizon (stand-in for real arrival data).
inline std::vector<double> default_arrival_weights(int s_max) {
    std::vector<double> w(static_cast<size_t>(s_max), 0.5);
    const double morning = 0.3 * s_max;  // ~ slot 4 of 12
    const double evening = 0.72 * s_max;
    for (int t = 1; t <= s_max; ++t) {
        auto peak = [t](double center, double width, double height) {
            const double z = (t - center) / width;
            return height * std::exp(-0.5 * z * z);
        };
        w[static_cast<size_t>(t - 1)] += peak(morning, 1.1, 6.0) + peak(evening, 1.3, 8.0);
    }
    return w;
}

struct GenerationResult {
    std::vector<EvSession> sessions;
    int truncated = 0;  // sessions dropped because no station was free
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Seeded synthetic session generation. Deterministic given (cfg, seed,
/// n_days); per-day RNG streams are derived from the seed so days are
/// independent. Station assignment is first-free; arrivals that find no free
/// station are resampled a bounded number of times, then dropped.
inline GenerationResult generate_synthetic(const GeneratorConfig& cfg, const MdpConfig& mdp, int n_days) {
    mdp.validate();
    cfg.validate(mdp);
    if (n_days < 1) throw std::invalid_argument("generate_synthetic: n_days must be >= 1");

    const std::vector<double> weights =
        cfg.arrival_weights.empty() ? default_arrival_weights(mdp.s_max) : cfg.arrival_weights;

    GenerationResult result;
    for (int day = 1; day <= n_days; ++day) {
        std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ (0xd1b54a32d192ed03ull * day)));
        std::poisson_distribution<int> count_dist(cfg.mean_sessions_per_day);
        std::discrete_distribution<int> arrival_dist(weights.begin(), weights.end());
        std::geometric_distribution<int> extra_dist(cfg.duration_geometric_p);

        const int n_sessions = cfg.mean_sessions_per_day > 0 ? count_dist(rng) : 0;
        // station -> first slot at which it is free again
        std::vector<int> free_from(static_cast<size_t>(mdp.n_max), 1);
        std::vector<EvSession> day_sessions;

        for (int k = 0; k < n_sessions; ++k) {
            constexpr int kMaxRetries = 16;
            bool placed = false;
            for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
                const int arrival = arrival_dist(rng) + 1;
                int d = 1 + extra_dist(rng);
                d = std::min(d, mdp.s_max - arrival + 1);
                const int c = std::uniform_int_distribution<int>(1, d)(rng);
                for (int st = 0; st < mdp.n_max; ++st) {
                    if (free_from[static_cast<size_t>(st)] <= arrival) {
                        day_sessions.push_back({day, arrival, d, c, st});
                        free_from[static_cast<size_t>(st)] = arrival + d;
                        placed = true;
                        break;
                    }
                }
            }
            if (!placed) ++result.truncated;
        }
        std::sort(day_sessions.begin(), day_sessions.end(), [](const EvSession& a, const EvSession& b) {
            return std::tie(a.arrival_slot, a.station_id) < std::tie(b.arrival_slot, b.station_id);
        });
        result.sessions.insert(result.sessions.end(), day_sessions.begin(), day_sessions.end());
    }
    return result;
}

struct CsvLoadResult {
    std::vector<EvSession> sessions;
    int clamped_rows = 0;  // rows whose duration/charge were clamped to the invariants
    int dropped_rows = 0;  // rows dropped because station concurrency would exceed n_max
};

/// Load sessions from CSV (`day,arrival_slot,duration_slots,charge_slots`).
/// Invariant-violating rows are clamped (d to the day horizon, c to d) and
/// counted; rows that would exceed station concurrency are dropped.
inline CsvLoadResult load_sessions_csv(const std::string& path, const MdpConfig& mdp) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_sessions_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) return {};  // empty file -> empty list
    // tolerate trailing CR from foreign line endings
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "day,arrival_slot,duration_slots,charge_slots")
        throw std::runtime_error("load_sessions_csv: unexpected header: " + line);

    CsvLoadResult result;
    // per (day) station occupancy for first-free assignment
    int current_day = -1;
    std::vector<int> free_from;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        int values[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, field, ','))
                throw std::runtime_error("load_sessions_csv: malformed row at line " + std::to_string(line_no));
            try {
                values[i] = std::stoi(field);
            } catch (const std::exception&) {
                throw std::runtime_error("load_sessions_csv: malformed row at line " + std::to_string(line_no));
            }
        }
        EvSession s{values[0], values[1], values[2], values[3], 0};
        if (s.day < 1 || s.arrival_slot < 1 || s.arrival_slot > mdp.s_max || s.duration_slots < 1 ||
            s.charge_slots < 1)
            throw std::runtime_error("load_sessions_csv: malformed row at line " + std::to_string(line_no));

        bool clamped = false;
        const int horizon = mdp.s_max - s.arrival_slot + 1;
        if (s.duration_slots > horizon) { s.duration_slots = horizon; clamped = true; }
        if (s.charge_slots > s.duration_slots) { s.charge_slots = s.duration_slots; clamped = true; }
        if (clamped) ++result.clamped_rows;

        if (s.day != current_day) {
            current_day = s.day;
            free_from.assign(static_cast<size_t>(mdp.n_max), 1);
        }
        bool placed = false;
        for (int st = 0; st < mdp.n_max; ++st) {
            if (free_from[static_cast<size_t>(st)] <= s.arrival_slot) {
                s.station_id = st;
                free_from[static_cast<size_t>(st)] = s.arrival_slot + s.duration_slots;
                placed = true;
                break;
            }
        }
        if (!placed) { ++result.dropped_rows; continue; }
        result.sessions.push_back(s);
    }
    return result;
}

inline void save_sessions_csv(const std::string& path, const std::vector<EvSession>& sessions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_sessions_csv: cannot open " + path);
    out << "day,arrival_slot,duration_slots,charge_slots\n";
    for (const auto& s : sessions)
        out << s.day << ',' << s.arrival_slot << ',' << s.duration_slots << ',' << s.charge_slots << '\n';
}

/// Arrivals of one day, grouped by slot. Index 0 holds slot-1 arrivals.
using DayArrivals = std::vector<std::vector<EvSession>>;

inline DayArrivals sessions_for_day(const std::vector<EvSession>& sessions, int day, const MdpConfig& mdp) {
    DayArrivals per_slot(static_cast<size_t>(mdp.s_max));
    for (const auto& s : sessions)
        if (s.day == day) per_slot[static_cast<size_t>(s.arrival_slot - 1)].push_back(s);
    return per_slot;
}

inline StateMatrix state_from_sessions(const std::vector<EvSession>& arriving, int t, const MdpConfig& cfg) {
    std::vector<ConnectedCar> cars;
    cars.reserve(arriving.size());
    for (const auto& s : arriving) cars.push_back({s.duration_slots, s.charge_slots});
    return state_from_cars(cars, t, cfg);
}

}  // namespace evcoord
