#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "evcoord/mdp.hpp"
#include "evcoord/sessions.hpp"

namespace evcoord {

struct ExperienceTuple {
    StateMatrix s;
    Action u;
    StateMatrix s_next;
    double cost = 0.0;
    bool terminal = false;
};

struct Provenance {
    int first_day = 1;
    int n_days = 0;
    int n_traj = 0;  // requested distinct trajectories per day
    std::uint64_t seed = 0;
    int underfilled_days = 0;     // days where the retry budget ran out first
    int total_trajectories = 0;   // distinct trajectories actually collected
};

struct ExperienceSet {
    Mode mode = Mode::old_cost;
    std::vector<ExperienceTuple> tuples;
    Provenance provenance;
};

/// One random-action day trajectory: starts from the slot-1 arrivals and
/// takes a uniformly random feasible action each slot until the terminal
/// state. Emits exactly s_max tuples. Arrivals are injected from the day's
/// session log; the only random element is the action choice.
inline std::vector<ExperienceTuple> sample_trajectory(const DayArrivals& day, Mode mode,
                                                      const MdpConfig& cfg, std::mt19937_64& rng) {
    std::vector<ExperienceTuple> traj;
    traj.reserve(static_cast<size_t>(cfg.s_max));
    StateMatrix s = state_from_sessions(day[0], 1, cfg);
    for (int t = 1; t <= cfg.s_max; ++t) {
        const DiagonalTotals totals = diagonal_totals(s, cfg);
        const std::uint64_t n_actions = action_space_size(totals, mode);
        const std::uint64_t idx =
            n_actions > 1 ? std::uniform_int_distribution<std::uint64_t>(0, n_actions - 1)(rng) : 0;
        const Action u = action_at(totals, mode, idx);

        std::vector<ConnectedCar> arrivals;
        if (t < cfg.s_max)
            for (const auto& sess : day[static_cast<size_t>(t)])
                arrivals.push_back({sess.duration_slots, sess.charge_slots});

        TransitionOutcome outcome = transition(s, u, arrivals, cfg);
        const double cost = transition_cost(s, u, outcome, mode, cfg);
        traj.push_back({s, u, outcome.next_state, cost, t == cfg.s_max});
        s = outcome.next_state;
    }
    return traj;
}

namespace detail {
inline std::uint64_t action_sequence_hash(const std::vector<ExperienceTuple>& traj) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& tup : traj)
        for (int c : tup.u.counts) {
            h ^= static_cast<std::uint64_t>(c) + 0x517cc1b7ull;
            h *= 1099511628211ull;
        }
    return h;
}
}  // namespace detail

/// Build F1 (mode=old) or F2 (mode=updated) over days [first_day,
/// first_day+n_days). Per day, trajectories are sampled until n_traj distinct
/// action sequences are found or 10*n_traj attempts are spent; duplicates are
/// discarded by action-sequence hash.
inline ExperienceSet build_experience_set(const std::vector<EvSession>& sessions, int first_day, int n_days,
                                          int n_traj, Mode mode, const MdpConfig& cfg, std::uint64_t seed) {
    if (n_traj < 1) throw std::invalid_argument("build_experience_set: n_traj must be >= 1");
    if (n_days < 1) throw std::invalid_argument("build_experience_set: n_days must be >= 1");

    ExperienceSet set;
    set.mode = mode;
    set.provenance = {first_day, n_days, n_traj, seed, 0, 0};

    for (int day = first_day; day < first_day + n_days; ++day) {
        const DayArrivals arrivals = sessions_for_day(sessions, day, cfg);
        std::mt19937_64 rng(detail::splitmix64(seed ^ (0xbf58476d1ce4e5b9ull * day)));
        std::unordered_set<std::uint64_t> seen;
        const long budget = 10L * n_traj;
        for (long attempt = 0; attempt < budget && static_cast<int>(seen.size()) < n_traj; ++attempt) {
            auto traj = sample_trajectory(arrivals, mode, cfg, rng);
            if (!seen.insert(detail::action_sequence_hash(traj)).second) continue;
            set.tuples.insert(set.tuples.end(), traj.begin(), traj.end());
        }
        set.provenance.total_trajectories += static_cast<int>(seen.size());
        if (static_cast<int>(seen.size()) < n_traj) ++set.provenance.underfilled_days;
    }
    return set;
}

// --- CSV serialization -------------------------------------------------
//
// Line 1: "# evcoord-experience v1 mode=<m> s_max=<..> n_max=<..> first_day=..
//          n_days=.. n_traj=.. seed=.. underfilled=.. trajectories=.."
// Line 2: header "t,cost,terminal,s_bins,u_counts,snext_bins"
// s_bins / snext_bins: sparse "i:j:count" entries joined by ';' ('-' if empty).
// u_counts: per-diagonal counts joined by '|'.

namespace detail {
inline std::string bins_to_string(const StateMatrix& s) {
    std::ostringstream out;
    bool first = true;
    for (int i = 1; i <= s.s_max(); ++i)
        for (int j = 1; j <= i; ++j)
            if (s.count(i, j) > 0) {
                if (!first) out << ';';
                out << i << ':' << j << ':' << s.count(i, j);
                first = false;
            }
    return first ? "-" : out.str();
}

inline StateMatrix bins_from_string(const std::string& text, int t, const MdpConfig& cfg) {
    StateMatrix s(t, cfg.s_max, cfg.n_max);
    if (text == "-") return s;
    std::istringstream ss(text);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
        int i, j, n;
        char colon1, colon2;
        std::istringstream es(entry);
        if (!(es >> i >> colon1 >> j >> colon2 >> n) || colon1 != ':' || colon2 != ':')
            throw std::runtime_error("experience: malformed bin entry: " + entry);
        s.add_car(i, j, n);
    }
    return s;
}
}  // namespace detail

inline void save_experience_csv(const std::string& path, const ExperienceSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_experience_csv: cannot open " + path);
    int s_max = 0, n_max = 0;
    if (!set.tuples.empty()) {
        s_max = set.tuples.front().s.s_max();
        n_max = set.tuples.front().s.n_max();
    }
    const auto& p = set.provenance;
    out << "# evcoord-experience v1 mode=" << to_string(set.mode) << " s_max=" << s_max
        << " n_max=" << n_max << " first_day=" << p.first_day << " n_days=" << p.n_days
        << " n_traj=" << p.n_traj << " seed=" << p.seed << " underfilled=" << p.underfilled_days
        << " trajectories=" << p.total_trajectories << "\n";
    out << "t,cost,terminal,s_bins,u_counts,snext_bins\n";
    out.precision(17);
    for (const auto& tup : set.tuples) {
        out << tup.s.t() << ',' << tup.cost << ',' << (tup.terminal ? 1 : 0) << ','
            << detail::bins_to_string(tup.s) << ',';
        for (size_t d = 0; d < tup.u.counts.size(); ++d) {
            if (d) out << '|';
            out << tup.u.counts[d];
        }
        out << ',' << detail::bins_to_string(tup.s_next) << '\n';
    }
}

inline ExperienceSet load_experience_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_experience_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_experience_csv: empty file");

    ExperienceSet set;
    MdpConfig cfg;
    {
        std::istringstream ss(line);
        std::string token;
        ss >> token;  // '#'
        ss >> token;  // magic
        if (token != "evcoord-experience") throw std::runtime_error("load_experience_csv: bad magic");
        ss >> token;  // version
        auto& p = set.provenance;
        while (ss >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = token.substr(0, eq);
            const std::string val = token.substr(eq + 1);
            if (key == "mode") set.mode = mode_from_string(val);
            else if (key == "s_max") cfg.s_max = std::stoi(val);
            else if (key == "n_max") cfg.n_max = std::stoi(val);
            else if (key == "first_day") p.first_day = std::stoi(val);
            else if (key == "n_days") p.n_days = std::stoi(val);
            else if (key == "n_traj") p.n_traj = std::stoi(val);
            else if (key == "seed") p.seed = std::stoull(val);
            else if (key == "underfilled") p.underfilled_days = std::stoi(val);
            else if (key == "trajectories") p.total_trajectories = std::stoi(val);
        }
    }
    cfg.penalty_weight = cfg.s_max + 1.0;
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field[6];
        for (int i = 0; i < 6; ++i)
            if (!std::getline(ss, field[i], ','))
                throw std::runtime_error("load_experience_csv: malformed row: " + line);
        const int t = std::stoi(field[0]);
        StateMatrix s = detail::bins_from_string(field[3], t, cfg);
        StateMatrix s_next = detail::bins_from_string(field[5], t + 1, cfg);
        Action u;
        {
            std::istringstream us(field[4]);
            std::string c;
            while (std::getline(us, c, '|')) u.counts.push_back(std::stoi(c));
        }
        set.tuples.push_back({std::move(s), std::move(u), std::move(s_next), std::stod(field[1]),
                              field[2] == "1"});
    }
    return set;
}

}  // namespace evcoord
