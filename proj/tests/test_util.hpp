#pragma once

#include <limits>
#include <random>
#include <vector>

#include "evcoord/experience.hpp"
#include "evcoord/fqi.hpp"
#include "evcoord/mdp.hpp"

namespace evcoord::testutil {

/// Random valid state: up to n_max cars in random upper-triangular bins.
inline StateMatrix random_state(const MdpConfig& cfg, std::mt19937_64& rng) {
    const int n_cars = std::uniform_int_distribution<int>(0, cfg.n_max)(rng);
    const int t = std::uniform_int_distribution<int>(1, cfg.s_max)(rng);
    StateMatrix s(t, cfg.s_max, cfg.n_max);
    for (int k = 0; k < n_cars; ++k) {
        const int depart = std::uniform_int_distribution<int>(1, cfg.s_max)(rng);
        const int charge = std::uniform_int_distribution<int>(1, depart)(rng);
        s.add_car(depart, charge);
    }
    return s;
}

inline Action random_feasible_action(const DiagonalTotals& totals, Mode mode, std::mt19937_64& rng) {
    const std::uint64_t n = action_space_size(totals, mode);
    const std::uint64_t idx = n > 1 ? std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng) : 0;
    return action_at(totals, mode, idx);
}

/// The two-car tree scenario: C1 = (depart 3, charge 2), C2 = (2, 1),
/// horizon 3, two stations, no later arrivals.
inline MdpConfig toy_config() { return MdpConfig::with_defaults(3, 2); }

inline StateMatrix toy_initial_state() {
    return state_from_cars({{3, 2}, {2, 1}}, 1, toy_config());
}

/// Exhaustive-DP minimum total cost of a deterministic no-arrival world.
/// Independent of the fitted-Q path: plain recursion over the full tree.
inline double dp_optimal_cost(const StateMatrix& s, Mode mode, const MdpConfig& cfg) {
    if (s.terminal()) return 0.0;
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const Action& u : enumerate_actions(totals, mode)) {
        const TransitionOutcome out = transition(s, u, {}, cfg);
        best = std::min(best, transition_cost(s, u, out, mode, cfg) + dp_optimal_cost(out.next_state, mode, cfg));
    }
    return best;
}

/// Every (s, u, s', cost) tuple reachable from the initial state (no
/// arrivals), i.e. the full decision tree as an experience set.
inline void collect_tree(const StateMatrix& s, Mode mode, const MdpConfig& cfg,
                         std::vector<ExperienceTuple>& out) {
    if (s.terminal()) return;
    for (const Action& u : enumerate_actions(diagonal_totals(s, cfg), mode)) {
        const TransitionOutcome next = transition(s, u, {}, cfg);
        out.push_back({s, u, next.next_state, transition_cost(s, u, next, mode, cfg),
                       next.next_state.terminal()});
        collect_tree(next.next_state, mode, cfg, out);
    }
}

inline ExperienceSet exhaustive_experience(const StateMatrix& initial, Mode mode, const MdpConfig& cfg) {
    ExperienceSet set;
    set.mode = mode;
    collect_tree(initial, mode, cfg, set.tuples);
    return set;
}

/// Realized total cost of rolling the greedy policy from the given state
/// (deterministic world, no arrivals).
inline double greedy_rollout_cost(const QNetwork& net, StateMatrix s, Mode mode, const MdpConfig& cfg,
                                  const FqiOptions& opts = {}) {
    double total = 0.0;
    while (!s.terminal()) {
        const Action u = greedy_action(net, s, mode, cfg, opts);
        const TransitionOutcome out = transition(s, u, {}, cfg);
        total += transition_cost(s, u, out, mode, cfg);
        s = out.next_state;
    }
    return total;
}

}  // namespace evcoord::testutil
