#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "evcoord/mdp.hpp"
#include "evcoord/sessions.hpp"

namespace evcoord {

/// A full day's charging plan: per-slot aggregate load (car counts) and the
/// absolute slots in which each session charges (parallel to the input
/// session order).
struct DaySchedule {
    std::vector<int> load;                       // length s_max
    std::vector<std::vector<int>> charge_slots;  // per session, sorted ascending

    /// Load-flattening objective in car-count^2 units.
    long long objective() const {
        long long obj = 0;
        for (int l : load) obj += static_cast<long long>(l) * l;
        return obj;
    }
};

namespace detail {
inline DaySchedule schedule_from_patterns(const std::vector<std::vector<int>>& patterns,
                                          const MdpConfig& cfg) {
    DaySchedule sched;
    sched.load.assign(static_cast<size_t>(cfg.s_max), 0);
    sched.charge_slots = patterns;
    for (auto& slots : sched.charge_slots) {
        std::sort(slots.begin(), slots.end());
        for (int t : slots) ++sched.load[static_cast<size_t>(t - 1)];
    }
    return sched;
}
}  // namespace detail

/// Business-as-usual: each EV charges contiguously from arrival.
inline DaySchedule bau_schedule(const std::vector<EvSession>& sessions, const MdpConfig& cfg) {
    std::vector<std::vector<int>> patterns(sessions.size());
    for (size_t i = 0; i < sessions.size(); ++i)
        for (int k = 0; k < sessions[i].charge_slots; ++k)
            patterns[i].push_back(sessions[i].arrival_slot + k);
    return detail::schedule_from_patterns(patterns, cfg);
}

/// Uniform-spreading heuristic for a single session, as relative slots within
/// 1..d. For c >= d/2 the d-c no-charge slots sit at the first d-c multiples
/// of floor(d/(d-c+1)) (end-fill if fewer multiples exist); for c < d/2 the
/// mirrored rule places the c charge slots at multiples of floor(d/(c+1)).
inline std::vector<int> heuristic_pattern(int d, int c) {
    if (c < 1 || c > d) throw std::invalid_argument("heuristic_pattern: need 1 <= c <= d");
    std::vector<bool> charge(static_cast<size_t>(d) + 1, false);

    auto place = [d](std::vector<bool>& marks, int k, int want) {
        int placed = 0;
        for (int slot = k; slot <= d && placed < want; slot += k) {
            marks[static_cast<size_t>(slot)] = true;
            ++placed;
        }
        for (int slot = d; slot >= 1 && placed < want; --slot) {
            if (!marks[static_cast<size_t>(slot)]) {
                marks[static_cast<size_t>(slot)] = true;
                ++placed;
            }
        }
    };

    if (2 * c >= d) {
        std::vector<bool> skip(static_cast<size_t>(d) + 1, false);
        place(skip, d / (d - c + 1), d - c);
        for (int slot = 1; slot <= d; ++slot) charge[static_cast<size_t>(slot)] = !skip[static_cast<size_t>(slot)];
    } else {
        place(charge, d / (c + 1), c);
    }

    std::vector<int> out;
    for (int slot = 1; slot <= d; ++slot)
        if (charge[static_cast<size_t>(slot)]) out.push_back(slot);
    return out;
}

inline DaySchedule heuristic_schedule(const std::vector<EvSession>& sessions, const MdpConfig& cfg) {
    std::vector<std::vector<int>> patterns(sessions.size());
    for (size_t i = 0; i < sessions.size(); ++i)
        for (int rel : heuristic_pattern(sessions[i].duration_slots, sessions[i].charge_slots))
            patterns[i].push_back(sessions[i].arrival_slot + rel - 1);
    return detail::schedule_from_patterns(patterns, cfg);
}

namespace detail {

/// Min-cost max-flow on a small graph, successive shortest paths with SPFA.
class MinCostFlow {
public:
    explicit MinCostFlow(int nodes) : head_(static_cast<size_t>(nodes), -1) {}

    int add_edge(int from, int to, int cap, long long cost) {
        const int id = static_cast<int>(edges_.size());
        edges_.push_back({to, cap, cost, head_[static_cast<size_t>(from)]});
        head_[static_cast<size_t>(from)] = id;
        edges_.push_back({from, 0, -cost, head_[static_cast<size_t>(to)]});
        head_[static_cast<size_t>(to)] = id + 1;
        return id;
    }

    /// Pushes max flow from s to t one unit at a time (all bottleneck paths in
    /// our graphs have capacity 1 anyway); returns (flow, cost).
    std::pair<int, long long> run(int s, int t) {
        int flow = 0;
        long long cost = 0;
        while (true) {
            const int n = static_cast<int>(head_.size());
            std::vector<long long> dist(static_cast<size_t>(n), std::numeric_limits<long long>::max());
            std::vector<int> via(static_cast<size_t>(n), -1);
            std::vector<bool> queued(static_cast<size_t>(n), false);
            std::deque<int> queue{s};
            dist[static_cast<size_t>(s)] = 0;
            queued[static_cast<size_t>(s)] = true;
            while (!queue.empty()) {
                const int u = queue.front();
                queue.pop_front();
                queued[static_cast<size_t>(u)] = false;
                for (int e = head_[static_cast<size_t>(u)]; e != -1; e = edges_[static_cast<size_t>(e)].next) {
                    const Edge& ed = edges_[static_cast<size_t>(e)];
                    if (ed.cap <= 0) continue;
                    const long long nd = dist[static_cast<size_t>(u)] + ed.cost;
                    if (nd < dist[static_cast<size_t>(ed.to)]) {
                        dist[static_cast<size_t>(ed.to)] = nd;
                        via[static_cast<size_t>(ed.to)] = e;
                        if (!queued[static_cast<size_t>(ed.to)]) {
                            queue.push_back(ed.to);
                            queued[static_cast<size_t>(ed.to)] = true;
                        }
                    }
                }
            }
            if (via[static_cast<size_t>(t)] == -1) break;
            for (int v = t; v != s;) {
                Edge& ed = edges_[static_cast<size_t>(via[static_cast<size_t>(v)])];
                --ed.cap;
                ++edges_[static_cast<size_t>(via[static_cast<size_t>(v)] ^ 1)].cap;
                v = edges_[static_cast<size_t>(via[static_cast<size_t>(v)] ^ 1)].to;
            }
            ++flow;
            cost += dist[static_cast<size_t>(t)];
        }
        return {flow, cost};
    }

    int residual_cap(int edge_id) const { return edges_[static_cast<size_t>(edge_id)].cap; }

private:
    struct Edge {
        int to;
        int cap;
        long long cost;
        int next;
    };
    std::vector<Edge> edges_;
    std::vector<int> head_;
};

}  // namespace detail

/// Perfect-knowledge load-flattening optimum: minimizes sum of squared slot
/// loads subject to each session charging exactly c slots inside its window.
/// Solved exactly as min-cost flow with unit-capacity slot-to-sink edges of
/// marginal cost 2k-1 for the k-th car on a slot (convex marginal costs make
/// the expansion exact).
inline DaySchedule optimal_schedule(const std::vector<EvSession>& sessions, const MdpConfig& cfg) {
    const int n_sessions = static_cast<int>(sessions.size());
    const int source = 0;
    const int slot_base = n_sessions + 1;  // slot t -> node slot_base + t - 1
    const int sink = slot_base + cfg.s_max;
    detail::MinCostFlow mcf(sink + 1);

    // deterministic pivot order: sessions by (arrival, index), slots ascending
    std::vector<int> order(static_cast<size_t>(n_sessions));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&sessions](int a, int b) {
        return std::tie(sessions[static_cast<size_t>(a)].arrival_slot, a) <
               std::tie(sessions[static_cast<size_t>(b)].arrival_slot, b);
    });

    std::vector<std::vector<std::pair<int, int>>> slot_edges(sessions.size());  // (slot, edge id)
    for (int i : order) {
        const EvSession& s = sessions[static_cast<size_t>(i)];
        mcf.add_edge(source, 1 + i, s.charge_slots, 0);
        for (int t = s.arrival_slot; t <= s.arrival_slot + s.duration_slots - 1; ++t)
            slot_edges[static_cast<size_t>(i)].push_back({t, mcf.add_edge(1 + i, slot_base + t - 1, 1, 0)});
    }
    for (int t = 1; t <= cfg.s_max; ++t)
        for (int k = 1; k <= cfg.n_max; ++k)
            mcf.add_edge(slot_base + t - 1, sink, 1, 2 * k - 1);

    int demand = 0;
    for (const auto& s : sessions) demand += s.charge_slots;
    const auto [flow, cost] = mcf.run(source, sink);
    if (flow != demand) throw std::runtime_error("optimal_schedule: infeasible instance");
    (void)cost;

    std::vector<std::vector<int>> patterns(sessions.size());
    for (size_t i = 0; i < sessions.size(); ++i)
        for (const auto& [slot, edge] : slot_edges[i])
            if (mcf.residual_cap(edge) == 0) patterns[i].push_back(slot);
    return detail::schedule_from_patterns(patterns, cfg);
}

/// Exhaustive oracle for optimal_schedule; guarded to tiny instances.
inline DaySchedule brute_force_schedule(const std::vector<EvSession>& sessions, const MdpConfig& cfg,
                                        long long enumeration_guard = 1000000) {
    // per-session list of candidate charge-slot subsets
    std::vector<std::vector<std::vector<int>>> choices(sessions.size());
    long long total = 1;
    for (size_t i = 0; i < sessions.size(); ++i) {
        const EvSession& s = sessions[i];
        std::vector<int> window;
        for (int t = s.arrival_slot; t <= s.arrival_slot + s.duration_slots - 1; ++t) window.push_back(t);
        std::vector<bool> mask(window.size(), false);
        std::fill(mask.begin(), mask.begin() + s.charge_slots, true);
        // lexicographic subset order via permutations of the selection mask
        std::sort(mask.rbegin(), mask.rend());
        do {
            std::vector<int> subset;
            for (size_t k = 0; k < window.size(); ++k)
                if (mask[k]) subset.push_back(window[k]);
            choices[i].push_back(std::move(subset));
        } while (std::prev_permutation(mask.begin(), mask.end()));
        total *= static_cast<long long>(choices[i].size());
        if (total > enumeration_guard)
            throw std::runtime_error("brute_force_schedule: enumeration size exceeds guard");
    }

    std::vector<size_t> pick(sessions.size(), 0);
    std::vector<size_t> best = pick;
    long long best_obj = std::numeric_limits<long long>::max();
    std::vector<int> load(static_cast<size_t>(cfg.s_max), 0);

    // iterative odometer over the cartesian product
    auto evaluate = [&]() {
        std::fill(load.begin(), load.end(), 0);
        for (size_t i = 0; i < sessions.size(); ++i)
            for (int t : choices[i][pick[i]]) ++load[static_cast<size_t>(t - 1)];
        long long obj = 0;
        for (int l : load) obj += static_cast<long long>(l) * l;
        if (obj < best_obj) {
            best_obj = obj;
            best = pick;
        }
    };
    if (sessions.empty()) {
        DaySchedule empty;
        empty.load.assign(static_cast<size_t>(cfg.s_max), 0);
        return empty;
    }
    while (true) {
        evaluate();
        size_t i = sessions.size();
        while (i > 0) {
            --i;
            if (++pick[i] < choices[i].size()) break;
            pick[i] = 0;
            if (i == 0) {
                std::vector<std::vector<int>> patterns(sessions.size());
                for (size_t k = 0; k < sessions.size(); ++k) patterns[k] = choices[k][best[k]];
                return detail::schedule_from_patterns(patterns, cfg);
            }
        }
    }
}

}  // namespace evcoord
