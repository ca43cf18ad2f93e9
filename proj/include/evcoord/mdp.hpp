#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace evcoord {

/// Which MDP variant is in play: the original formulation (demand cost plus
/// an unfinished-charging penalty, full action tree) or the updated one
/// (demand cost only, main-diagonal charging forced).
enum class Mode { old_cost, updated };

inline const char* to_string(Mode m) { return m == Mode::old_cost ? "old" : "updated"; }

inline Mode mode_from_string(const std::string& s) {
    if (s == "old") return Mode::old_cost;
    if (s == "updated") return Mode::updated;
    throw std::invalid_argument("unknown mode: " + s);
}

struct MdpConfig {
    int s_max = 12;           // timeslots per horizon
    int n_max = 10;           // charging stations
    double slot_hours = 2.0;  // duration of one slot
    double penalty_weight = 13.0;  // cost per slot of charging shortfall

    void validate() const {
        if (s_max < 1) throw std::invalid_argument("MdpConfig: s_max must be >= 1");
        if (n_max < 1) throw std::invalid_argument("MdpConfig: n_max must be >= 1");
        if (!(slot_hours > 0)) throw std::invalid_argument("MdpConfig: slot_hours must be > 0");
        // penalty must exceed the worst-case total demand cost of a horizon
        if (!(penalty_weight > static_cast<double>(s_max)))
            throw std::invalid_argument("MdpConfig: penalty_weight must exceed s_max");
    }

    static MdpConfig with_defaults(int s_max, int n_max) {
        MdpConfig cfg;
        cfg.s_max = s_max;
        cfg.n_max = n_max;
        cfg.penalty_weight = static_cast<double>(s_max) + 1.0;
        return cfg;
    }
};

/// One connected car, reduced to its remaining slots until departure and
/// remaining slots of charge it still needs.
struct ConnectedCar {
    int depart;  // slots until departure, 1..s_max
    int charge;  // charge-slots still needed, 1..depart
};

/// Aggregate MDP state: the timeslot plus an occupancy matrix over
/// (depart, charge) bins. Internally counts whole cars; the fractional
/// view divides by n_max.
class StateMatrix {
public:
    StateMatrix(int t, int s_max, int n_max)
        : t_(t), s_max_(s_max), n_max_(n_max), counts_(static_cast<size_t>(s_max) * s_max, 0) {
        if (t < 1 || t > s_max + 1) throw std::invalid_argument("StateMatrix: t out of range");
    }

    int t() const { return t_; }
    int s_max() const { return s_max_; }
    int n_max() const { return n_max_; }
    bool terminal() const { return t_ == s_max_ + 1; }

    /// Car count in bin (depart=i, charge=j), 1-based.
    int count(int i, int j) const { return counts_[idx(i, j)]; }
    double fraction(int i, int j) const { return static_cast<double>(count(i, j)) / n_max_; }

    void add_car(int depart, int charge, int n = 1) {
        if (depart < 1 || depart > s_max_ || charge < 1 || charge > depart)
            throw std::invalid_argument("StateMatrix: car bin out of range (depart=" +
                                        std::to_string(depart) + ", charge=" + std::to_string(charge) + ")");
        counts_[idx(depart, charge)] += n;
        if (cars() > n_max_) throw std::invalid_argument("StateMatrix: more cars than stations");
    }

    int cars() const {
        int n = 0;
        for (int c : counts_) n += c;
        return n;
    }

    bool operator==(const StateMatrix& o) const {
        return t_ == o.t_ && s_max_ == o.s_max_ && counts_ == o.counts_;
    }

    /// FNV-1a over (t, counts); used for memoization and dedup maps.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(static_cast<std::uint64_t>(t_));
        for (int c : counts_) mix(static_cast<std::uint64_t>(c) + 0x9e37ull);
        return h;
    }

private:
    size_t idx(int i, int j) const {
        if (i < 1 || i > s_max_ || j < 1 || j > s_max_)
            throw std::out_of_range("StateMatrix: bin index out of range");
        return static_cast<size_t>(i - 1) * s_max_ + (j - 1);
    }

    int t_;
    int s_max_;
    int n_max_;
    std::vector<int> counts_;  // cars per (depart, charge) bin

    friend struct TransitionOutcome;
};

struct StateHash {
    size_t operator()(const StateMatrix& s) const { return static_cast<size_t>(s.hash()); }
};

/// Per-diagonal car counts: totals[d] is the number of cars with flexibility
/// depart - charge == d.
struct DiagonalTotals {
    std::vector<int> totals;  // length s_max

    int operator()(int d) const { return totals[static_cast<size_t>(d)]; }
    int size() const { return static_cast<int>(totals.size()); }
};

/// Per-diagonal charge decision, in integer car counts.
struct Action {
    std::vector<int> counts;  // length s_max; counts[d] cars of diagonal d charge this slot

    int charged_total() const {
        int n = 0;
        for (int c : counts) n += c;
        return n;
    }

    double fraction(int d, const DiagonalTotals& totals) const {
        int tot = totals(d);
        return tot > 0 ? static_cast<double>(counts[static_cast<size_t>(d)]) / tot : 0.0;
    }

    bool operator==(const Action& o) const { return counts == o.counts; }
    bool operator<(const Action& o) const { return counts < o.counts; }
};

struct TransitionOutcome {
    StateMatrix next_state;
    int shortfall_slots = 0;  // charge-slots clamped away this transition
    int charged_count = 0;
};

inline StateMatrix state_from_cars(const std::vector<ConnectedCar>& cars, int t, const MdpConfig& cfg) {
    StateMatrix s(t, cfg.s_max, cfg.n_max);
    for (const auto& car : cars) s.add_car(car.depart, car.charge);
    return s;
}

inline DiagonalTotals diagonal_totals(const StateMatrix& x, const MdpConfig& cfg) {
    DiagonalTotals dt;
    dt.totals.assign(static_cast<size_t>(cfg.s_max), 0);
    for (int i = 1; i <= cfg.s_max; ++i)
        for (int j = 1; j <= i; ++j) dt.totals[static_cast<size_t>(i - j)] += x.count(i, j);
    return dt;
}

/// Action-count formula: product of (totals(d)+1) over the free diagonals.
/// In updated mode the main diagonal offers no choice and drops out of the
/// product.
inline std::uint64_t action_space_size(const DiagonalTotals& totals, Mode mode) {
    std::uint64_t n = 1;
    for (int d = (mode == Mode::updated ? 1 : 0); d < totals.size(); ++d)
        n *= static_cast<std::uint64_t>(totals(d) + 1);
    return n;
}

/// The additive variant of the updated-mode count (1 + product over d>=1).
/// Kept for documentation; the worked tree example is consistent with the
/// multiplicative form implemented by action_space_size.
inline std::uint64_t action_space_size_additive(const DiagonalTotals& totals) {
    std::uint64_t n = 1;
    for (int d = 1; d < totals.size(); ++d) n *= static_cast<std::uint64_t>(totals(d) + 1);
    return 1 + n;
}

/// Decode the index-th action in lexicographic order (mixed radix over the
/// free diagonals, most significant digit first).
inline Action action_at(const DiagonalTotals& totals, Mode mode, std::uint64_t index) {
    const int s_max = totals.size();
    Action a;
    a.counts.assign(static_cast<size_t>(s_max), 0);
    const int d0 = (mode == Mode::updated) ? 1 : 0;
    if (mode == Mode::updated) a.counts[0] = totals(0);
    std::uint64_t rem = index;
    for (int d = s_max - 1; d >= d0; --d) {
        const std::uint64_t radix = static_cast<std::uint64_t>(totals(d) + 1);
        a.counts[static_cast<size_t>(d)] = static_cast<int>(rem % radix);
        rem /= radix;
    }
    if (rem != 0) throw std::out_of_range("action_at: index out of range");
    return a;
}

constexpr std::uint64_t kDefaultActionCap = 200000;

inline std::vector<Action> enumerate_actions(const DiagonalTotals& totals, Mode mode,
                                             std::uint64_t cap = kDefaultActionCap) {
    const std::uint64_t n = action_space_size(totals, mode);
    if (n > cap)
        throw std::runtime_error("enumerate_actions: action space size " + std::to_string(n) +
                                 " exceeds cap " + std::to_string(cap) + "; subsample instead");
    std::vector<Action> out;
    out.reserve(static_cast<size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(action_at(totals, mode, i));
    return out;
}

/// Seeded uniform subsample of the action space, for states over the
/// enumeration cap. Indices are drawn uniformly and deduplicated; the result
/// is sorted lexicographically.
inline std::vector<Action> sample_actions(const DiagonalTotals& totals, Mode mode, size_t k,
                                          std::uint64_t seed) {
    const std::uint64_t n = action_space_size(totals, mode);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    std::vector<std::uint64_t> idx;
    idx.reserve(k);
    for (size_t i = 0; i < 2 * k && idx.size() < k; ++i) {
        std::uint64_t candidate = pick(rng);
        bool seen = false;
        for (std::uint64_t j : idx)
            if (j == candidate) { seen = true; break; }
        if (!seen) idx.push_back(candidate);
    }
    std::sort(idx.begin(), idx.end());
    std::vector<Action> out;
    out.reserve(idx.size());
    for (std::uint64_t i : idx) out.push_back(action_at(totals, mode, i));
    return out;
}

inline bool action_feasible(const Action& u, const DiagonalTotals& totals) {
    if (static_cast<int>(u.counts.size()) != totals.size()) return false;
    for (int d = 0; d < totals.size(); ++d)
        if (u.counts[static_cast<size_t>(d)] < 0 || u.counts[static_cast<size_t>(d)] > totals(d)) return false;
    return true;
}

/// One slot of system dynamics. Within a diagonal, the charged cars are the
/// most urgent ones (smallest depart, ties by smallest charge). Cars whose
/// remaining charge would exceed their remaining connection time are clamped
/// to the main diagonal and the clamped slots are recorded as shortfall.
inline TransitionOutcome transition(const StateMatrix& s, const Action& u,
                                    const std::vector<ConnectedCar>& arrivals, const MdpConfig& cfg) {
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    if (!action_feasible(u, totals)) throw std::invalid_argument("transition: infeasible action");

    // intermediate bins after charging, before the time shift
    std::vector<std::vector<int>> mid(static_cast<size_t>(cfg.s_max) + 1,
                                      std::vector<int>(static_cast<size_t>(cfg.s_max) + 1, 0));
    for (int d = 0; d < cfg.s_max; ++d) {
        int remaining = u.counts[static_cast<size_t>(d)];
        // diagonal d holds bins (j+d, j); ascending j is ascending urgency on both axes
        for (int j = 1; j + d <= cfg.s_max; ++j) {
            const int i = j + d;
            const int here = s.count(i, j);
            const int take = std::min(remaining, here);
            remaining -= take;
            if (take > 0) mid[static_cast<size_t>(i)][static_cast<size_t>(j - 1)] += take;
            if (here - take > 0) mid[static_cast<size_t>(i)][static_cast<size_t>(j)] += here - take;
        }
    }

    TransitionOutcome out{StateMatrix(s.t() + 1, cfg.s_max, cfg.n_max), 0, u.charged_total()};
    for (int i = 1; i <= cfg.s_max; ++i) {
        for (int j = 0; j <= i; ++j) {
            const int n = mid[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (n == 0) continue;
            if (j == 0) continue;  // fully charged: dropped from the state
            const int new_i = i - 1;
            int new_j = j;
            if (new_j > new_i) {
                out.shortfall_slots += (new_j - new_i) * n;
                new_j = new_i;
            }
            if (new_i == 0) continue;  // departs (unfinished charge already counted)
            out.next_state.add_car(new_i, new_j, n);
        }
    }
    for (const auto& car : arrivals) out.next_state.add_car(car.depart, car.charge);
    return out;
}

/// Quadratic demand cost: squared fraction of stations drawing power.
inline double cost_demand(int charged_count, const MdpConfig& cfg) {
    const double f = static_cast<double>(charged_count) / cfg.n_max;
    return f * f;
}

inline double cost_demand(const StateMatrix&, const Action& u, const MdpConfig& cfg) {
    return cost_demand(u.charged_total(), cfg);
}

inline double cost_penalty(const TransitionOutcome& outcome, const MdpConfig& cfg) {
    return cfg.penalty_weight * outcome.shortfall_slots;
}

inline double transition_cost(const StateMatrix& s, const Action& u, const TransitionOutcome& outcome,
                              Mode mode, const MdpConfig& cfg) {
    double c = cost_demand(s, u, cfg);
    if (mode == Mode::old_cost) c += cost_penalty(outcome, cfg);
    return c;
}

}  // namespace evcoord
