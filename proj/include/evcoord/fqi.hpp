#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "evcoord/experience.hpp"
#include "evcoord/mdp.hpp"
#include "evcoord/net.hpp"

namespace evcoord {

/// Feature layout: flattened upper-triangular occupancy fractions
/// (s_max(s_max+1)/2), one-hot timeslot (s_max), per-diagonal charge
/// fractions (s_max). All features lie in [0,1].
inline int state_feature_length(const MdpConfig& cfg) {
    return cfg.s_max * (cfg.s_max + 1) / 2 + cfg.s_max;
}

inline int feature_length(const MdpConfig& cfg) { return state_feature_length(cfg) + cfg.s_max; }

inline Eigen::VectorXd encode_state(const StateMatrix& s, const MdpConfig& cfg) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(state_feature_length(cfg));
    int k = 0;
    for (int i = 1; i <= cfg.s_max; ++i)
        for (int j = 1; j <= i; ++j) f(k++) = s.fraction(i, j);
    if (s.t() >= 1 && s.t() <= cfg.s_max) f(k + s.t() - 1) = 1.0;
    return f;
}

inline Eigen::RowVectorXd encode_action(const Action& u, const DiagonalTotals& totals,
                                        const MdpConfig& cfg) {
    Eigen::RowVectorXd f(cfg.s_max);
    for (int d = 0; d < cfg.s_max; ++d) f(d) = u.fraction(d, totals);
    return f;
}

inline Eigen::VectorXd encode(const StateMatrix& s, const Action& u, const MdpConfig& cfg) {
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    if (!action_feasible(u, totals)) throw std::invalid_argument("encode: infeasible action");
    Eigen::VectorXd f(feature_length(cfg));
    f.head(state_feature_length(cfg)) = encode_state(s, cfg);
    f.tail(cfg.s_max) = encode_action(u, totals, cfg).transpose();
    return f;
}

struct FqiOptions {
    std::uint64_t action_cap = kDefaultActionCap;
    size_t subsample = 4096;   // actions drawn when a state exceeds the cap
    std::uint64_t seed = 0;    // derives per-state subsample seeds; must match
                               // between training and evaluation
    double tie_tolerance = 0.0;  // greedy indifference band: among actions with
                                 // Q within this of the minimum, the policy
                                 // defers (smallest action in enumeration order)
};

/// Candidate actions for a state: the full lexicographic enumeration, or a
/// seeded uniform subsample when the space exceeds the cap. The subsample
/// seed is derived from (options seed, state hash) so training and evaluation
/// see the same candidates.
inline std::vector<Action> candidate_actions(const StateMatrix& s, Mode mode, const MdpConfig& cfg,
                                             const FqiOptions& opts) {
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    if (action_space_size(totals, mode) <= opts.action_cap)
        return enumerate_actions(totals, mode, opts.action_cap);
    return sample_actions(totals, mode, opts.subsample, detail::splitmix64(opts.seed ^ s.hash()));
}

namespace detail {
inline Eigen::MatrixXd action_suffixes(const std::vector<Action>& actions, const DiagonalTotals& totals,
                                       const MdpConfig& cfg) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(actions.size()), cfg.s_max);
    for (size_t r = 0; r < actions.size(); ++r) m.row(static_cast<Eigen::Index>(r)) =
        encode_action(actions[r], totals, cfg);
    return m;
}
}  // namespace detail

inline double min_q(const QNetwork& net, const StateMatrix& s, Mode mode, const MdpConfig& cfg,
                    const FqiOptions& opts) {
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    const std::vector<Action> actions = candidate_actions(s, mode, cfg, opts);
    const Eigen::VectorXd q =
        net.predict_shared_prefix(encode_state(s, cfg), detail::action_suffixes(actions, totals, cfg));
    return q.minCoeff();
}

/// Argmin of the Q-network over the state's candidate actions; ties (exact,
/// or within opts.tie_tolerance of the minimum) break toward the
/// lexicographically smallest action, i.e. toward deferring charge.
inline Action greedy_action(const QNetwork& net, const StateMatrix& s, Mode mode, const MdpConfig& cfg,
                            const FqiOptions& opts = {}) {
    const DiagonalTotals totals = diagonal_totals(s, cfg);
    const std::vector<Action> actions = candidate_actions(s, mode, cfg, opts);
    const Eigen::VectorXd q =
        net.predict_shared_prefix(encode_state(s, cfg), detail::action_suffixes(actions, totals, cfg));
    const double q_min = q.minCoeff();
    for (Eigen::Index i = 0; i < q.size(); ++i)
        if (q(i) <= q_min + opts.tie_tolerance) return actions[static_cast<size_t>(i)];
    return actions.front();  // unreachable: the minimum always qualifies
}

/// Fitted Q-iteration: T = s_max sweeps of Bellman-target regression over the
/// experience set. Q_0 is identically zero; iteration k regresses
/// cost + min_u' Q_{k-1}(s', u'), with terminal successors contributing the
/// cost alone. The network is warm-started across iterations. Successor
/// minima are memoized per distinct state within an iteration.
inline QNetwork fit_fqi(const ExperienceSet& F, const MdpConfig& cfg, NetSpec spec,
                        const FqiOptions& opts = {}) {
    if (F.tuples.empty()) throw std::invalid_argument("fit_fqi: empty experience set");
    spec.input = feature_length(cfg);

    const Eigen::Index n = static_cast<Eigen::Index>(F.tuples.size());
    Eigen::MatrixXd X(n, spec.input);
    Eigen::VectorXd costs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X.row(i) = encode(F.tuples[static_cast<size_t>(i)].s, F.tuples[static_cast<size_t>(i)].u, cfg);
        costs(i) = F.tuples[static_cast<size_t>(i)].cost;
    }

    QNetwork net(spec);
    Eigen::VectorXd targets = costs;  // Q_0 == 0
    for (int iter = 1; iter <= cfg.s_max; ++iter) {
        if (iter > 1) {
            std::unordered_map<StateMatrix, double, StateHash> memo;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& tup = F.tuples[static_cast<size_t>(i)];
                if (tup.terminal) {
                    targets(i) = costs(i);
                    continue;
                }
                auto it = memo.find(tup.s_next);
                if (it == memo.end())
                    it = memo.emplace(tup.s_next, min_q(net, tup.s_next, F.mode, cfg, opts)).first;
                targets(i) = costs(i) + it->second;
            }
        }
        net.fit(X, targets);
    }
    return net;
}

}  // namespace evcoord
