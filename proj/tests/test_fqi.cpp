#include <gtest/gtest.h>

#include "evcoord/fqi.hpp"
#include "test_util.hpp"

using namespace evcoord;

namespace {

NetSpec toy_net_spec() {
    NetSpec spec;
    spec.hidden1 = 32;
    spec.hidden2 = 32;
    spec.learning_rate = 1e-2;
    spec.epochs = 600;
    spec.batch_size = 8;
    spec.seed = 1;
    return spec;
}

}  // namespace

TEST(Encode, FeatureLengthForDefaultScale) {
    const MdpConfig cfg = MdpConfig::with_defaults(12, 10);
    EXPECT_EQ(feature_length(cfg), 78 + 12 + 12);
}

TEST(Encode, EmptyStateIsOneHotOnly) {
    const MdpConfig cfg = MdpConfig::with_defaults(12, 10);
    const StateMatrix s(1, 12, 10);
    Action u{std::vector<int>(12, 0)};
    const Eigen::VectorXd f = encode(s, u, cfg);
    ASSERT_EQ(f.size(), 102);
    EXPECT_DOUBLE_EQ(f(78), 1.0);  // t = 1 one-hot
    EXPECT_DOUBLE_EQ(f.sum(), 1.0);
}

TEST(Encode, TreeScenarioChargeBoth) {
    const MdpConfig cfg = testutil::toy_config();
    const StateMatrix s = testutil::toy_initial_state();
    Action u{{0, 2, 0}};
    const Eigen::VectorXd f = encode(s, u, cfg);
    // layout: 6 triangular bins, 3-slot one-hot, 3 action fractions
    ASSERT_EQ(f.size(), 12);
    int nonzero = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        if (f(i) != 0.0) ++nonzero;
    EXPECT_EQ(nonzero, 4);  // two bins at 0.5, the t one-hot, fraction u(1)=1
    EXPECT_DOUBLE_EQ(f(6), 1.0);   // t = 1
    EXPECT_DOUBLE_EQ(f(10), 1.0);  // diagonal-1 fraction
    EXPECT_DOUBLE_EQ(f.sum(), 0.5 + 0.5 + 1.0 + 1.0);
}

TEST(Encode, RejectsInfeasibleAction) {
    const MdpConfig cfg = testutil::toy_config();
    EXPECT_THROW(encode(testutil::toy_initial_state(), Action{{1, 0, 0}}, cfg), std::invalid_argument);
}

TEST(Greedy, SingleFeasibleActionWinsRegardlessOfWeights) {
    const MdpConfig cfg = testutil::toy_config();
    const StateMatrix s = state_from_cars({{2, 2}, {1, 1}}, 2, cfg);
    NetSpec spec = toy_net_spec();
    spec.input = feature_length(cfg);
    const QNetwork net(spec);
    const Action u = greedy_action(net, s, Mode::updated, cfg);
    EXPECT_EQ(u.counts, (std::vector<int>{2, 0, 0}));
}

TEST(Greedy, ZeroNetworkBreaksTiesLexicographically) {
    const MdpConfig cfg = testutil::toy_config();
    NetSpec spec = toy_net_spec();
    spec.input = feature_length(cfg);
    QNetwork net(spec);
    net.set_parameters(Eigen::VectorXd::Zero(net.parameter_count()));
    const Action u = greedy_action(net, testutil::toy_initial_state(), Mode::old_cost, cfg);
    EXPECT_EQ(u.counts, (std::vector<int>{0, 0, 0}));
}

TEST(Greedy, UpdatedModeAlwaysChargesMainDiagonal) {
    const MdpConfig cfg = MdpConfig::with_defaults(4, 3);
    NetSpec spec = toy_net_spec();
    spec.input = feature_length(cfg);
    const QNetwork net(spec);
    StateMatrix s(1, 4, 3);
    s.add_car(2, 2);
    s.add_car(1, 1);
    s.add_car(3, 2);
    const Action u = greedy_action(net, s, Mode::updated, cfg);
    EXPECT_EQ(u.counts[0], 2);
}

TEST(Greedy, TieToleranceDefersWithinIndifferenceBand) {
    const MdpConfig cfg = testutil::toy_config();
    NetSpec spec = toy_net_spec();
    spec.input = feature_length(cfg);
    const QNetwork net(spec);
    FqiOptions opts;
    opts.tie_tolerance = 1e9;  // everything qualifies -> smallest action wins
    const Action u_old = greedy_action(net, testutil::toy_initial_state(), Mode::old_cost, cfg, opts);
    EXPECT_EQ(u_old.counts, (std::vector<int>{0, 0, 0}));
    // updated mode still force-charges the main diagonal
    const StateMatrix s = state_from_cars({{2, 2}, {3, 1}}, 1, cfg);
    const Action u_upd = greedy_action(net, s, Mode::updated, cfg, opts);
    EXPECT_EQ(u_upd.counts, (std::vector<int>{1, 0, 0}));
}

TEST(Greedy, ArgminInvariantUnderPositiveAffineOutput) {
    const MdpConfig cfg = MdpConfig::with_defaults(4, 4);
    NetSpec spec = toy_net_spec();
    spec.input = feature_length(cfg);
    QNetwork net(spec);
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const StateMatrix s = testutil::random_state(cfg, rng);
        if (s.terminal()) continue;
        const Action before = greedy_action(net, s, Mode::old_cost, cfg);

        // positive affine transform of the output layer: q -> 3q + 7
        QNetwork scaled = net;
        Eigen::VectorXd p = scaled.parameters();
        const Eigen::Index n_out = spec.hidden2 + 1;  // w3 then b3 at the tail
        p.tail(n_out) *= 3.0;
        p(p.size() - 1) += 7.0;
        scaled.set_parameters(p);
        const Action after = greedy_action(scaled, s, Mode::old_cost, cfg);
        EXPECT_EQ(before.counts, after.counts);
    }
}

TEST(FitFqi, EmptyDayWorldLearnsZeroCostPolicy) {
    const MdpConfig cfg = testutil::toy_config();
    const StateMatrix initial(1, cfg.s_max, cfg.n_max);
    const ExperienceSet set = testutil::exhaustive_experience(initial, Mode::updated, cfg);
    const QNetwork net = fit_fqi(set, cfg, toy_net_spec());
    EXPECT_DOUBLE_EQ(testutil::greedy_rollout_cost(net, initial, Mode::updated, cfg), 0.0);
}

TEST(FitFqi, TreeScenarioReachesDpOptimum) {
    const MdpConfig cfg = testutil::toy_config();
    const StateMatrix initial = testutil::toy_initial_state();
    for (Mode mode : {Mode::old_cost, Mode::updated}) {
        const ExperienceSet set = testutil::exhaustive_experience(initial, mode, cfg);
        ASSERT_FALSE(set.tuples.empty());
        const QNetwork net = fit_fqi(set, cfg, toy_net_spec());
        const double realized = testutil::greedy_rollout_cost(net, initial, mode, cfg);
        const double optimum = testutil::dp_optimal_cost(initial, mode, cfg);
        EXPECT_DOUBLE_EQ(realized, optimum) << "mode " << to_string(mode);
    }
}

TEST(FitFqi, DeterministicGivenSeed) {
    const MdpConfig cfg = testutil::toy_config();
    const StateMatrix initial = testutil::toy_initial_state();
    const ExperienceSet set = testutil::exhaustive_experience(initial, Mode::old_cost, cfg);
    const QNetwork a = fit_fqi(set, cfg, toy_net_spec());
    const QNetwork b = fit_fqi(set, cfg, toy_net_spec());
    Eigen::MatrixXd probe(static_cast<Eigen::Index>(set.tuples.size()), feature_length(cfg));
    for (size_t i = 0; i < set.tuples.size(); ++i)
        probe.row(static_cast<Eigen::Index>(i)) = encode(set.tuples[i].s, set.tuples[i].u, cfg);
    EXPECT_EQ(a.predict(probe), b.predict(probe));
}

TEST(FitFqi, RejectsEmptySet) {
    const MdpConfig cfg = testutil::toy_config();
    EXPECT_THROW(fit_fqi(ExperienceSet{}, cfg, toy_net_spec()), std::invalid_argument);
}
