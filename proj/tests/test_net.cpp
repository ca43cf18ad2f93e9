#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "evcoord/net.hpp"

using namespace evcoord;

namespace {

NetSpec tiny_spec(int input, std::uint64_t seed) {
    NetSpec spec;
    spec.input = input;
    spec.hidden1 = 4;
    spec.hidden2 = 4;
    spec.seed = seed;
    return spec;
}

// central finite differences over all parameters
Eigen::VectorXd fd_gradient(QNetwork& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double step) {
    const Eigen::VectorXd theta = net.parameters();
    Eigen::VectorXd grad(theta.size());
    QNetwork::Gradients unused;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        Eigen::VectorXd plus = theta, minus = theta;
        plus(k) += step;
        minus(k) -= step;
        net.set_parameters(plus);
        const double f_plus = net.loss_and_gradients(X, y, unused);
        net.set_parameters(minus);
        const double f_minus = net.loss_and_gradients(X, y, unused);
        grad(k) = (f_plus - f_minus) / (2 * step);
    }
    net.set_parameters(theta);
    return grad;
}

}  // namespace

TEST(Fit, ConstantZeroTarget) {
    NetSpec spec;
    spec.input = 5;
    spec.hidden1 = 16;
    spec.hidden2 = 16;
    spec.learning_rate = 1e-2;
    spec.epochs = 100;
    spec.batch_size = 16;
    spec.seed = 1;
    QNetwork net(spec);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd X(64, 5);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = u(rng);
    net.fit(X, Eigen::VectorXd::Zero(64));
    EXPECT_LT(net.predict(X).cwiseAbs().mean(), 1e-2);
}

TEST(Fit, ConstantHalfTarget) {
    NetSpec spec;
    spec.input = 1;
    spec.hidden1 = 8;
    spec.hidden2 = 8;
    spec.learning_rate = 1e-2;
    spec.epochs = 300;
    spec.batch_size = 8;
    spec.seed = 3;
    QNetwork net(spec);
    Eigen::MatrixXd X(32, 1);
    for (int r = 0; r < 32; ++r) X(r, 0) = r / 32.0;
    net.fit(X, Eigen::VectorXd::Constant(32, 0.5));
    const Eigen::VectorXd pred = net.predict(X);
    for (Eigen::Index r = 0; r < pred.size(); ++r) EXPECT_NEAR(pred(r), 0.5, 1e-2);
}

TEST(Gradients, MatchCentralFiniteDifferences) {
    const double step = 1e-5;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 25 && seed < 200; ++seed) {
        const int input = 2 + static_cast<int>(seed % 4);
        QNetwork net(tiny_spec(input, seed));
        Eigen::MatrixXd X(8, input);
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = u(rng);
        Eigen::VectorXd y(8);
        for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = u(rng);
        if (net.preactivation_margin(X) < 1e-3) continue;  // too close to a ReLU kink for FD

        QNetwork::Gradients g;
        net.loss_and_gradients(X, y, g);
        const Eigen::VectorXd analytic = net.flatten(g);
        const Eigen::VectorXd numeric = fd_gradient(net, X, y, step);
        const double rel = (analytic - numeric).norm() / std::max(1e-12, analytic.norm() + numeric.norm());
        EXPECT_LT(rel, 1e-4) << "seed " << seed;
        ++checked;
    }
    EXPECT_GE(checked, 25);
}

TEST(Fit, DeterministicGivenSeed) {
    NetSpec spec = tiny_spec(3, 9);
    spec.epochs = 10;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd X(40, 3);
    Eigen::VectorXd y(40);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = u(rng);
        y(r) = u(rng);
    }
    QNetwork a(spec), b(spec);
    a.fit(X, y);
    b.fit(X, y);
    EXPECT_EQ(a.predict(X), b.predict(X));
}

TEST(Fit, DivergenceAborts) {
    NetSpec spec = tiny_spec(2, 5);
    spec.learning_rate = 1e6;
    spec.epochs = 50;
    QNetwork net(spec);
    Eigen::MatrixXd X(16, 2);
    Eigen::VectorXd y(16);
    for (int r = 0; r < 16; ++r) {
        X(r, 0) = r;
        X(r, 1) = r * r;
        y(r) = r;
    }
    EXPECT_THROW(net.fit(X, y), std::runtime_error);
}

TEST(Fit, RejectsBadInput) {
    QNetwork net(tiny_spec(2, 1));
    EXPECT_THROW(net.fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), std::invalid_argument);
    Eigen::MatrixXd X(2, 2);
    X.setZero();
    Eigen::VectorXd y(2);
    y << 1.0, std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(net.fit(X, y), std::invalid_argument);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
    NetSpec spec = tiny_spec(4, 23);
    QNetwork net(spec);
    const std::string path = ::testing::TempDir() + "qnet_roundtrip.evqn";
    net.save(path);
    const QNetwork loaded = QNetwork::load(path);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd X(10, 4);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = u(rng);
    EXPECT_EQ(net.predict(X), loaded.predict(X));
    std::remove(path.c_str());
}

TEST(Checkpoint, RejectsGarbage) {
    const std::string path = ::testing::TempDir() + "qnet_bad.evqn";
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    EXPECT_THROW(QNetwork::load(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST(SharedPrefix, MatchesFullPrediction) {
    NetSpec spec = tiny_spec(6, 31);
    QNetwork net(spec);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd prefix(4);
    for (int i = 0; i < 4; ++i) prefix(i) = u(rng);
    Eigen::MatrixXd suffixes(5, 2);
    for (Eigen::Index r = 0; r < 5; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) suffixes(r, c) = u(rng);

    Eigen::MatrixXd full(5, 6);
    for (Eigen::Index r = 0; r < 5; ++r) {
        full.row(r).head(4) = prefix.transpose();
        full.row(r).tail(2) = suffixes.row(r);
    }
    const Eigen::VectorXd a = net.predict(full);
    const Eigen::VectorXd b = net.predict_shared_prefix(prefix, suffixes);
    for (Eigen::Index r = 0; r < 5; ++r) EXPECT_NEAR(a(r), b(r), 1e-12);
}
