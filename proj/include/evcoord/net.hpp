#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace evcoord {

struct NetSpec {
    int input = 0;
    int hidden1 = 64;
    int hidden2 = 64;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int epochs = 20;
    int batch_size = 256;
    std::uint64_t seed = 0;

    void validate() const {
        if (input < 1 || hidden1 < 1 || hidden2 < 1)
            throw std::invalid_argument("NetSpec: layer sizes must be >= 1");
        if (!(learning_rate > 0)) throw std::invalid_argument("NetSpec: learning_rate must be > 0");
        if (momentum < 0 || momentum >= 1) throw std::invalid_argument("NetSpec: momentum must be in [0,1)");
        if (epochs < 1 || batch_size < 1)
            throw std::invalid_argument("NetSpec: epochs and batch_size must be >= 1");
    }
};

/// Fully connected scalar-output regressor: input -> hidden1 -> hidden2 -> 1,
/// ReLU on the hidden layers, identity output. Trained by minibatch gradient
/// descent with momentum on mean squared error. All randomness is owned by
/// the seeded RNG passed at construction, so fits are reproducible.
class QNetwork {
public:
    explicit QNetwork(const NetSpec& spec) : spec_(spec), rng_(spec.seed) {
        spec_.validate();
        w1_ = glorot(spec_.hidden1, spec_.input);
        w2_ = glorot(spec_.hidden2, spec_.hidden1);
        w3_ = glorot(1, spec_.hidden2);
        b1_ = Eigen::VectorXd::Zero(spec_.hidden1);
        b2_ = Eigen::VectorXd::Zero(spec_.hidden2);
        b3_ = 0.0;
        zero_velocity();
    }

    const NetSpec& spec() const { return spec_; }

    /// Predictions for a batch; rows of X are samples.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd h1 = ((X * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
        Eigen::MatrixXd h2 = ((h1 * w2_.transpose()).rowwise() + b2_.transpose()).cwiseMax(0.0);
        return (h2 * w3_.transpose()).array() + b3_;
    }

    double predict_one(const Eigen::VectorXd& x) const {
        return predict(Eigen::MatrixXd(x.transpose()))(0);
    }

    /// Batched prediction where every row shares the same leading features
    /// (the encoded state); only the trailing features (the action) vary.
    /// The shared part of the first layer is computed once.
    Eigen::VectorXd predict_shared_prefix(const Eigen::VectorXd& prefix,
                                          const Eigen::MatrixXd& suffixes) const {
        const int k = static_cast<int>(prefix.size());
        const Eigen::VectorXd base = w1_.leftCols(k) * prefix + b1_;
        Eigen::MatrixXd h1 =
            ((suffixes * w1_.rightCols(spec_.input - k).transpose()).rowwise() + base.transpose())
                .cwiseMax(0.0);
        Eigen::MatrixXd h2 = ((h1 * w2_.transpose()).rowwise() + b2_.transpose()).cwiseMax(0.0);
        return (h2 * w3_.transpose()).array() + b3_;
    }

    /// Minibatch SGD with momentum for spec().epochs passes over (X, y).
    /// Throws if the loss turns non-finite (learning-rate blow-up).
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
        if (X.rows() == 0) throw std::invalid_argument("QNetwork::fit: empty sample set");
        if (X.rows() != y.size()) throw std::invalid_argument("QNetwork::fit: X/y size mismatch");
        if (!y.allFinite()) throw std::invalid_argument("QNetwork::fit: non-finite targets");

        const Eigen::Index n = X.rows();
        std::vector<Eigen::Index> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);

        for (int epoch = 0; epoch < spec_.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng_);
            for (Eigen::Index start = 0; start < n; start += spec_.batch_size) {
                const Eigen::Index m = std::min<Eigen::Index>(spec_.batch_size, n - start);
                Eigen::MatrixXd xb(m, spec_.input);
                Eigen::VectorXd yb(m);
                for (Eigen::Index r = 0; r < m; ++r) {
                    xb.row(r) = X.row(order[static_cast<size_t>(start + r)]);
                    yb(r) = y(order[static_cast<size_t>(start + r)]);
                }
                Gradients g;
                const double loss = loss_and_gradients(xb, yb, g);
                if (!std::isfinite(loss))
                    throw std::runtime_error("QNetwork::fit: non-finite loss at epoch " +
                                             std::to_string(epoch));
                apply(g);
            }
        }
    }

    struct Gradients {
        Eigen::MatrixXd w1, w2;
        Eigen::RowVectorXd w3;
        Eigen::VectorXd b1, b2;
        double b3 = 0.0;
    };

    /// MSE loss and analytic gradients for a batch (also the hook used by the
    /// finite-difference tests).
    double loss_and_gradients(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Gradients& g) const {
        const Eigen::Index m = X.rows();
        Eigen::MatrixXd z1 = (X * w1_.transpose()).rowwise() + b1_.transpose();
        Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
        Eigen::MatrixXd z2 = (h1 * w2_.transpose()).rowwise() + b2_.transpose();
        Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
        Eigen::VectorXd pred = (h2 * w3_.transpose()).array() + b3_;

        const Eigen::VectorXd err = pred - y;
        const double loss = err.squaredNorm() / static_cast<double>(m);

        const Eigen::VectorXd d_pred = 2.0 * err / static_cast<double>(m);
        g.w3 = d_pred.transpose() * h2;
        g.b3 = d_pred.sum();
        Eigen::MatrixXd d2 = (d_pred * w3_).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
        g.w2 = d2.transpose() * h1;
        g.b2 = d2.colwise().sum();
        Eigen::MatrixXd d1 = (d2 * w2_).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
        g.w1 = d1.transpose() * X;
        g.b1 = d1.colwise().sum();
        return loss;
    }

    /// Smallest |pre-activation| over both hidden layers for a batch.
    /// Finite-difference gradient checks are only valid away from the ReLU
    /// kinks; this lets callers detect (and reseed) degenerate cases.
    double preactivation_margin(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd z1 = (X * w1_.transpose()).rowwise() + b1_.transpose();
        Eigen::MatrixXd z2 = (z1.cwiseMax(0.0) * w2_.transpose()).rowwise() + b2_.transpose();
        return std::min(z1.cwiseAbs().minCoeff(), z2.cwiseAbs().minCoeff());
    }

    /// Flattened parameter access (w1,b1,w2,b2,w3,b3 order); test hook.
    Eigen::VectorXd parameters() const {
        Eigen::VectorXd p(parameter_count());
        Eigen::Index k = 0;
        auto put = [&](const double* data, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) p(k++) = data[i];
        };
        put(w1_.data(), w1_.size());
        put(b1_.data(), b1_.size());
        put(w2_.data(), w2_.size());
        put(b2_.data(), b2_.size());
        put(w3_.data(), w3_.size());
        p(k++) = b3_;
        return p;
    }

    void set_parameters(const Eigen::VectorXd& p) {
        if (p.size() != parameter_count())
            throw std::invalid_argument("QNetwork::set_parameters: size mismatch");
        Eigen::Index k = 0;
        auto take = [&](double* data, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) data[i] = p(k++);
        };
        take(w1_.data(), w1_.size());
        take(b1_.data(), b1_.size());
        take(w2_.data(), w2_.size());
        take(b2_.data(), b2_.size());
        take(w3_.data(), w3_.size());
        b3_ = p(k++);
    }

    Eigen::VectorXd flatten(const Gradients& g) const {
        Eigen::VectorXd p(parameter_count());
        Eigen::Index k = 0;
        auto put = [&](const double* data, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) p(k++) = data[i];
        };
        put(g.w1.data(), g.w1.size());
        put(g.b1.data(), g.b1.size());
        put(g.w2.data(), g.w2.size());
        put(g.b2.data(), g.b2.size());
        put(g.w3.data(), g.w3.size());
        p(k++) = g.b3;
        return p;
    }

    Eigen::Index parameter_count() const {
        return w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() + 1;
    }

    // --- checkpoint: "EVQN" magic, u32 sizes, row-major little-endian f64 ---

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("QNetwork::save: cannot open " + path);
        out.write("EVQN", 4);
        const std::uint32_t sizes[3] = {static_cast<std::uint32_t>(spec_.input),
                                        static_cast<std::uint32_t>(spec_.hidden1),
                                        static_cast<std::uint32_t>(spec_.hidden2)};
        out.write(reinterpret_cast<const char*>(sizes), sizeof(sizes));
        write_matrix(out, w1_);
        write_vector(out, b1_);
        write_matrix(out, w2_);
        write_vector(out, b2_);
        out.write(reinterpret_cast<const char*>(w3_.data()),
                  static_cast<std::streamsize>(sizeof(double)) * w3_.size());
        out.write(reinterpret_cast<const char*>(&b3_), sizeof(double));
    }

    static QNetwork load(const std::string& path, NetSpec spec = {}) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("QNetwork::load: cannot open " + path);
        char magic[4];
        in.read(magic, 4);
        if (!in || std::string(magic, 4) != "EVQN")
            throw std::runtime_error("QNetwork::load: bad checkpoint magic in " + path);
        std::uint32_t sizes[3];
        in.read(reinterpret_cast<char*>(sizes), sizeof(sizes));
        spec.input = static_cast<int>(sizes[0]);
        spec.hidden1 = static_cast<int>(sizes[1]);
        spec.hidden2 = static_cast<int>(sizes[2]);
        QNetwork net(spec);
        read_matrix(in, net.w1_);
        read_vector(in, net.b1_);
        read_matrix(in, net.w2_);
        read_vector(in, net.b2_);
        in.read(reinterpret_cast<char*>(net.w3_.data()),
                static_cast<std::streamsize>(sizeof(double)) * net.w3_.size());
        in.read(reinterpret_cast<char*>(&net.b3_), sizeof(double));
        if (!in) throw std::runtime_error("QNetwork::load: truncated checkpoint " + path);
        return net;
    }

private:
    Eigen::MatrixXd glorot(int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = u(rng_);
        return m;
    }

    void zero_velocity() {
        v_.w1 = Eigen::MatrixXd::Zero(spec_.hidden1, spec_.input);
        v_.w2 = Eigen::MatrixXd::Zero(spec_.hidden2, spec_.hidden1);
        v_.w3 = Eigen::RowVectorXd::Zero(spec_.hidden2);
        v_.b1 = Eigen::VectorXd::Zero(spec_.hidden1);
        v_.b2 = Eigen::VectorXd::Zero(spec_.hidden2);
        v_.b3 = 0.0;
    }

    void apply(const Gradients& g) {
        const double mu = spec_.momentum, lr = spec_.learning_rate;
        v_.w1 = mu * v_.w1 - lr * g.w1;
        v_.b1 = mu * v_.b1 - lr * g.b1;
        v_.w2 = mu * v_.w2 - lr * g.w2;
        v_.b2 = mu * v_.b2 - lr * g.b2;
        v_.w3 = mu * v_.w3 - lr * g.w3;
        v_.b3 = mu * v_.b3 - lr * g.b3;
        w1_ += v_.w1;
        b1_ += v_.b1;
        w2_ += v_.w2;
        b2_ += v_.b2;
        w3_ += v_.w3;
        b3_ += v_.b3;
    }

    static void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
    }
    static void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(sizeof(double)) * v.size());
    }
    static void read_matrix(std::ifstream& in, Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof(double));
                m(r, c) = v;
            }
    }
    static void read_vector(std::ifstream& in, Eigen::VectorXd& v) {
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double)) * v.size());
    }

    NetSpec spec_;
    std::mt19937_64 rng_;
    Eigen::MatrixXd w1_, w2_;
    Eigen::RowVectorXd w3_;
    Eigen::VectorXd b1_, b2_;
    double b3_ = 0.0;
    Gradients v_;  // momentum velocities
};

}  // namespace evcoord
