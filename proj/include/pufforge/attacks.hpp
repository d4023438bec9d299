#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pufforge/apuf.hpp"
#include "pufforge/bitvec.hpp"
#include "pufforge/errors.hpp"
#include "pufforge/obfuscation.hpp"
#include "pufforge/rng.hpp"

namespace pufforge {

// ---------------------------------------------------------------------------
// CRP datasets
// ---------------------------------------------------------------------------

struct DatasetMeta {
    std::string puf_kind; // "apuf" or "lfsr_apuf"
    int n = 0;
    unsigned base = 0;
    std::uint64_t source_seed = 0;
    std::size_t count = 0;
};

struct CrpDataset {
    std::vector<std::pair<BitVec, int>> entries;
    DatasetMeta meta;
};

/// Challenge-to-bit oracle; throws StuckSeed for challenges the target
/// filters, which collect_crps handles by resampling.
using CrpOracle = std::function<int(const BitVec&, RandomStream&)>;

inline CrpOracle make_apuf_oracle(const ApufInstance& inst, const VoteMaskPolicy& policy) {
    return [inst, policy](const BitVec& c, RandomStream& rng) {
        return evaluate_voted(inst, c, policy, rng).bit;
    };
}

inline CrpOracle make_lfsr_apuf_oracle(const LfsrApufDevice& dev) {
    return [dev](const BitVec& c, RandomStream& rng) { return respond(dev, c, rng).bit; };
}

/// Distinct uniform challenges with responses from the oracle's voted
/// evaluation. The attacker's view: external challenges only.
inline CrpDataset collect_crps(const CrpOracle& oracle, std::size_t width, std::size_t count,
                               RandomStream& rng) {
    if (width < 64 && count > (1ull << width) / 2)
        throw std::invalid_argument("collect_crps: count too close to the challenge space");
    CrpDataset ds;
    ds.entries.reserve(count);
    std::unordered_set<std::string> seen;
    RandomStream eval = rng.split(0xE7A1);
    while (ds.entries.size() < count) {
        BitVec c = rng.next_bits(width);
        std::string key = c.to_hex();
        if (seen.count(key)) continue;
        int bit;
        try {
            bit = oracle(c, eval);
        } catch (const StuckSeed&) {
            continue;
        }
        seen.insert(std::move(key));
        ds.entries.emplace_back(std::move(c), bit);
    }
    ds.meta.count = count;
    return ds;
}

/// Returns a copy with the responses randomly permuted; chance-level control.
inline CrpDataset shuffle_labels(const CrpDataset& ds, std::uint64_t seed) {
    CrpDataset out = ds;
    RandomStream rng(seed);
    for (std::size_t i = out.entries.size(); i > 1; --i) {
        std::size_t j = rng.next_below(i);
        std::swap(out.entries[i - 1].second, out.entries[j].second);
    }
    return out;
}

// CSV form: header `challenge,response`, challenge in len:hex form.
inline void write_csv(const CrpDataset& ds, std::ostream& os) {
    os << "challenge,response\n";
    for (const auto& [c, r] : ds.entries) os << c.to_hex() << ',' << r << '\n';
}

inline CrpDataset read_csv(std::istream& is) {
    CrpDataset ds;
    std::string line;
    if (!std::getline(is, line) || line != "challenge,response")
        throw ParseError("dataset csv: bad header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("dataset csv: missing comma");
        BitVec c = BitVec::from_hex(line.substr(0, comma));
        std::string resp = line.substr(comma + 1);
        if (resp != "0" && resp != "1") throw ParseError("dataset csv: response must be 0/1");
        ds.entries.emplace_back(std::move(c), resp == "1" ? 1 : 0);
    }
    ds.meta.count = ds.entries.size();
    return ds;
}

inline nlohmann::json meta_to_json(const DatasetMeta& m) {
    return nlohmann::json{{"puf_kind", m.puf_kind},
                          {"n", m.n},
                          {"base", m.base},
                          {"source_seed", m.source_seed},
                          {"count", m.count}};
}

inline DatasetMeta meta_from_json(const nlohmann::json& j) {
    DatasetMeta m;
    m.puf_kind = j.at("puf_kind").get<std::string>();
    m.n = j.at("n").get<int>();
    m.base = j.at("base").get<unsigned>();
    m.source_seed = j.at("source_seed").get<std::uint64_t>();
    m.count = j.at("count").get<std::size_t>();
    return m;
}

// ---------------------------------------------------------------------------
// Feature extraction and the train/test split
// ---------------------------------------------------------------------------

struct FeatureMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data; // row-major
    std::vector<int> labels;

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

/// Parity features of the full observed challenge (the strongest standard
/// attacker model); raw ±1 challenge bits plus a constant as the alternative.
inline FeatureMatrix extract_features(const CrpDataset& ds, bool raw_bits) {
    FeatureMatrix m;
    m.rows = ds.entries.size();
    if (m.rows == 0) throw std::invalid_argument("extract_features: empty dataset");
    std::size_t width = ds.entries[0].first.size();
    m.cols = width + 1;
    m.data.resize(m.rows * m.cols);
    m.labels.resize(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const auto& [c, y] = ds.entries[r];
        if (c.size() != width) throw std::invalid_argument("extract_features: ragged widths");
        double* out = m.row(r);
        if (raw_bits) {
            for (std::size_t i = 1; i <= width; ++i) out[i - 1] = c.bit(i) ? -1.0 : 1.0;
            out[width] = 1.0;
        } else {
            auto phi = phi_transform(c);
            std::copy(phi.begin(), phi.end(), out);
        }
        m.labels[r] = y;
    }
    return m;
}

struct Split {
    std::vector<std::size_t> train, test;
};

inline Split split_indices(std::size_t rows, double train_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), 0);
    RandomStream rng(seed);
    for (std::size_t i = rows; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_below(i)]);
    std::size_t n_train = static_cast<std::size_t>(static_cast<double>(rows) * train_fraction);
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return s;
}

struct AttackReport {
    std::string algorithm;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double test_accuracy = 0.0;
    double train_accuracy = 0.0;
    nlohmann::json hyper;
    double wall_ms = 0.0;
};

inline nlohmann::json report_to_json(const AttackReport& r, bool include_timing = true) {
    nlohmann::json j{{"algorithm", r.algorithm},
                     {"train_size", r.train_size},
                     {"test_size", r.test_size},
                     {"test_accuracy", r.test_accuracy},
                     {"train_accuracy", r.train_accuracy},
                     {"hyperparameters", r.hyper}};
    if (include_timing) j["wall_ms"] = r.wall_ms;
    return j;
}

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double linear_accuracy(const FeatureMatrix& m, const std::vector<std::size_t>& idx,
                              const std::vector<double>& w) {
    std::size_t correct = 0;
    for (std::size_t r : idx) {
        int pred = dot(m.row(r), w.data(), m.cols) >= 0 ? 1 : 0;
        correct += pred == m.labels[r];
    }
    return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Logistic regression: full-batch gradient descent on cross-entropy over the
// parity features (the feature map makes a bare APUF linearly separable).
// ---------------------------------------------------------------------------

struct LrHyper {
    int iters = 400;
    double learning_rate = 2.0;
    double l2 = 1e-3;
    std::uint64_t seed = 1;
    bool raw_features = false;
};

inline AttackReport lr_attack(const CrpDataset& ds, double split = 0.8, LrHyper hyper = {}) {
    detail::Stopwatch watch;
    FeatureMatrix m = extract_features(ds, hyper.raw_features);
    Split s = split_indices(m.rows, split, hyper.seed);

    std::vector<double> w(m.cols, 0.0);
    std::vector<double> grad(m.cols);
    for (int it = 0; it < hyper.iters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t r : s.train) {
            const double* x = m.row(r);
            double err = detail::sigmoid(detail::dot(x, w.data(), m.cols)) - m.labels[r];
            for (std::size_t i = 0; i < m.cols; ++i) grad[i] += err * x[i];
        }
        double inv = 1.0 / static_cast<double>(s.train.size());
        for (std::size_t i = 0; i < m.cols; ++i)
            w[i] -= hyper.learning_rate * (grad[i] * inv + hyper.l2 * w[i]);
    }

    AttackReport rep;
    rep.algorithm = "lr";
    rep.train_size = s.train.size();
    rep.test_size = s.test.size();
    rep.train_accuracy = detail::linear_accuracy(m, s.train, w);
    rep.test_accuracy = detail::linear_accuracy(m, s.test, w);
    rep.hyper = {{"iters", hyper.iters},         {"learning_rate", hyper.learning_rate},
                 {"l2", hyper.l2},               {"seed", hyper.seed},
                 {"raw_features", hyper.raw_features}};
    rep.wall_ms = watch.ms();
    return rep;
}

// ---------------------------------------------------------------------------
// Linear soft-margin SVM trained by stochastic sub-gradient descent on the
// hinge loss (Pegasos schedule).
// ---------------------------------------------------------------------------

struct SvmHyper {
    int epochs = 30;
    double lambda = 1e-4;
    std::uint64_t seed = 1;
    bool raw_features = false;
};

inline AttackReport svm_attack(const CrpDataset& ds, double split = 0.8, SvmHyper hyper = {}) {
    detail::Stopwatch watch;
    FeatureMatrix m = extract_features(ds, hyper.raw_features);
    Split s = split_indices(m.rows, split, hyper.seed);

    std::vector<double> w(m.cols, 0.0);
    RandomStream rng(detail::mix64(hyper.seed, 0x53564Dull));
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t k = 0; k < s.train.size(); ++k) {
            std::size_t r = s.train[rng.next_below(s.train.size())];
            const double* x = m.row(r);
            double y = m.labels[r] ? 1.0 : -1.0;
            double eta = 1.0 / (hyper.lambda * static_cast<double>(++t));
            double margin = y * detail::dot(x, w.data(), m.cols);
            for (std::size_t i = 0; i < m.cols; ++i) {
                w[i] *= 1.0 - eta * hyper.lambda;
                if (margin < 1.0) w[i] += eta * y * x[i];
            }
        }
    }

    AttackReport rep;
    rep.algorithm = "svm";
    rep.train_size = s.train.size();
    rep.test_size = s.test.size();
    rep.train_accuracy = detail::linear_accuracy(m, s.train, w);
    rep.test_accuracy = detail::linear_accuracy(m, s.test, w);
    rep.hyper = {{"epochs", hyper.epochs},
                 {"lambda", hyper.lambda},
                 {"seed", hyper.seed},
                 {"raw_features", hyper.raw_features}};
    rep.wall_ms = watch.ms();
    return rep;
}

// ---------------------------------------------------------------------------
// Multilayer perceptron: one rectified hidden layer into a sigmoid output,
// trained by backpropagation with mini-batch gradient descent and momentum.
// ---------------------------------------------------------------------------

struct AnnHyper {
    int hidden = 64;
    int epochs = 60;
    int batch = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    bool raw_features = false;
};

/// Weights flattened as [W1 (hidden x in), b1, W2, b2] so the finite
/// difference check can sweep one parameter vector.
class MlpNet {
public:
    MlpNet(std::size_t inputs, std::size_t hidden, RandomStream& rng)
        : in_(inputs), hid_(hidden), theta_(hidden * inputs + hidden + hidden + 1, 0.0) {
        double scale = std::sqrt(2.0 / static_cast<double>(inputs));
        for (std::size_t i = 0; i < hid_ * in_; ++i) theta_[i] = scale * rng.next_gaussian();
        std::size_t w2_off = hid_ * in_ + hid_;
        for (std::size_t i = 0; i < hid_; ++i) theta_[w2_off + i] = 0.1 * rng.next_gaussian();
    }

    std::size_t inputs() const { return in_; }
    std::size_t hidden() const { return hid_; }
    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }

    double predict(const double* x) const {
        double z2 = *b2();
        for (std::size_t h = 0; h < hid_; ++h) {
            double z1 = b1()[h] + detail::dot(w1() + h * in_, x, in_);
            if (z1 > 0) z2 += w2()[h] * z1;
        }
        return detail::sigmoid(z2);
    }

    /// Mean binary cross-entropy over the batch.
    double loss(const FeatureMatrix& m, const std::vector<std::size_t>& idx) const {
        double total = 0;
        for (std::size_t r : idx) {
            double p = predict(m.row(r));
            p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
            total += m.labels[r] ? -std::log(p) : -std::log(1.0 - p);
        }
        return total / static_cast<double>(idx.size());
    }

    /// Analytic gradient of loss() in the flattened layout.
    std::vector<double> gradient(const FeatureMatrix& m, const std::vector<std::size_t>& idx) const {
        std::vector<double> g(theta_.size(), 0.0);
        std::vector<double> a1(hid_);
        double* gw1 = g.data();
        double* gb1 = g.data() + hid_ * in_;
        double* gw2 = gb1 + hid_;
        double* gb2 = gw2 + hid_;
        for (std::size_t r : idx) {
            const double* x = m.row(r);
            double z2 = *b2();
            for (std::size_t h = 0; h < hid_; ++h) {
                double z1 = b1()[h] + detail::dot(w1() + h * in_, x, in_);
                a1[h] = z1 > 0 ? z1 : 0.0;
                z2 += w2()[h] * a1[h];
            }
            double dz2 = detail::sigmoid(z2) - m.labels[r];
            *gb2 += dz2;
            for (std::size_t h = 0; h < hid_; ++h) {
                gw2[h] += dz2 * a1[h];
                if (a1[h] > 0) {
                    double dz1 = dz2 * w2()[h];
                    gb1[h] += dz1;
                    const double* row = x;
                    double* grow = gw1 + h * in_;
                    for (std::size_t i = 0; i < in_; ++i) grow[i] += dz1 * row[i];
                }
            }
        }
        double inv = 1.0 / static_cast<double>(idx.size());
        for (double& v : g) v *= inv;
        return g;
    }

private:
    const double* w1() const { return theta_.data(); }
    const double* b1() const { return theta_.data() + hid_ * in_; }
    const double* w2() const { return b1() + hid_; }
    const double* b2() const { return w2() + hid_; }

    std::size_t in_, hid_;
    std::vector<double> theta_;
};

/// Max relative error between analytic and central finite-difference
/// gradients over every parameter of a small fixed network.
inline double gradient_check(MlpNet& net, const FeatureMatrix& m,
                             const std::vector<std::size_t>& idx, double eps = 1e-5) {
    std::vector<double> analytic = net.gradient(m, idx);
    double worst = 0;
    for (std::size_t i = 0; i < net.theta().size(); ++i) {
        double saved = net.theta()[i];
        net.theta()[i] = saved + eps;
        double up = net.loss(m, idx);
        net.theta()[i] = saved - eps;
        double down = net.loss(m, idx);
        net.theta()[i] = saved;
        double numeric = (up - down) / (2 * eps);
        double denom = std::max(std::abs(numeric) + std::abs(analytic[i]), 1e-8);
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

inline AttackReport ann_attack(const CrpDataset& ds, double split = 0.8, AnnHyper hyper = {}) {
    detail::Stopwatch watch;
    FeatureMatrix m = extract_features(ds, hyper.raw_features);
    Split s = split_indices(m.rows, split, hyper.seed);

    RandomStream rng(detail::mix64(hyper.seed, 0x414E4Eull));
    MlpNet net(m.cols, static_cast<std::size_t>(hyper.hidden), rng);
    std::vector<double> velocity(net.theta().size(), 0.0);
    std::vector<std::size_t> order = s.train;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);
        for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(hyper.batch)) {
            std::vector<std::size_t> batch(
                order.begin() + static_cast<std::ptrdiff_t>(off),
                order.begin() + static_cast<std::ptrdiff_t>(
                                    std::min(off + static_cast<std::size_t>(hyper.batch),
                                             order.size())));
            std::vector<double> g = net.gradient(m, batch);
            for (std::size_t i = 0; i < g.size(); ++i) {
                velocity[i] = hyper.momentum * velocity[i] - hyper.learning_rate * g[i];
                net.theta()[i] += velocity[i];
            }
        }
    }

    auto accuracy = [&](const std::vector<std::size_t>& idx) {
        std::size_t correct = 0;
        for (std::size_t r : idx) correct += (net.predict(m.row(r)) >= 0.5 ? 1 : 0) == m.labels[r];
        return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
    };

    AttackReport rep;
    rep.algorithm = "ann";
    rep.train_size = s.train.size();
    rep.test_size = s.test.size();
    rep.train_accuracy = accuracy(s.train);
    rep.test_accuracy = accuracy(s.test);
    rep.hyper = {{"hidden", hyper.hidden},       {"epochs", hyper.epochs},
                 {"batch", hyper.batch},         {"learning_rate", hyper.learning_rate},
                 {"momentum", hyper.momentum},   {"seed", hyper.seed},
                 {"raw_features", hyper.raw_features}};
    rep.wall_ms = watch.ms();
    return rep;
}

// ---------------------------------------------------------------------------
// (mu, lambda) evolution strategy over a candidate weight vector with
// self-adaptive step size; fitness is training accuracy of the sign model.
// ---------------------------------------------------------------------------

struct EsHyper {
    int population = 64;  // lambda
    int parents = 16;     // mu
    int generations = 200;
    double sigma_init = 0.3;
    std::uint64_t seed = 1;
    bool raw_features = false;
};

inline AttackReport es_attack(const CrpDataset& ds, double split = 0.8, EsHyper hyper = {}) {
    detail::Stopwatch watch;
    FeatureMatrix m = extract_features(ds, hyper.raw_features);
    Split s = split_indices(m.rows, split, hyper.seed);
    std::size_t d = m.cols;

    RandomStream rng(detail::mix64(hyper.seed, 0x4553ull));
    double tau = 1.0 / std::sqrt(2.0 * static_cast<double>(d));

    struct Individual {
        std::vector<double> x;
        double sigma = 0.3;
        double fitness = 0.0;
    };

    auto fitness_of = [&](const std::vector<double>& w) {
        return detail::linear_accuracy(m, s.train, w);
    };

    std::vector<Individual> parents(static_cast<std::size_t>(hyper.parents));
    for (auto& p : parents) {
        p.x.resize(d);
        for (auto& v : p.x) v = rng.next_gaussian();
        p.sigma = hyper.sigma_init;
        p.fitness = fitness_of(p.x);
    }

    Individual best = parents[0];
    for (const auto& p : parents)
        if (p.fitness > best.fitness) best = p;

    std::vector<Individual> children(static_cast<std::size_t>(hyper.population));
    for (int gen = 0; gen < hyper.generations; ++gen) {
        for (auto& c : children) {
            // intermediate recombination of two parents, then log-normal
            // step-size mutation before the position mutation
            const Individual& pa = parents[rng.next_below(parents.size())];
            const Individual& pb = parents[rng.next_below(parents.size())];
            c.sigma = 0.5 * (pa.sigma + pb.sigma) * std::exp(tau * rng.next_gaussian());
            c.x.resize(d);
            for (std::size_t i = 0; i < d; ++i)
                c.x[i] = 0.5 * (pa.x[i] + pb.x[i]) + c.sigma * rng.next_gaussian();
            c.fitness = fitness_of(c.x);
            if (c.fitness > best.fitness) best = c;
        }
        std::stable_sort(children.begin(), children.end(),
                         [](const Individual& a, const Individual& b) {
                             return a.fitness > b.fitness;
                         });
        std::copy(children.begin(), children.begin() + hyper.parents, parents.begin());
    }

    AttackReport rep;
    rep.algorithm = "es";
    rep.train_size = s.train.size();
    rep.test_size = s.test.size();
    rep.train_accuracy = best.fitness;
    rep.test_accuracy = detail::linear_accuracy(m, s.test, best.x);
    rep.hyper = {{"population", hyper.population}, {"parents", hyper.parents},
                 {"generations", hyper.generations}, {"sigma_init", hyper.sigma_init},
                 {"seed", hyper.seed},             {"raw_features", hyper.raw_features}};
    rep.wall_ms = watch.ms();
    return rep;
}

// ---------------------------------------------------------------------------
// Base sweep (the Fig. 8 experiment shape): same chip, varying Base, fresh
// CRPs per point.
// ---------------------------------------------------------------------------

struct SweepPoint {
    unsigned base = 0;
    AttackReport report;
};

inline std::vector<SweepPoint> base_sweep(const ApufInstance& apuf, const LfsrConfig& lfsr,
                                          const VoteMaskPolicy& vote,
                                          const std::vector<unsigned>& bases, std::size_t crps,
                                          std::uint64_t seed, const std::string& algo = "lr",
                                          unsigned threads = 1) {
    std::vector<SweepPoint> points(bases.size());
    auto run_one = [&](std::size_t i) {
        LfsrApufDevice dev{apuf, lfsr, bases[i], vote};
        RandomStream rng(detail::mix64(seed, bases[i]));
        CrpDataset ds = collect_crps(make_lfsr_apuf_oracle(dev), dev.challenge_width(), crps, rng);
        ds.meta = DatasetMeta{"lfsr_apuf", apuf.n, bases[i], seed, crps};
        AttackReport rep;
        if (algo == "lr") rep = lr_attack(ds);
        else if (algo == "svm") rep = svm_attack(ds);
        else if (algo == "ann") rep = ann_attack(ds);
        else if (algo == "es") rep = es_attack(ds);
        else throw std::invalid_argument("base_sweep: unknown algorithm " + algo);
        points[i] = SweepPoint{bases[i], std::move(rep)};
    };

    if (threads <= 1) {
        for (std::size_t i = 0; i < bases.size(); ++i) run_one(i);
    } else {
        // static slicing: thread t takes points t, t+T, ...; every point is
        // self-seeded, so thread count changes wall time only
        std::vector<std::thread> workers;
        unsigned T = static_cast<unsigned>(std::min<std::size_t>(threads, bases.size()));
        for (unsigned t = 0; t < T; ++t)
            workers.emplace_back([&, t]() {
                for (std::size_t i = t; i < bases.size(); i += T) run_one(i);
            });
        for (auto& w : workers) w.join();
    }
    return points;
}

} // namespace pufforge
