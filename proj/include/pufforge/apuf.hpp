#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pufforge/bitvec.hpp"
#include "pufforge/rng.hpp"

namespace pufforge {

/// Linear additive delay model of an n-stage arbiter PUF: the response is
/// the sign of a weight vector (length n+1, frozen at sampling) dotted with
/// the ±1 parity features of the challenge, plus per-evaluation Gaussian
/// noise on the delay difference.
struct ApufInstance {
    int n = 0;
    std::vector<double> weights; // length n + 1
    double noise_sigma = 0.0;

    bool valid() const { return n >= 2 && weights.size() == static_cast<std::size_t>(n) + 1; }
};

/// Parity feature map: phi[l] = prod_{i=l..n} (1 - 2 c_i) for l = 1..n and a
/// trailing constant 1. Every entry is ±1. Computed as a right-to-left
/// running product.
inline std::vector<double> phi_transform(const BitVec& challenge) {
    std::size_t n = challenge.size();
    std::vector<double> phi(n + 1);
    phi[n] = 1.0;
    double prod = 1.0;
    for (std::size_t l = n; l >= 1; --l) {
        prod *= challenge.bit(l) ? -1.0 : 1.0;
        phi[l - 1] = prod;
    }
    return phi;
}

/// Draw a fresh instance: weights i.i.d. Normal(0, weight_sigma^2).
inline ApufInstance sample_instance(int n, double weight_sigma, double noise_sigma,
                                    RandomStream& rng) {
    if (n < 2) throw std::invalid_argument("sample_instance: n must be >= 2");
    if (weight_sigma <= 0.0) throw std::invalid_argument("sample_instance: weight_sigma must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("sample_instance: noise_sigma must be non-negative");
    ApufInstance inst;
    inst.n = n;
    inst.noise_sigma = noise_sigma;
    inst.weights.resize(static_cast<std::size_t>(n) + 1);
    for (auto& w : inst.weights) w = weight_sigma * rng.next_gaussian();
    return inst;
}

/// Noiseless delay difference for a challenge.
inline double apuf_delta(const ApufInstance& inst, const BitVec& challenge) {
    if (static_cast<int>(challenge.size()) != inst.n)
        throw std::invalid_argument("apuf_delta: challenge width mismatch");
    std::vector<double> phi = phi_transform(challenge);
    double d = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) d += inst.weights[i] * phi[i];
    return d;
}

/// Sign convention: negative delay difference gives 0, anything else
/// (including an exact zero) gives 1.
inline int sign_bit(double delta) { return delta < 0.0 ? 0 : 1; }

/// One evaluation: sign of delta plus one Gaussian noise draw.
inline int evaluate_raw(const ApufInstance& inst, const BitVec& challenge, RandomStream& rng) {
    double d = apuf_delta(inst, challenge);
    if (inst.noise_sigma > 0.0) d += inst.noise_sigma * rng.next_gaussian();
    else rng.next_gaussian(); // keep stream consumption independent of sigma
    return sign_bit(d);
}

/// Majority voting with a decisiveness mask. m odd so the majority is always
/// defined; a challenge is flagged stable when the winning side reaches
/// mask_threshold of the m votes.
struct VoteMaskPolicy {
    int votes = 11;
    int mask_threshold = 11;

    bool valid() const {
        return votes >= 1 && votes % 2 == 1 &&
               mask_threshold >= (votes + 1) / 2 && mask_threshold <= votes;
    }
};

struct VotedBit {
    int bit = 0;
    bool stable = false;
};

namespace detail {

/// Voting core over a precomputed delta; lets population sweeps reuse the
/// dot product across repeats. Draw-for-draw identical to calling
/// evaluate_raw m times.
inline VotedBit vote_on_delta(double delta, double noise_sigma, const VoteMaskPolicy& policy,
                              RandomStream& rng) {
    int ones = 0;
    for (int v = 0; v < policy.votes; ++v) {
        double d = delta;
        if (noise_sigma > 0.0) d += noise_sigma * rng.next_gaussian();
        else rng.next_gaussian();
        ones += sign_bit(d);
    }
    int zeros = policy.votes - ones;
    VotedBit out;
    out.bit = ones > zeros ? 1 : 0;
    out.stable = std::max(ones, zeros) >= policy.mask_threshold;
    return out;
}

} // namespace detail

inline VotedBit evaluate_voted(const ApufInstance& inst, const BitVec& challenge,
                               const VoteMaskPolicy& policy, RandomStream& rng) {
    if (!policy.valid()) throw std::invalid_argument("evaluate_voted: bad policy");
    return detail::vote_on_delta(apuf_delta(inst, challenge), inst.noise_sigma, policy, rng);
}

/// Noise scale that makes the expected single-shot reliability against the
/// noiseless reference equal `target` (e.g. 0.95). Uses the Gaussian
/// sign-flip identity P(flip) = arccos(rho)/pi with rho the correlation
/// between clean and noisy delay, and Var(delta) = (n+1) weight_sigma^2
/// over random challenges.
inline double calibrated_noise_sigma(int n, double weight_sigma, double target) {
    if (target <= 0.5 || target >= 1.0)
        throw std::invalid_argument("calibrated_noise_sigma: target in (0.5, 1)");
    double theta = 3.14159265358979323846 * (1.0 - target);
    return std::tan(theta) * weight_sigma * std::sqrt(static_cast<double>(n) + 1.0);
}

} // namespace pufforge
