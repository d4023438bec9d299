#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pufforge/bitvec.hpp"
#include "pufforge/obfuscation.hpp"
#include "pufforge/rng.hpp"

namespace pufforge {

struct MetricReport {
    std::string metric;
    double value = 0.0;          // percentage
    double alt_value = 0.0;      // secondary figure where one exists
    std::size_t challenges = 0;
    std::size_t repeats = 0;
    std::size_t instances = 0;
    std::string note;
};

/// Fraction of ones, percent-scaled.
inline double randomness(const std::vector<int>& responses) {
    if (responses.empty()) throw std::invalid_argument("randomness: empty response list");
    double s = 0;
    for (int r : responses) s += r;
    return s / static_cast<double>(responses.size()) * 100.0;
}

/// Mean match rate against a reference response vector, percent-scaled.
/// Normalizes each intra-distance once by the response length.
inline double reliability(const BitVec& reference, const std::vector<BitVec>& repeats) {
    if (repeats.empty()) throw std::invalid_argument("reliability: no repeats");
    double acc = 0;
    for (const BitVec& r : repeats) {
        if (r.size() != reference.size())
            throw std::invalid_argument("reliability: repeat length mismatch");
        acc += static_cast<double>(hd_count(reference, r)) / static_cast<double>(reference.size());
    }
    return (1.0 - acc / static_cast<double>(repeats.size())) * 100.0;
}

/// Inter-chip metric, both conventions. `value` follows the printed formula
/// (1 - mean pairwise HD/n, percent); `alt_value` is the standard mean
/// inter-chip HD percentage. Both land near 50 for ideal populations.
struct UniquenessResult {
    double printed = 0.0;
    double standard = 0.0;
};

inline UniquenessResult uniqueness(const std::vector<BitVec>& instance_responses) {
    std::size_t k = instance_responses.size();
    if (k < 2) throw std::invalid_argument("uniqueness: needs at least two instances");
    std::size_t n = instance_responses[0].size();
    double acc = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (instance_responses[i].size() != n)
            throw std::invalid_argument("uniqueness: length mismatch");
        for (std::size_t j = i + 1; j < k; ++j)
            acc += static_cast<double>(hd_count(instance_responses[i], instance_responses[j])) /
                   static_cast<double>(n);
    }
    double mean = acc * 2.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
    return UniquenessResult{(1.0 - mean) * 100.0, mean * 100.0};
}

// ---------------------------------------------------------------------------
// Population sweeps over simulated LFSR-APUF chips.
// ---------------------------------------------------------------------------

struct PopulationConfig {
    int n = 64;
    unsigned base = 10;
    int instances = 5;
    std::size_t challenges = 80000;
    int repeats = 20;
    VoteMaskPolicy vote{11, 11};
    double weight_sigma = 1.0;
    double noise_sigma = -1.0; // negative means: calibrate for 95% raw reliability
    // temperature emulation: repeat batches cycle these noise multipliers
    std::vector<double> noise_multipliers{1.0, 1.2, 1.5};
};

inline double population_noise_sigma(const PopulationConfig& cfg) {
    return cfg.noise_sigma >= 0.0 ? cfg.noise_sigma
                                  : calibrated_noise_sigma(cfg.n, cfg.weight_sigma, 0.95);
}

inline std::vector<LfsrApufDevice> sample_population(const PopulationConfig& cfg,
                                                     RandomStream& rng) {
    // same circuit design (one polynomial, one Base), distinct silicon
    std::vector<LfsrApufDevice> chips;
    double sigma = population_noise_sigma(cfg);
    for (int i = 0; i < cfg.instances; ++i) {
        LfsrApufDevice dev;
        RandomStream chip_rng = rng.split(static_cast<std::uint64_t>(i) + 1);
        dev.apuf = sample_instance(cfg.n, cfg.weight_sigma, sigma, chip_rng);
        dev.lfsr = default_lfsr_config(cfg.n);
        dev.base = cfg.base;
        dev.vote = cfg.vote;
        chips.push_back(dev);
    }
    return chips;
}

/// Shared challenge set, stuck seeds filtered out.
inline std::vector<BitVec> sample_challenges(const PopulationConfig& cfg, RandomStream& rng) {
    std::vector<BitVec> out;
    out.reserve(cfg.challenges);
    while (out.size() < cfg.challenges) {
        BitVec c = rng.next_bits(static_cast<std::size_t>(cfg.n) + 4);
        BitVec c1 = c.slice(5, c.size());
        if (c1.all_zeros() || c1.all_ones()) continue;
        out.push_back(c);
    }
    return out;
}

/// Voted single-bit responses of one chip over a challenge set, reusing the
/// obfuscated delta per challenge across votes.
inline BitVec response_vector(const LfsrApufDevice& dev, const std::vector<BitVec>& challenges,
                              double noise_multiplier, RandomStream& rng) {
    BitVec out(challenges.size());
    for (std::size_t i = 0; i < challenges.size(); ++i) {
        SegmentedChallenge sc = segment_challenge(challenges[i]);
        double delta = apuf_delta(dev.apuf, obfuscate(dev, sc));
        VotedBit vb = detail::vote_on_delta(delta, dev.apuf.noise_sigma * noise_multiplier,
                                            dev.vote, rng);
        out.set_bit(i + 1, vb.bit);
    }
    return out;
}

inline MetricReport randomness_run(const PopulationConfig& cfg, RandomStream& rng) {
    auto chips = sample_population(cfg, rng);
    RandomStream chall_rng = rng.split(0xC0);
    auto challenges = sample_challenges(cfg, chall_rng);
    double total = 0;
    for (std::size_t i = 0; i < chips.size(); ++i) {
        RandomStream eval = rng.split(0xA0 + i);
        BitVec r = response_vector(chips[i], challenges, 1.0, eval);
        std::vector<int> bits(r.size());
        for (std::size_t j = 1; j <= r.size(); ++j) bits[j - 1] = r.bit(j);
        total += randomness(bits);
    }
    MetricReport rep;
    rep.metric = "randomness";
    rep.value = total / static_cast<double>(chips.size());
    rep.challenges = cfg.challenges;
    rep.instances = static_cast<std::size_t>(cfg.instances);
    return rep;
}

inline MetricReport uniqueness_run(const PopulationConfig& cfg, RandomStream& rng) {
    auto chips = sample_population(cfg, rng);
    RandomStream chall_rng = rng.split(0xC0);
    auto challenges = sample_challenges(cfg, chall_rng);
    std::vector<BitVec> responses;
    for (std::size_t i = 0; i < chips.size(); ++i) {
        RandomStream eval = rng.split(0xA0 + i);
        responses.push_back(response_vector(chips[i], challenges, 1.0, eval));
    }
    UniquenessResult u = uniqueness(responses);
    MetricReport rep;
    rep.metric = "uniqueness";
    rep.value = u.printed;
    rep.alt_value = u.standard;
    rep.challenges = cfg.challenges;
    rep.instances = static_cast<std::size_t>(cfg.instances);
    rep.note = "value follows the printed 1-minus convention; alt_value is mean inter-chip HD";
    return rep;
}

/// Reliability with the vote+mask pipeline. The reference pass flags
/// decisive challenges; repeats are evaluated over the kept subset with the
/// configured noise multipliers cycled across repeat batches. alt_value
/// reports the raw single-shot match rate (no voting, multiplier 1.0)
/// against the noiseless reference, which the default noise scale pins near
/// 95%.
inline MetricReport reliability_run(const PopulationConfig& cfg, RandomStream& rng) {
    auto chips = sample_population(cfg, rng);
    RandomStream chall_rng = rng.split(0xC0);
    auto challenges = sample_challenges(cfg, chall_rng);
    double total = 0, raw_total = 0, kept_total = 0;
    for (std::size_t ci = 0; ci < chips.size(); ++ci) {
        const LfsrApufDevice& dev = chips[ci];
        RandomStream eval = rng.split(0xB0 + ci);

        std::vector<double> deltas(challenges.size());
        for (std::size_t i = 0; i < challenges.size(); ++i)
            deltas[i] = apuf_delta(dev.apuf, obfuscate(dev, segment_challenge(challenges[i])));

        // reference pass at nominal noise: voted bit + mask flag
        std::vector<int> ref_bits(challenges.size());
        std::vector<bool> keep(challenges.size());
        std::size_t kept = 0;
        for (std::size_t i = 0; i < challenges.size(); ++i) {
            VotedBit vb = detail::vote_on_delta(deltas[i], dev.apuf.noise_sigma, dev.vote, eval);
            ref_bits[i] = vb.bit;
            keep[i] = vb.stable;
            kept += vb.stable;
        }
        kept_total += static_cast<double>(kept) / static_cast<double>(challenges.size());

        // raw single-shot agreement with the noiseless response
        std::size_t raw_agree = 0;
        for (std::size_t i = 0; i < challenges.size(); ++i) {
            double d = deltas[i] + dev.apuf.noise_sigma * eval.next_gaussian();
            raw_agree += sign_bit(d) == sign_bit(deltas[i]);
        }
        raw_total += static_cast<double>(raw_agree) / static_cast<double>(challenges.size());

        // repeat passes over the kept subset
        BitVec ref(kept);
        std::size_t slot = 0;
        for (std::size_t i = 0; i < challenges.size(); ++i)
            if (keep[i]) ref.set_bit(++slot, ref_bits[i]);
        std::vector<BitVec> reps;
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            double mult = cfg.noise_multipliers.empty()
                              ? 1.0
                              : cfg.noise_multipliers[static_cast<std::size_t>(rep) %
                                                      cfg.noise_multipliers.size()];
            BitVec rv(kept);
            slot = 0;
            for (std::size_t i = 0; i < challenges.size(); ++i) {
                if (!keep[i]) continue;
                VotedBit vb = detail::vote_on_delta(deltas[i], dev.apuf.noise_sigma * mult,
                                                    dev.vote, eval);
                rv.set_bit(++slot, vb.bit);
            }
            reps.push_back(rv);
        }
        total += reliability(ref, reps);
    }
    MetricReport rep;
    rep.metric = "reliability";
    rep.value = total / static_cast<double>(chips.size());
    rep.alt_value = raw_total / static_cast<double>(chips.size()) * 100.0;
    rep.challenges = cfg.challenges;
    rep.repeats = static_cast<std::size_t>(cfg.repeats);
    rep.instances = static_cast<std::size_t>(cfg.instances);
    rep.note = "alt_value is the raw single-shot match rate; kept fraction " +
               std::to_string(kept_total / static_cast<double>(chips.size()));
    return rep;
}

} // namespace pufforge
