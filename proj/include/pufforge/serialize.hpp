#pragma once

#include <string>

#include <json.hpp>

#include "pufforge/apuf.hpp"
#include "pufforge/cover.hpp"
#include "pufforge/lfsr.hpp"
#include "pufforge/obfuscation.hpp"

namespace pufforge {

inline nlohmann::json apuf_to_json(const ApufInstance& inst, const std::string& provenance) {
    return nlohmann::json{{"n", inst.n},
                          {"weights", inst.weights},
                          {"noise_sigma", inst.noise_sigma},
                          {"seed_provenance", provenance}};
}

inline ApufInstance apuf_from_json(const nlohmann::json& j) {
    ApufInstance inst;
    inst.n = j.at("n").get<int>();
    inst.weights = j.at("weights").get<std::vector<double>>();
    inst.noise_sigma = j.at("noise_sigma").get<double>();
    if (!inst.valid()) throw std::invalid_argument("apuf_from_json: invalid instance");
    return inst;
}

inline nlohmann::json cover_to_json(const CoverConfig& cfg) {
    return nlohmann::json{{"l", cfg.l}, {"t", cfg.t}, {"positions", cfg.fill_positions}};
}

inline CoverConfig cover_from_json(const nlohmann::json& j) {
    CoverConfig cfg;
    cfg.l = j.at("l").get<std::size_t>();
    cfg.t = j.at("t").get<std::size_t>();
    cfg.fill_positions = j.at("positions").get<std::vector<std::size_t>>();
    if (!cfg.valid()) throw std::invalid_argument("cover_from_json: invalid config");
    return cfg;
}

inline nlohmann::json device_to_json(const LfsrApufDevice& dev, const std::string& provenance) {
    return nlohmann::json{{"apuf", apuf_to_json(dev.apuf, provenance)},
                          {"lfsr_poly", poly_to_string(dev.lfsr)},
                          {"base", dev.base},
                          {"vote", {{"votes", dev.vote.votes},
                                    {"mask_threshold", dev.vote.mask_threshold}}}};
}

inline LfsrApufDevice device_from_json(const nlohmann::json& j) {
    LfsrApufDevice dev;
    dev.apuf = apuf_from_json(j.at("apuf"));
    dev.lfsr = parse_poly(j.at("lfsr_poly").get<std::string>());
    dev.base = j.at("base").get<unsigned>();
    dev.vote.votes = j.at("vote").at("votes").get<int>();
    dev.vote.mask_threshold = j.at("vote").at("mask_threshold").get<int>();
    if (!dev.valid() || !dev.vote.valid())
        throw std::invalid_argument("device_from_json: invalid device");
    return dev;
}

} // namespace pufforge
