#pragma once

#include <json.hpp>

#include "gwlab/offspring.hpp"
#include "gwlab/simulator.hpp"

namespace gwlab {

inline nlohmann::json estimator_to_json(const EstimatorResult& r) {
    return {{"estimate", r.estimate},       {"stderr", r.stderr_est},
            {"replicates", r.replicates},   {"accepted", r.accepted},
            {"seed", r.seed},               {"indeterminate_count", r.indeterminate}};
}

// {"family":"stable_frac","alpha":0.5,"c":0.6667}
// Rational parameters round-trip bit-exactly as {"num":..,"den":..} pairs.
inline nlohmann::json law_to_json(const OffspringLaw& law) {
    nlohmann::json j;
    switch (law.family()) {
        case Family::StableFrac:
            j["family"] = "stable_frac";
            if (law.alpha_rational())
                j["alpha"] = {{"num", law.alpha_rational()->num}, {"den", law.alpha_rational()->den}};
            else
                j["alpha"] = law.alpha();
            if (law.c_rational())
                j["c"] = {{"num", law.c_rational()->num}, {"den", law.c_rational()->den}};
            else
                j["c"] = law.c();
            break;
        case Family::Geometric:
            j["family"] = "geometric";
            break;
        case Family::CustomPmf:
            j["family"] = "custom";
            j["probabilities"] = law.custom_probabilities();
            j["tail_exponent"] = law.alpha();
            break;
    }
    return j;
}

inline OffspringLaw law_from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    auto parse_param = [&](const char* key, Rational& rat, bool& is_rat) -> double {
        const auto& v = j.at(key);
        if (v.is_object()) {
            rat = Rational{v.at("num").get<std::int64_t>(), v.at("den").get<std::int64_t>()};
            is_rat = true;
            return rat.value();
        }
        is_rat = false;
        return v.get<double>();
    };
    if (family == "stable_frac") {
        Rational ar, cr;
        bool a_is_rat = false, c_is_rat = false;
        const double alpha = parse_param("alpha", ar, a_is_rat);
        const double c = parse_param("c", cr, c_is_rat);
        return OffspringLaw::stable_frac(alpha, c,
                                         a_is_rat ? std::optional<Rational>(ar) : std::nullopt,
                                         c_is_rat ? std::optional<Rational>(cr) : std::nullopt);
    }
    if (family == "geometric") return OffspringLaw::geometric();
    if (family == "custom")
        return OffspringLaw::custom(j.at("probabilities").get<std::vector<double>>(),
                                    j.at("tail_exponent").get<double>());
    throw ConfigInvalid("unknown offspring family: " + family);
}

} // namespace gwlab
