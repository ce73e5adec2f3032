#include "gwlab/experiments.hpp"

#include <cmath>
#include <fstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gwlab/bell.hpp"
#include "gwlab/limit_laws.hpp"
#include "gwlab/power_series.hpp"
#include "gwlab/serialize.hpp"
#include "gwlab/simulator.hpp"

namespace gwlab {

namespace {

constexpr const char* kCodeVersion = "gwlab 0.1.0";

double dgamma(double x) { return std::tgamma(x); }

// L1 for the StableFrac family: the Gamma-ratio interpolation of the exact
// tail P(xi >= x) = L1(1/x) / x^{1+alpha}, i.e.
//   L1(z) = c a Gamma(1/z - 1 - a) / (Gamma(1-a) Gamma(1/z)) * z^{-(1+a)}
double stable_L1(const OffspringLaw& law, double z) {
    const double a = law.alpha();
    const double x = 1.0 / z;
    const double lg = std::lgamma(x - 1.0 - a) - std::lgamma(1.0 - a) - std::lgamma(x) -
                      (1.0 + a) * std::log(z);
    return law.c() * a * std::exp(lg);
}

// asymptotically constant part of the slowly varying L for the family:
// StableFrac has L == c exactly; finite-variance laws have L(0+) = sigma^2/2
double law_L_constant(const OffspringLaw& law) {
    if (law.family() == Family::StableFrac) return law.c();
    return law.sigma2() / 2.0;
}

std::int64_t ceil_pow(double base, double expo) {
    return static_cast<std::int64_t>(std::ceil(std::pow(base, expo) - 1e-9));
}

ReportRow make_row(std::string name, double predicted, double observed, double err,
                   std::string source) {
    ReportRow r;
    r.name = std::move(name);
    r.predicted = predicted;
    r.observed = observed;
    r.ratio = predicted != 0.0 ? observed / predicted : 0.0;
    r.err = err;
    r.source = std::move(source);
    return r;
}

} // namespace

std::int64_t PhiRule::operator()(std::int64_t n) const {
    if (use_table) {
        auto it = table.find(n);
        if (it == table.end()) throw ConfigInvalid("phi table has no entry for n=" + std::to_string(n));
        return it->second;
    }
    return ceil_pow(static_cast<double>(n), exponent);
}

std::string config_hash(const nlohmann::json& canonical) {
    const std::string dump = canonical.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        cfg.id = j.at("experiment").get<std::string>();
        cfg.law_json = j.at("law");
        (void)law_from_json(cfg.law_json); // validate eagerly
        if (j.contains("schedule")) cfg.schedule = j["schedule"].get<std::vector<std::int64_t>>();
        if (j.contains("phi")) {
            const auto& p = j["phi"];
            if (p.contains("exponent")) {
                cfg.phi.exponent = p["exponent"].get<double>();
                if (cfg.phi.exponent <= 0.0 || cfg.phi.exponent >= 1.0)
                    throw ConfigInvalid("phi exponent must lie in (0,1)");
            } else if (p.contains("table")) {
                cfg.phi.use_table = true;
                for (auto it = p["table"].begin(); it != p["table"].end(); ++it)
                    cfg.phi.table[std::stoll(it.key())] = it.value().get<std::int64_t>();
            } else {
                throw ConfigInvalid("phi rule needs exponent or table");
            }
        }
        if (j.contains("x_grid")) cfg.x_grid = j["x_grid"].get<std::vector<double>>();
        if (j.contains("j_range")) {
            cfg.j_min = j["j_range"].at(0).get<int>();
            cfg.j_max = j["j_range"].at(1).get<int>();
        }
        if (j.contains("tolerances"))
            for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
                const double v = it.value().get<double>();
                if (v <= 0.0) throw ConfigInvalid("tolerance " + it.key() + " must be positive");
                cfg.tolerances[it.key()] = v;
            }
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("replicates")) cfg.replicates = j["replicates"].get<std::uint64_t>();
        if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("malformed config: ") + e.what());
    }
    for (std::size_t i = 0; i + 1 < cfg.schedule.size(); ++i)
        if (cfg.schedule[i] >= cfg.schedule[i + 1]) throw ConfigInvalid("schedule must be strictly increasing");
    if (!cfg.schedule.empty() && (cfg.phi.use_table || cfg.phi.exponent > 0.0))
        for (std::int64_t n : cfg.schedule) {
            const std::int64_t p = cfg.phi(n);
            if (p < 1 || p >= n) throw ConfigInvalid("phi(n) must lie in [1, n) for n=" + std::to_string(n));
        }
    return cfg;
}

StableRunData compute_run_data(const OffspringLaw& law, const std::vector<std::int64_t>& schedule,
                               const PhiRule& phi) {
    StableRunData d;
    d.schedule = schedule;
    std::int64_t maxT = 1;
    for (std::int64_t n : schedule) {
        const std::int64_t p = phi(n);
        d.phi.push_back(p);
        d.T.push_back(small_deviation_threshold(law, p));
        maxT = std::max(maxT, d.T.back());
    }
    d.tables = generation_tables(law, schedule, static_cast<int>(maxT));
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        CompensatedSum<double> s;
        for (std::int64_t j = 1; j <= d.T[i]; ++j) s.add(d.tables[i].p[static_cast<std::size_t>(j)]);
        d.p_H.push_back(s.value());
    }
    return d;
}

Report exp_thm1(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "thm1";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const StableRunData data = compute_run_data(law, cfg.schedule, cfg.phi);
    const double tol_final = cfg.tol("final", 0.2);
    std::vector<double> dev;
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const auto& t = data.tables[i];
        const Thm1Prediction pred = thm1_prediction(law.alpha(), t.survival, t.n, data.phi[i]);
        ReportRow row = make_row("n=" + std::to_string(t.n) + " phi=" + std::to_string(data.phi[i]) +
                                     " T=" + std::to_string(data.T[i]),
                                 pred.value, data.p_H[i], 0.0, "series_engine");
        dev.push_back(std::fabs(row.ratio - 1.0));
        const bool is_last = i + 1 == cfg.schedule.size();
        row.pass = !is_last || dev.back() <= tol_final;
        row.checked = is_last;
        rep.add(row);
    }
    if (dev.size() >= 3) {
        // Convergence trend with a converged band at tol/10: below that level
        // |ratio-1| sits under the floor(1/u_phi) quantization noise and the
        // sign of the residual flips, so monotonicity is only enforced above it.
        const double floor_band = tol_final / 10.0;
        const std::size_t k = dev.size();
        ReportRow row = make_row("trend |ratio-1| nonincreasing over last 3 (floor " +
                                     std::to_string(floor_band) + ")",
                                 dev[k - 3], dev[k - 1], 0.0, "series_engine");
        row.pass = dev[k - 1] <= std::max(dev[k - 2], floor_band) &&
                   dev[k - 2] <= std::max(dev[k - 3], floor_band);
        rep.add(row);
    }
    return rep;
}

Report exp_thm2(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "thm2";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const StableRunData data = compute_run_data(law, cfg.schedule, cfg.phi);
    const YaglomLaw yaglom(law.alpha());
    const double tol_final = cfg.tol("final", 0.05);
    const double trend_slack = cfg.tol("trend_slack", 1e-3);
    for (double x : cfg.x_grid) {
        std::vector<std::vector<double>> devs(static_cast<std::size_t>(cfg.j_max) + 1);
        for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
            const std::int64_t n = cfg.schedule[i];
            const std::int64_t span = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(data.phi[i]) - 1e-9));
            if (span >= n) throw ConfigInvalid("thm2: x*phi >= n");
            const ReducedJoint rj =
                reduced_joint_given(law, n, n - span, cfg.j_max, data.T[i], data.p_H[i]);
            for (int j = cfg.j_min; j <= cfg.j_max; ++j) {
                const double limit = thm2_limit_pmf(yaglom, j, x);
                const double exact = rj.cond_j_given_H[static_cast<std::size_t>(j)];
                devs[static_cast<std::size_t>(j)].push_back(std::fabs(exact - limit));
                const bool is_last = i + 1 == cfg.schedule.size();
                char name[96];
                std::snprintf(name, sizeof name, "x=%g j=%d n=%lld", x, j, static_cast<long long>(n));
                ReportRow row = make_row(name, limit, exact, 0.0, "series_engine/limit_laws");
                row.checked = is_last;
                row.pass = !is_last || devs[static_cast<std::size_t>(j)].back() <= tol_final;
                rep.add(row);
            }
        }
        for (int j = cfg.j_min; j <= cfg.j_max; ++j) {
            const auto& dv = devs[static_cast<std::size_t>(j)];
            if (dv.size() < 3) continue;
            char name[96];
            std::snprintf(name, sizeof name, "trend x=%g j=%d |dev| nonincreasing over last 3", x, j);
            ReportRow row = make_row(name, dv[dv.size() - 3], dv.back(), 0.0, "series_engine");
            // converged band at tol/10: once the signed error crosses zero the
            // magnitude wobbles at the span-quantization scale
            const double floor_band = std::max(trend_slack, tol_final / 10.0);
            row.pass = dv.back() <= std::max(dv[dv.size() - 2], floor_band) &&
                       dv[dv.size() - 2] <= std::max(dv[dv.size() - 3], floor_band);
            rep.add(row);
        }
    }
    return rep;
}

Report exp_corollary(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "corollary";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const StableRunData data = compute_run_data(law, cfg.schedule, cfg.phi);
    const YaglomLaw yaglom(law.alpha());
    const double tol_final = cfg.tol("final", 0.05);
    for (double x : cfg.x_grid) {
        for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
            const std::int64_t n = cfg.schedule[i];
            const std::int64_t span = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(data.phi[i]) - 1e-9));
            if (span >= n) throw ConfigInvalid("corollary: x*phi >= n");
            // P(d(n) <= x phi | H) = P(Z(n - x phi, n) = 1 | H)
            const ReducedJoint rj = reduced_joint_given(law, n, n - span, 1, data.T[i], data.p_H[i]);
            const double limit = mrca_limit_cdf(yaglom, x);
            const double exact = rj.cond_j_given_H[1];
            const bool is_last = i + 1 == cfg.schedule.size();
            char name[96];
            std::snprintf(name, sizeof name, "x=%g n=%lld", x, static_cast<long long>(n));
            ReportRow row = make_row(name, limit, exact, 0.0, "series_engine/limit_laws");
            row.checked = is_last;
            row.pass = !is_last || std::fabs(exact - limit) <= tol_final;
            rep.add(row);
        }
    }
    return rep;
}

Report exp_stationarity(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "stationarity";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const int j_top = cfg.j_max; // residuals checked for j <= j_top
    const int L = static_cast<int>(cfg.tol("conv_limit", 400));
    const double tol = cfg.tol("resid", 0.01);

    const MuEstimates me = mu_sequence(law, L, cfg.schedule, cfg.tol("mu_rel_change", 0.05));
    const auto& mu = me.mu;

    // P(l,j) for l = 1..L, j = 0..j_top by iterated pmf convolution
    std::vector<std::vector<double>> P(static_cast<std::size_t>(L) + 1,
                                       std::vector<double>(static_cast<std::size_t>(j_top) + 1, 0.0));
    {
        std::vector<double> base(static_cast<std::size_t>(j_top) + 1);
        for (int j = 0; j <= j_top; ++j) base[static_cast<std::size_t>(j)] = law.pmf(j);
        P[0][0] = 1.0;
        for (int l = 1; l <= L; ++l)
            for (int j = 0; j <= j_top; ++j) {
                CompensatedSum<double> s;
                for (int i = 0; i <= j; ++i) s.add(P[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i)] * base[static_cast<std::size_t>(j - i)]);
                P[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] = s.value();
            }
    }

    for (int j = 1; j <= j_top; ++j) {
        CompensatedSum<double> s;
        for (int l = 1; l <= L; ++l) s.add(mu[static_cast<std::size_t>(l)] * P[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)]);
        const double lhs = s.value();
        const double rhs = mu[static_cast<std::size_t>(j)];
        ReportRow row = make_row("stationarity j=" + std::to_string(j), rhs, lhs, 0.0, "series_engine");
        if (rhs == 0.0) {
            row.pass = lhs == 0.0; // below j0 both sides vanish identically
            row.ratio = lhs == 0.0 ? 1.0 : 0.0;
        } else {
            row.pass = std::fabs(lhs - rhs) / rhs <= tol;
        }
        rep.add(row);
    }
    {
        const double p0 = law.pmf(0);
        CompensatedSum<double> s;
        for (int l = 1; l <= L; ++l) s.add(mu[static_cast<std::size_t>(l)] * std::pow(p0, l));
        double mu_last = 0.0;
        for (int l = L; l > 0 && l > L - 8; --l) mu_last = std::max(mu_last, mu[static_cast<std::size_t>(l)]);
        const double tail_bound = mu_last * std::pow(p0, L + 1) / (1.0 - p0);
        ReportRow row = make_row("normalization sum_l mu_l p0^l", 1.0, s.value(), tail_bound, "series_engine");
        row.pass = std::fabs(s.value() - 1.0) <= tol;
        rep.add(row);
    }
    {
        // the residual rows only involve j <= j_top, whose estimates must have
        // settled; the far-tail entries (l up to L) feed the convolution with
        // geometrically small weights and stay informational
        double low = 0.0, all = 0.0;
        for (int j = 1; j <= L; ++j) {
            all = std::max(all, me.rel_change[static_cast<std::size_t>(j)]);
            if (j <= j_top) low = std::max(low, me.rel_change[static_cast<std::size_t>(j)]);
        }
        ReportRow row = make_row("mu convergence j<=" + std::to_string(j_top) +
                                     " (rel change over last doubling)",
                                 me.threshold, low, 0.0, "series_engine");
        row.pass = low <= me.threshold;
        rep.add(row);
        ReportRow info = make_row("mu convergence all l<=" + std::to_string(L), me.threshold, all, 0.0,
                                  "series_engine");
        info.checked = false;
        rep.add(info);
    }
    return rep;
}

Report exp_tauberian(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "tauberian";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const int T = cfg.j_max;
    const double tol = cfg.tol("final", 0.05);
    const MuEstimates me = mu_sequence(law, T, cfg.schedule, cfg.tol("mu_rel_change", 0.05));
    const double alpha = law.alpha();
    const double cL = law_L_constant(law);
    for (std::int64_t Tp = T / 8; Tp <= T; Tp *= 2) {
        CompensatedSum<double> s;
        for (std::int64_t j = 1; j <= Tp; ++j) s.add(me.mu[static_cast<std::size_t>(j)]);
        const double predicted = std::pow(static_cast<double>(Tp), alpha) / (alpha * dgamma(1.0 + alpha) * cL);
        ReportRow row = make_row("partial sum T=" + std::to_string(Tp), predicted, s.value(), 0.0,
                                 "series_engine");
        row.checked = Tp == T;
        row.pass = Tp != T || std::fabs(row.ratio - 1.0) <= tol;
        rep.add(row);
    }
    return rep;
}

Report exp_bell_bound(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "bell_bound";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const int T = cfg.j_max;
    const double tol = cfg.tol("final", 0.10);
    const MuEstimates me = mu_sequence(law, T, cfg.schedule, cfg.tol("mu_rel_change", 0.05));
    const double alpha = law.alpha();
    const double cL = law_L_constant(law);
    for (int k = 2; k <= 3; ++k) {
        const double observed = bell_weighted_sum(me.mu, k, T);
        const double predicted =
            std::exp(-std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(alpha * k + 1.0) +
                     static_cast<double>(k) * (alpha * std::log(static_cast<double>(T)) - std::log(alpha * cL)));
        ReportRow row = make_row("bell sum k=" + std::to_string(k) + " T=" + std::to_string(T), predicted,
                                 observed, 0.0, "bell_combinatorics");
        row.pass = std::fabs(row.ratio - 1.0) <= tol;
        rep.add(row);
    }
    {
        // bound diagnostic: sup over k of observed / (e^{eps k} prediction);
        // the constant C in the bound is non-constructive, so this is report-only
        const double eps = 0.1;
        double sup = 0.0;
        int sup_k = 2;
        for (int k = 2; k <= std::min(40, T); ++k) {
            const double observed = bell_weighted_sum(me.mu, k, T);
            const double predicted =
                std::exp(-std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(alpha * k + 1.0) +
                         static_cast<double>(k) * (alpha * std::log(static_cast<double>(T)) - std::log(alpha * cL)) +
                         eps * k);
            if (predicted > 0.0 && observed / predicted > sup) {
                sup = observed / predicted;
                sup_k = k;
            }
        }
        ReportRow row = make_row("bell-sum bound sup ratio (eps=0.1, k<=" + std::to_string(std::min(40, T)) +
                                     ", argmax k=" + std::to_string(sup_k) + ")",
                                 1.0, sup, 0.0, "bell_combinatorics");
        row.checked = false;
        rep.add(row);
    }
    return rep;
}

Report exp_integral_lemmas(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "integral_lemmas";
    const double tol = cfg.tol("final", 0.01);
    const double quad_tol = 1e-10;
    struct SlowlyVarying {
        const char* name;
        int deg; // l(x) = log(e+x)^deg
    };
    const SlowlyVarying families[3] = {{"1", 0}, {"log(e+x)", 1}, {"log^2(e+x)", 2}};
    // l(xy)/l(x) with x given by its logarithm so that the checked extreme can
    // sit far beyond the double range (the log families converge only like
    // psi(theta) deg / ln x, so 1% needs ln x in the hundreds)
    auto l_ratio = [](int deg, double log_x, double y) {
        if (deg == 0) return 1.0;
        double num;
        if (log_x < 600.0) {
            num = std::log(std::exp(1.0) + std::exp(log_x) * y);
        } else {
            const double t = log_x + std::log(y);
            num = t > 1.0 ? t : 1.0; // the clamped region carries no mass
        }
        const double den = log_x < 600.0 ? std::log(std::exp(1.0) + std::exp(log_x)) : log_x;
        const double r = num / den;
        return deg == 1 ? r : r * r;
    };
    boost::math::quadrature::exp_sinh<double> integrator;

    // slowly-varying Gamma integral: int_0^inf y^{theta-1} (l(xy)/l(x)) e^{-y} dy -> Gamma(theta)
    struct GridPoint {
        const char* label;
        double log_x;
        bool extreme;
    };
    const GridPoint xs[3] = {{"1e2", std::log(1e2), false}, {"1e6", std::log(1e6), false},
                             {"e^2000", 2000.0, true}};
    for (const auto& fam : families) {
        for (double theta : {0.5, 2.0}) {
            for (const auto& gp : xs) {
                double error = 0.0;
                auto integrand = [&](double y) {
                    return std::exp((theta - 1.0) * std::log(y) - y) * l_ratio(fam.deg, gp.log_x, y);
                };
                const double I = integrator.integrate(integrand, quad_tol, &error);
                if (error > 1e-6) throw QuadratureNonConverged("gamma-integral quadrature error " + std::to_string(error));
                char name[96];
                std::snprintf(name, sizeof name, "gamma integral l=%s theta=%g x=%s", fam.name, theta, gp.label);
                ReportRow row = make_row(name, dgamma(theta), I, 0.0, "quadrature");
                row.checked = gp.extreme;
                const double bound = fam.deg == 0 ? 1e-9 : tol;
                row.pass = !gp.extreme || std::fabs(row.ratio - 1.0) <= bound;
                rep.add(row);
            }
        }
    }

    // uniform Laplace-peak integral: (1-s)^theta int_theta^inf y^{theta-1} l(y) e^{-y(1-s)} dy
    //          / (Gamma(theta) l(theta/(1-s))) -> 1, theta -> inf
    // The integrand is a bump centered at y* = (theta-1)/(1-s), far from the
    // lower endpoint, so integrate a peak-aware finite window with tanh_sinh
    // and bound the discarded tail analytically.
    boost::math::quadrature::tanh_sinh<double> finite_integrator;
    auto l_eval = [](int deg, double x) {
        if (deg == 0) return 1.0;
        const double l = std::log(std::exp(1.0) + x);
        return deg == 1 ? l : l * l;
    };
    for (const auto& fam : families) {
        for (double s : {0.9, 0.99}) {
            for (double theta : {25.0, 200.0}) {
                const double one_ms = 1.0 - s;
                const double lref = l_eval(fam.deg, theta / one_ms);
                const double lgt = std::lgamma(theta);
                auto integrand = [&](double y) {
                    return std::exp((theta - 1.0) * std::log(y) - y * one_ms + theta * std::log(one_ms) - lgt) *
                           l_eval(fam.deg, y) / lref;
                };
                const double peak = (theta - 1.0) / one_ms;
                const double width = peak / std::sqrt(theta - 1.0);
                const double hi = peak + 50.0 * width;
                double error = 0.0;
                const double I = finite_integrator.integrate(integrand, theta, hi, quad_tol, &error);
                // remainder past hi is below f(hi)/(1-s), double-exponentially small
                const double tail_bound = integrand(hi) / one_ms;
                if (error > 1e-6 || tail_bound > 1e-9)
                    throw QuadratureNonConverged("laplace-peak quadrature error " + std::to_string(error));
                char name[96];
                std::snprintf(name, sizeof name, "laplace-peak l=%s s=%g theta=%g", fam.name, s, theta);
                ReportRow row = make_row(name, 1.0, I, 0.0, "quadrature");
                const bool extreme = theta == 200.0 && s == 0.9;
                row.checked = extreme;
                row.pass = !extreme || std::fabs(row.ratio - 1.0) <= tol;
                rep.add(row);
            }
        }
    }
    return rep;
}

Report exp_derivative_lemmas(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "derivative_lemmas";
    const OffspringLaw law = law_from_json(cfg.law_json);
    if (law.family() != Family::StableFrac || law.alpha() >= 1.0)
        throw ConfigInvalid("derivative_lemmas requires a StableFrac law with alpha < 1");
    const double a = law.alpha();

    // (a) pointwise derivative bound, grid restricted to k(1-s) <= 0.1
    for (int k : {2, 3, 5, 8, 13, 21}) {
        for (double delta : {0.1, 0.05, 0.01}) {
            const double s = 1.0 - delta / static_cast<double>(k);
            const double lhs = law.pgf_derivative(k, s);
            const double rhs = std::exp(std::lgamma(k + 1.0)) * law.pmf(k) +
                               2.0 * std::pow(s, -static_cast<double>(k)) * k * dgamma(k - 1.0 - a) *
                                   std::pow(1.0 - s, -(k - 1.0 - a)) * stable_L1(law, (1.0 - s) / k);
            char name[96];
            std::snprintf(name, sizeof name, "derivative bound k=%d k(1-s)=%g", k, delta);
            ReportRow row = make_row(name, rhs, lhs, 0.0, "offspring_laws");
            row.pass = lhs <= rhs;
            rep.add(row);
        }
    }

    // (b) iterate-derivative asymptotics: f_m^{(J)}(f_{x phi}(0)) vs the Gamma-ratio prediction
    const StableRunData data = compute_run_data(law, cfg.schedule, cfg.phi);
    const double tol7 = cfg.tol("iterate_derivative", 0.15);
    const auto& last = data.tables.back();
    const int j0 = law.j0();
    const double mu_j0 = static_cast<double>(static_cast<long double>(a) * static_cast<long double>(last.n) /
                                             last.survival) *
                         last.p[static_cast<std::size_t>(j0)];
    const double x = cfg.x_grid.empty() ? 1.0 : cfg.x_grid.front();
    std::vector<double> last_ratio(3, 0.0);
    for (int J : {1, 2}) {
        for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
            const std::int64_t n = cfg.schedule[i];
            const std::int64_t span = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(data.phi[i]) - 1e-9));
            const long double u_r = survival_at(law, span);
            const std::vector<double> D = reduced_pmf(law, n - span, u_r, J + 1);
            long double obs = static_cast<long double>(D[static_cast<std::size_t>(J)]);
            for (int f = 2; f <= J; ++f) obs *= f;
            obs /= powl(u_r, J);
            const double delta_n = data.tables[i].p[static_cast<std::size_t>(j0)] / mu_j0;
            const double log_f_r = static_cast<double>(log1pl(-u_r)); // negative
            const double pred = static_cast<double>(span) * delta_n *
                                std::exp(std::lgamma(J + a) - std::lgamma(a) -
                                         J * std::log(std::fabs(log_f_r)));
            char name[96];
            std::snprintf(name, sizeof name, "iterate derivative J=%d x=%g n=%lld", J, x, static_cast<long long>(n));
            ReportRow row = make_row(name, pred, static_cast<double>(obs), 0.0, "series_engine");
            const bool is_last = i + 1 == cfg.schedule.size();
            if (is_last) last_ratio[static_cast<std::size_t>(J)] = row.ratio;
            row.checked = is_last;
            row.pass = !is_last || std::fabs(row.ratio - 1.0) <= tol7;
            rep.add(row);
        }
    }
    {
        // predicted J-dependence: the J=2 and J=1 ratios should agree
        ReportRow row = make_row("iterate derivative J-dependence ratio(J=2)/ratio(J=1)", last_ratio[1], last_ratio[2],
                                 0.0, "series_engine");
        row.pass = std::fabs(row.ratio - 1.0) <= cfg.tol("jdep", 0.20);
        rep.add(row);
    }
    return rep;
}

Report exp_zubkov(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "zubkov";
    const OffspringLaw law = law_from_json(cfg.law_json);
    const std::int64_t n = cfg.schedule.empty() ? 1024 : cfg.schedule.back();
    const ZubkovResult z = mc_zubkov(law, n, cfg.replicates, cfg.seed, cfg.jobs);
    const long double u_n = survival_at(law, n);
    for (std::size_t i = 0; i < z.grid.size(); ++i) {
        const double y = z.grid[i];
        ReportRow row = make_row("uniform y=" + std::to_string(y), y, z.cdf[i],
                                 z.accepted ? std::sqrt(y * (1.0 - y) / static_cast<double>(z.accepted)) : 0.0,
                                 "simulator");
        row.checked = false;
        rep.add(row);
        // exact finite-n CDF of d(n)/n for reference
        const auto k = static_cast<std::int64_t>(std::floor(y * static_cast<double>(n) + 1e-9));
        const long double u_k = survival_at(law, k);
        const double exact =
            static_cast<double>(static_cast<long double>(reduced_pmf(law, n - k, u_k, 1)[1]) / u_n);
        ReportRow ex = make_row("exact finite-n y=" + std::to_string(y), exact, z.cdf[i],
                                row.err, "series_engine/simulator");
        ex.checked = false;
        rep.add(ex);
    }
    ReportRow sup = make_row("sup deviation from uniform", 0.0, z.sup_dev_uniform, 0.0, "simulator");
    sup.ratio = 0.0;
    sup.pass = z.sup_dev_uniform <= cfg.tol("sup", 0.05);
    rep.add(sup);
    rep.summary["accepted"] = z.accepted;
    rep.summary["replicates"] = z.replicates;
    rep.summary["indeterminate"] = z.indeterminate;
    return rep;
}

Report exp_finite_variance(const ExperimentConfig& cfg) {
    Report rep;
    rep.id = "finite_variance";
    const OffspringLaw law = law_from_json(cfg.law_json);
    if (law.family() != Family::Geometric) throw ConfigInvalid("finite_variance requires the Geometric law");
    const std::int64_t n = cfg.schedule.empty() ? (std::int64_t{1} << 20) : cfg.schedule.back();
    const std::int64_t phi = cfg.phi(n);
    const std::int64_t T = small_deviation_threshold(law, phi); // = phi + 1 exactly

    // (a) P(H(n)) vs ((1-f_n(0))/n) phi
    const double pH = geometric_small_deviation(n, T);
    {
        const double pred = static_cast<double>(phi) /
                            (static_cast<double>(n) * (static_cast<double>(n) + 1.0));
        ReportRow row = make_row("small-dev vs (1-f_n)phi/n, n=" + std::to_string(n) + " phi=" + std::to_string(phi), pred, pH,
                                 0.0, "geometric closed form");
        row.pass = std::fabs(row.ratio - 1.0) <= cfg.tol("finvar22", 0.10);
        rep.add(row);
    }

    // (b) exact conditional reduced pmf vs x M^{*j}(1/x) with Erlang CDFs
    for (double x : cfg.x_grid) {
        const auto span = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(phi) - 1e-9));
        const std::int64_t m = n - span;
        const long double u_r = 1.0L / (static_cast<long double>(span) + 1.0L);
        const long double p_nb = u_r; // success prob of the conditioned-positive geometric
        for (int j = cfg.j_min; j <= cfg.j_max; ++j) {
            // P(Z(m,n)=j) = u_r^j m^{j-1} / (1 + m u_r)^{j+1}
            const long double md = static_cast<long double>(m);
            const long double pmf_red = expl(static_cast<long double>(j) * logl(u_r) +
                                             (static_cast<long double>(j) - 1.0L) * logl(md) -
                                             (static_cast<long double>(j) + 1.0L) * logl(1.0L + md * u_r));
            // P(S*_j <= T), negative binomial partial sum
            long double term = powl(p_nb, j), cond = 0.0L;
            for (std::int64_t sidx = j; sidx <= T; ++sidx) {
                cond += term;
                term *= (static_cast<long double>(sidx) / static_cast<long double>(sidx - j + 1)) * (1.0L - p_nb);
            }
            const double exact = static_cast<double>(pmf_red * cond / static_cast<long double>(pH));
            // limit: x * Erlang_j CDF at y = 1/x
            const double y = 1.0 / x;
            double tail = 0.0, tmf = 1.0;
            for (int i = 0; i < j; ++i) {
                tail += tmf;
                tmf *= y / (i + 1);
            }
            const double limit = x * (1.0 - std::exp(-y) * tail);
            char name[96];
            std::snprintf(name, sizeof name, "reduced law vs Erlang limit x=%g j=%d", x, j);
            ReportRow row = make_row(name, limit, exact, 0.0, "geometric closed form");
            const bool pinned = (j == 1 && x == 1.0);
            // the (x=1, j=1) target carries the tight band; the rest of the
            // grid is held to the same tolerance as the thm2 acceptance
            row.pass = pinned ? std::fabs(exact - limit) <= cfg.tol("finvar3", 0.02)
                              : std::fabs(exact - limit) <= cfg.tol("finvar3_grid", 0.05);
            rep.add(row);
        }
    }

    // (c) local limit: P(Z(n)=j) sigma^4 n^2 / 4 -> 1 for j = o(n)
    {
        const std::int64_t jloc = ceil_pow(static_cast<double>(n), 0.3);
        const double ratio = geometric_pz(n, jloc) * static_cast<double>(n) * static_cast<double>(n);
        ReportRow row = make_row("local limit sigma^4n^2/4, j=" + std::to_string(jloc), 1.0, ratio, 0.0,
                                 "geometric closed form");
        row.pass = std::fabs(ratio - 1.0) <= cfg.tol("local", 0.10);
        rep.add(row);
    }
    return rep;
}

nlohmann::json default_config(const std::string& id) {
    nlohmann::json j;
    j["experiment"] = id;
    const nlohmann::json stable08 = {{"family", "stable_frac"},
                                     {"alpha", {{"num", 4}, {"den", 5}}},
                                     {"c", {{"num", 5}, {"den", 9}}}};
    const nlohmann::json stable05 = {{"family", "stable_frac"},
                                     {"alpha", {{"num", 1}, {"den", 2}}},
                                     {"c", {{"num", 2}, {"den", 3}}}};
    if (id == "thm1" || id == "thm2" || id == "corollary" || id == "derivative_lemmas") {
        j["law"] = stable08;
        j["schedule"] = {1 << 12, 1 << 14, 1 << 16, 1 << 18, 1 << 20};
        j["phi"] = {{"exponent", 0.3}};
        j["x_grid"] = {0.5, 1.0, 2.0};
        j["j_range"] = {1, 3};
        if (id == "derivative_lemmas") j["x_grid"] = {1.0};
    } else if (id == "stationarity") {
        j["law"] = stable05;
        j["schedule"] = {1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14};
        j["j_range"] = {1, 10};
    } else if (id == "tauberian" || id == "bell_bound") {
        // alpha = 0.8: the partial-sum asymptotics reach the acceptance band
        // at T = 1024; alpha = 0.5 converges like T^{-0.4} and would need
        // T ~ 4096 (hours of series time) for the same accuracy
        j["law"] = stable08;
        j["schedule"] = {1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16};
        j["j_range"] = {2, 1024};
    } else if (id == "integral_lemmas") {
        j["law"] = stable05; // unused, present for schema uniformity
    } else if (id == "zubkov") {
        j["law"] = stable08;
        j["schedule"] = {1024};
        j["replicates"] = 12'600'000;
        j["seed"] = 20260810;
    } else if (id == "finite_variance") {
        j["law"] = {{"family", "geometric"}};
        j["schedule"] = {std::int64_t{1} << 20};
        j["phi"] = {{"exponent", 0.4}};
        j["x_grid"] = {0.5, 1.0, 2.0};
        j["j_range"] = {1, 3};
    } else {
        throw ConfigInvalid("unknown experiment id: " + id);
    }
    return j;
}

Report run_experiment(const ExperimentConfig& cfg) {
    Report rep;
    if (cfg.id == "thm1")
        rep = exp_thm1(cfg);
    else if (cfg.id == "thm2")
        rep = exp_thm2(cfg);
    else if (cfg.id == "corollary")
        rep = exp_corollary(cfg);
    else if (cfg.id == "stationarity")
        rep = exp_stationarity(cfg);
    else if (cfg.id == "tauberian")
        rep = exp_tauberian(cfg);
    else if (cfg.id == "bell_bound")
        rep = exp_bell_bound(cfg);
    else if (cfg.id == "integral_lemmas")
        rep = exp_integral_lemmas(cfg);
    else if (cfg.id == "derivative_lemmas")
        rep = exp_derivative_lemmas(cfg);
    else if (cfg.id == "zubkov")
        rep = exp_zubkov(cfg);
    else if (cfg.id == "finite_variance")
        rep = exp_finite_variance(cfg);
    else
        throw ConfigInvalid("unknown experiment id: " + cfg.id);

    nlohmann::json canonical;
    canonical["experiment"] = cfg.id;
    canonical["law"] = cfg.law_json;
    canonical["schedule"] = cfg.schedule;
    canonical["seed"] = cfg.seed;
    canonical["replicates"] = cfg.replicates;
    rep.config_hash = config_hash(canonical);
    rep.summary["experiment"] = rep.id;
    rep.summary["config_hash"] = rep.config_hash;
    rep.summary["code_version"] = kCodeVersion;
    rep.summary["seed"] = cfg.seed;
    rep.summary["pass"] = rep.pass;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"name", r.name},
                        {"predicted", r.predicted},
                        {"observed", r.observed},
                        {"ratio", r.ratio},
                        {"err", r.err},
                        {"pass", r.pass},
                        {"checked", r.checked},
                        {"source", r.source}});
    rep.summary["rows"] = rows;

    if (!cfg.out_dir.empty()) {
        write_csv(rep, cfg.out_dir + "/" + rep.id + ".csv");
        write_summary(rep, cfg.out_dir + "/summary.json");
    }
    return rep;
}

void write_csv(const Report& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "# config_hash=" << report.config_hash << " code_version=" << kCodeVersion << "\n";
    os << "name,predicted,observed,ratio,err,pass,source\n";
    char buf[64];
    for (const auto& r : report.rows) {
        os << '"' << r.name << '"';
        const double vals[4] = {r.predicted, r.observed, r.ratio, r.err};
        for (double v : vals) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        os << ',' << (r.pass ? "1" : "0") << ',' << r.source << '\n';
    }
}

void write_summary(const Report& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << report.summary.dump(2) << '\n';
}

} // namespace gwlab
