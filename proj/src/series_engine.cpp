#include "gwlab/series_engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "gwlab/power_series.hpp"

namespace gwlab {

namespace {

std::atomic<std::int64_t> g_truncation_budget{std::int64_t{1} << 22};

// Iterates a <- f(a) on truncated series coefficients. The update is
// lower-triangular in the coefficient index, so entries 0..T are exact
// regardless of T (asserted by a unit test against a larger T).
template <class Real>
class SeriesIterator {
public:
    SeriesIterator(const OffspringLaw& law, Coeffs<Real> init) : law_(law), a_(std::move(init)) {
        if (law_.family() == Family::StableFrac) beta_ = Real(1) + static_cast<Real>(law_.alpha());
        // series about 0 represent the law of Z(n), whose coefficients below
        // j0 vanish identically; pin them so representation error in the law
        // parameters (e.g. c = 1/(1+alpha) rounded) cannot seed stray mass
        if (a_[0] == Real(0)) clamp_below_ = law_.j0();
    }

    void step() {
        switch (law_.family()) {
            case Family::StableFrac: {
                // f(a) = a + c (1-a)^{1+alpha}
                const std::size_t n = a_.size();
                u_.resize(n);
                u_[0] = Real(1) - a_[0];
                for (std::size_t i = 1; i < n; ++i) u_[i] = -a_[i];
                pow_series(u_, beta_, v_);
                const Real c = static_cast<Real>(law_.c());
                for (std::size_t i = 0; i < n; ++i) a_[i] += c * v_[i];
                break;
            }
            case Family::Geometric: {
                // f(a) = 1/(2-a)
                const std::size_t n = a_.size();
                u_.resize(n);
                u_[0] = Real(2) - a_[0];
                for (std::size_t i = 1; i < n; ++i) u_[i] = -a_[i];
                reciprocal_series(u_, v_);
                a_ = v_;
                break;
            }
            case Family::CustomPmf: {
                // Horner composition of the offspring polynomial with a
                const auto& p = law_.custom_probabilities();
                const std::size_t n = a_.size();
                v_.assign(n, Real(0));
                v_[0] = static_cast<Real>(p.back());
                for (std::size_t j = p.size() - 1; j-- > 0;) {
                    mul_series(v_, a_, u_);
                    u_[0] += static_cast<Real>(p[j]);
                    v_ = u_;
                }
                a_ = v_;
                break;
            }
        }
        sanitize();
    }

    const Coeffs<Real>& coeffs() const { return a_; }

    Real tail_mass() const {
        const Real t = Real(1) - sum_coeffs(a_);
        return t < Real(0) ? Real(0) : t;
    }

private:
    // Clamp roundoff-scale negatives to 0 and verify conservation.
    void sanitize() {
        for (int j = 1; j < clamp_below_ && j < static_cast<int>(a_.size()); ++j) {
            if (a_[static_cast<std::size_t>(j)] > Real(1e-12) || a_[static_cast<std::size_t>(j)] < Real(-1e-12))
                throw std::runtime_error("series iteration: nonzero mass below j0");
            a_[static_cast<std::size_t>(j)] = Real(0);
        }
        for (auto& x : a_) {
            if (x < Real(0)) {
                if (x < Real(-1e-12)) throw std::runtime_error("series iteration lost positivity");
                x = Real(0);
            }
        }
        const Real sum = sum_coeffs(a_);
        if (sum > Real(1) + Real(1e-12)) throw std::runtime_error("series iteration lost conservation");
    }

    const OffspringLaw& law_;
    Coeffs<Real> a_, u_, v_;
    Real beta_ = Real(2);
    int clamp_below_ = 0;
};

template <class Real>
std::vector<GenerationTable> run_tables(const OffspringLaw& law, const std::vector<std::int64_t>& schedule,
                                        int T) {
    if (T < 1) throw DomainError("generation_table: T must be >= 1");
    if (T + 1 > series_truncation_budget())
        throw TruncationOverflow("generation_table: T=" + std::to_string(T) + " exceeds budget");
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (schedule[i] >= schedule[i + 1]) throw DomainError("schedule must be strictly increasing");
    if (!schedule.empty() && schedule.front() < 0) throw DomainError("schedule must be nonnegative");

    Coeffs<Real> init(static_cast<std::size_t>(T) + 1, Real(0));
    init[1] = Real(1); // f_0(s) = s
    SeriesIterator<Real> iter(law, init);

    std::vector<GenerationTable> out;
    out.reserve(schedule.size());
    long double u = 1.0L; // 1 - f_k(0)
    std::int64_t k = 0;
    auto snapshot = [&](std::int64_t n) {
        GenerationTable t;
        t.n = n;
        t.T = T;
        t.j0 = law.j0();
        t.p.assign(iter.coeffs().begin(), iter.coeffs().end());
        t.tail_mass = static_cast<double>(iter.tail_mass());
        t.survival = u;
        t.extinction_prob = static_cast<double>(1.0L - u);
        if (std::fabs(t.p[0] - t.extinction_prob) > 1e-12)
            throw std::runtime_error("series extinction drifted from scalar iteration");
        out.push_back(std::move(t));
    };
    for (std::int64_t target : schedule) {
        while (k < target) {
            iter.step();
            u = law.survival_step(u);
            ++k;
        }
        snapshot(target);
    }
    return out;
}

template <class Real>
std::vector<double> run_reduced(const OffspringLaw& law, std::int64_t m, long double u_r, int J) {
    if (J < 1) throw DomainError("reduced series: J must be >= 1");
    if (J + 1 > series_truncation_budget()) throw TruncationOverflow("reduced series: J exceeds budget");
    if (!(u_r > 0.0L) || u_r > 1.0L) throw DomainError("reduced series: u must lie in (0,1]");
    Coeffs<Real> init(static_cast<std::size_t>(J) + 1, Real(0));
    init[0] = static_cast<Real>(1.0L - u_r);
    init[1] = static_cast<Real>(u_r);
    SeriesIterator<Real> iter(law, init);
    for (std::int64_t k = 0; k < m; ++k) iter.step();
    std::vector<double> out(iter.coeffs().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(iter.coeffs()[i]);
    return out;
}

} // namespace

SeriesPrecision series_precision_from_env() {
    const char* v = std::getenv("GWLAB_PRECISION");
    if (v != nullptr && std::string(v) == "extended") return SeriesPrecision::Extended;
    return SeriesPrecision::Double;
}

std::int64_t series_truncation_budget() { return g_truncation_budget.load(); }
void set_series_truncation_budget(std::int64_t b) { g_truncation_budget.store(b); }

std::vector<long double> survival_sequence(const OffspringLaw& law, std::int64_t n_max) {
    std::vector<long double> u(static_cast<std::size_t>(n_max) + 1);
    u[0] = 1.0L;
    for (std::int64_t k = 1; k <= n_max; ++k) u[static_cast<std::size_t>(k)] = law.survival_step(u[static_cast<std::size_t>(k - 1)]);
    return u;
}

std::vector<double> extinction_sequence(const OffspringLaw& law, std::int64_t n_max) {
    std::vector<long double> u = survival_sequence(law, n_max);
    std::vector<double> f(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = static_cast<double>(1.0L - u[i]);
    return f;
}

long double survival_at(const OffspringLaw& law, std::int64_t n) {
    long double u = 1.0L;
    for (std::int64_t k = 0; k < n; ++k) u = law.survival_step(u);
    return u;
}

std::vector<GenerationTable> generation_tables(const OffspringLaw& law,
                                               const std::vector<std::int64_t>& schedule, int T) {
    if (series_precision_from_env() == SeriesPrecision::Extended)
        return run_tables<long double>(law, schedule, T);
    return run_tables<double>(law, schedule, T);
}

GenerationTable generation_table(const OffspringLaw& law, std::int64_t n, int T) {
    return generation_tables(law, {n}, T).front();
}

std::vector<double> reduced_pmf(const OffspringLaw& law, std::int64_t m, long double u_r, int J) {
    if (series_precision_from_env() == SeriesPrecision::Extended)
        return run_reduced<long double>(law, m, u_r, J);
    return run_reduced<double>(law, m, u_r, J);
}

std::vector<double> taylor_at_point(const OffspringLaw& law, std::int64_t m, double s0, int J) {
    if (s0 < 0.0 || s0 >= 1.0) throw DomainError("taylor_at_point: s0 must lie in [0,1)");
    if (J < 1) throw DomainError("taylor_at_point: J must be >= 1");
    const long double u = 1.0L - static_cast<long double>(s0);
    std::vector<double> d = reduced_pmf(law, m, u, J);
    // f_m^{(k)}(s0) = k! d_k / (1-s0)^k
    std::vector<double> out(d.size());
    long double scale = 1.0L; // k! / u^k
    out[0] = d[0];
    for (std::size_t k = 1; k < d.size(); ++k) {
        scale *= static_cast<long double>(k) / u;
        out[k] = static_cast<double>(static_cast<long double>(d[k]) * scale);
    }
    return out;
}

std::int64_t small_deviation_threshold(const OffspringLaw& law, std::int64_t phi) {
    const long double u = survival_at(law, phi);
    // the tiny relative nudge keeps exact integer boundaries (Geometric:
    // 1/u = phi+1) from flooring one short after roundoff
    const long double t = floorl((1.0L + 1e-14L) / u);
    return static_cast<std::int64_t>(t);
}

SmallDeviation small_deviation_prob(const OffspringLaw& law, std::int64_t n, std::int64_t phi) {
    if (phi < 1 || phi > n) throw DomainError("small_deviation_prob: need 1 <= phi <= n");
    const std::int64_t T = small_deviation_threshold(law, phi);
    if (T + 1 > series_truncation_budget())
        throw TruncationOverflow("small_deviation_prob: T=" + std::to_string(T) + " exceeds budget");
    GenerationTable table = generation_table(law, n, static_cast<int>(T));
    CompensatedSum<double> s;
    for (std::int64_t j = 1; j <= T; ++j) s.add(table.p[static_cast<std::size_t>(j)]);
    return {T, s.value()};
}

MuEstimates mu_sequence(const OffspringLaw& law, int j_max, std::vector<std::int64_t> schedule,
                        double threshold) {
    if (schedule.size() < 2 || schedule.back() < 16 * schedule.front())
        throw ConfigInvalid("mu_sequence: schedule must span at least a factor 16");
    MuEstimates me;
    me.schedule = schedule;
    me.threshold = threshold;
    const double alpha = law.alpha();
    std::vector<GenerationTable> tables = generation_tables(law, schedule, j_max);
    for (const auto& t : tables) {
        std::vector<double> stage(static_cast<std::size_t>(j_max) + 1, 0.0);
        const double norm = static_cast<double>(static_cast<long double>(alpha) *
                                                static_cast<long double>(t.n) / t.survival);
        for (int j = 1; j <= j_max; ++j) stage[static_cast<std::size_t>(j)] = norm * t.p[static_cast<std::size_t>(j)];
        me.stages.push_back(std::move(stage));
    }
    me.mu = me.stages.back();
    // relative change over the last doubling of n
    std::size_t prev = 0;
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (schedule[i] * 2 <= schedule.back()) prev = i;
    me.rel_change.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    for (int j = 1; j <= j_max; ++j) {
        const double last = me.mu[static_cast<std::size_t>(j)];
        const double before = me.stages[prev][static_cast<std::size_t>(j)];
        me.rel_change[static_cast<std::size_t>(j)] = last == 0.0 ? 0.0 : std::fabs(last - before) / last;
        if (me.rel_change[static_cast<std::size_t>(j)] > threshold) me.nonconverged = true;
    }
    return me;
}

ReducedJoint reduced_joint_given(const OffspringLaw& law, std::int64_t n, std::int64_t m, int j_max,
                                 std::int64_t T, double p_H) {
    if (m < 0 || m >= n) throw DomainError("reduced_joint: need 0 <= m < n");
    if (j_max < 1) throw DomainError("reduced_joint: j_max must be >= 1");
    const std::int64_t r = n - m;
    ReducedJoint rj;
    rj.T = T;
    rj.p_H = p_H;
    const long double u_r = survival_at(law, r);
    rj.pmf_reduced = reduced_pmf(law, m, u_r, j_max);

    // subtree populations conditioned on survival: pi_k = P(Z(r)=k | Z(r)>0).
    // P(S*_j <= T) is exact from pi truncated at T because any outcome with a
    // part beyond T has sum beyond T.
    GenerationTable tr = generation_table(law, r, static_cast<int>(T));
    const double qr = 1.0 - tr.p[0];
    std::vector<double> pi(static_cast<std::size_t>(T) + 1, 0.0);
    for (std::int64_t k = 1; k <= T; ++k) pi[static_cast<std::size_t>(k)] = tr.p[static_cast<std::size_t>(k)] / qr;

    rj.cond_H_given_j.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    rj.cond_j_given_H.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    std::vector<double> conv = pi, next;
    rj.cond_H_given_j[1] = sum_coeffs(conv, 1);
    for (int j = 2; j <= j_max; ++j) {
        if (j > T) break; // S*_j >= j > T
        mul_series(conv, pi, next);
        conv = next;
        rj.cond_H_given_j[static_cast<std::size_t>(j)] = sum_coeffs(conv, 1);
    }
    for (int j = 1; j <= j_max; ++j)
        rj.cond_j_given_H[static_cast<std::size_t>(j)] =
            rj.pmf_reduced[static_cast<std::size_t>(j)] * rj.cond_H_given_j[static_cast<std::size_t>(j)] / p_H;
    return rj;
}

ReducedJoint reduced_joint(const OffspringLaw& law, std::int64_t n, std::int64_t m, int j_max,
                           std::int64_t T) {
    GenerationTable tn = generation_table(law, n, static_cast<int>(T));
    CompensatedSum<double> s;
    for (std::int64_t j = 1; j <= T; ++j) s.add(tn.p[static_cast<std::size_t>(j)]);
    return reduced_joint_given(law, n, m, j_max, T, s.value());
}

void write_generation_csv(const GenerationTable& table, std::ostream& os) {
    os << "n,j,prob,tail_mass\n";
    char buf[64];
    for (int j = 0; j <= table.T; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", table.p[static_cast<std::size_t>(j)]);
        os << table.n << ',' << j << ',' << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", table.tail_mass);
        os << buf << '\n';
    }
}

double geometric_iterate(std::int64_t n, double s) {
    const double nd = static_cast<double>(n);
    return (nd - (nd - 1.0) * s) / (nd + 1.0 - nd * s);
}

double geometric_pz(std::int64_t n, std::int64_t j) {
    if (j < 1) return j == 0 ? static_cast<double>(n) / static_cast<double>(n + 1) : 0.0;
    const long double nd = static_cast<long double>(n);
    // n^{j-1}/(n+1)^{j+1} = exp((j-1) log n - (j+1) log(n+1))
    return static_cast<double>(expl((static_cast<long double>(j) - 1.0L) * logl(nd) -
                                    (static_cast<long double>(j) + 1.0L) * logl(nd + 1.0L)));
}

double geometric_small_deviation(std::int64_t n, std::int64_t T) {
    // sum_{j=1..T} n^{j-1}/(n+1)^{j+1} = (1/(n+1)) (1 - (n/(n+1))^T)
    const long double nd = static_cast<long double>(n);
    const long double ratio_pow = expl(static_cast<long double>(T) * (logl(nd) - logl(nd + 1.0L)));
    return static_cast<double>((1.0L - ratio_pow) / (nd + 1.0L));
}

} // namespace gwlab
