#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gwlab/offspring.hpp"

namespace gwlab {

enum class SeriesPrecision { Double, Extended };

// GWLAB_PRECISION=extended widens coefficient arithmetic to long double
SeriesPrecision series_precision_from_env();

// truncation budget for T (coefficient count); exceeding it raises
// TruncationOverflow
std::int64_t series_truncation_budget();
void set_series_truncation_budget(std::int64_t);

// Exact law of Z(n) truncated at T.
struct GenerationTable {
    std::int64_t n = 0;
    int T = 0;
    int j0 = 1;
    std::vector<double> p;           // P(Z(n)=j), j = 0..T
    double tail_mass = 0.0;          // 1 - sum(p)
    double extinction_prob = 0.0;    // f_n(0), scalar iteration
    long double survival = 1.0L;     // 1 - f_n(0), full long double precision

    double q(int J) const { return p[static_cast<std::size_t>(J)] / p[static_cast<std::size_t>(j0)]; }
};

// f_k(0) for k = 0..n_max
std::vector<double> extinction_sequence(const OffspringLaw& law, std::int64_t n_max);
// 1 - f_k(0) for k = 0..n_max, long double scalar iteration
std::vector<long double> survival_sequence(const OffspringLaw& law, std::int64_t n_max);
long double survival_at(const OffspringLaw& law, std::int64_t n);

GenerationTable generation_table(const OffspringLaw& law, std::int64_t n, int T);
// one pass, snapshots at each scheduled generation (schedule strictly increasing)
std::vector<GenerationTable> generation_tables(const OffspringLaw& law,
                                               const std::vector<std::int64_t>& schedule, int T);

// f_m^{(k)}(s0), k = 0..J
std::vector<double> taylor_at_point(const OffspringLaw& law, std::int64_t m, double s0, int J);

// Reduced-process law: coefficients j=0..J of f_m(s0 + (1-s0)s) with
// s0 = 1-u_r; entry j equals P(Z(m, m+r) = j) when u_r = 1 - f_r(0).
std::vector<double> reduced_pmf(const OffspringLaw& law, std::int64_t m, long double u_r, int J);

struct SmallDeviation {
    std::int64_t T = 0;
    double prob = 0.0;
};
// T = floor(1/(1-f_phi(0))), prob = P(0 < Z(n) <= T)
SmallDeviation small_deviation_prob(const OffspringLaw& law, std::int64_t n, std::int64_t phi);
std::int64_t small_deviation_threshold(const OffspringLaw& law, std::int64_t phi);

struct MuEstimates {
    std::vector<std::int64_t> schedule;
    std::vector<std::vector<double>> stages; // stages[s][j], j = 0..j_max
    std::vector<double> mu;                  // final estimates, j = 0..j_max
    std::vector<double> rel_change;          // over the last schedule doubling
    double threshold = 0.0;
    bool nonconverged = false;
};
// mu_hat_j(n) = (alpha n / (1-f_n(0))) P(Z(n)=j) along the schedule
MuEstimates mu_sequence(const OffspringLaw& law, int j_max, std::vector<std::int64_t> schedule,
                        double threshold = 0.05);

struct ReducedJoint {
    std::vector<double> pmf_reduced;    // P(Z(m,n)=j), j = 0..j_max
    std::vector<double> cond_H_given_j; // P(H(n) | Z(m,n)=j), j = 0..j_max
    std::vector<double> cond_j_given_H; // P(Z(m,n)=j | H(n)), j = 0..j_max
    double p_H = 0.0;
    std::int64_t T = 0;
};
// Self-contained: computes P(H(n)) = P(0 < Z(n) <= T) internally.
ReducedJoint reduced_joint(const OffspringLaw& law, std::int64_t n, std::int64_t m, int j_max,
                           std::int64_t T);
// Variant for callers that already know P(H(n)) from a generation table run.
ReducedJoint reduced_joint_given(const OffspringLaw& law, std::int64_t n, std::int64_t m, int j_max,
                                 std::int64_t T, double p_H);

// header `n,j,prob,tail_mass`, rows ordered by j, 17 significant digits
void write_generation_csv(const GenerationTable& table, std::ostream& os);

// Closed-form Geometric oracle: f_n(s) = (n - (n-1)s) / (n+1 - ns)
double geometric_iterate(std::int64_t n, double s);
// P(Z(n)=j) = n^{j-1} / (n+1)^{j+1} for j >= 1
double geometric_pz(std::int64_t n, std::int64_t j);
// P(0 < Z(n) <= T) in closed form
double geometric_small_deviation(std::int64_t n, std::int64_t T);

} // namespace gwlab
