#include "gwlab/bell.hpp"

#include <cmath>
#include <ostream>

#include "gwlab/power_series.hpp"

namespace gwlab {

namespace {

constexpr int kStirlingMax = 300;

BigInt binom_big(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt v = 1;
    for (int i = 0; i < k; ++i) {
        v *= n - i;
        v /= i + 1;
    }
    return v;
}

BigInt stirling2_sum(int J, int k) {
    // S(J,k) = (1/k!) sum_{r=1..k} (-1)^{k-r} binom(k,r) r^J
    BigInt acc = 0;
    for (int r = 1; r <= k; ++r) {
        BigInt term = binom_big(k, r) * boost::multiprecision::pow(BigInt(r), static_cast<unsigned>(J));
        if ((k - r) % 2 == 0)
            acc += term;
        else
            acc -= term;
    }
    BigInt kfact = 1;
    for (int i = 2; i <= k; ++i) kfact *= i;
    return acc / kfact;
}

BigInt stirling2_triangle(int J, int k) {
    // S(J,k) = k S(J-1,k) + S(J-1,k-1)
    std::vector<BigInt> row(static_cast<std::size_t>(k) + 1, 0);
    row[0] = 1; // S(0,0)
    for (int j = 1; j <= J; ++j) {
        for (int i = std::min(j, k); i >= 1; --i) row[static_cast<std::size_t>(i)] = i * row[static_cast<std::size_t>(i)] + row[static_cast<std::size_t>(i - 1)];
        row[0] = 0;
    }
    return row[static_cast<std::size_t>(k)];
}

} // namespace

BigInt stirling2(int J, int k) {
    if (J < 1 || k < 1 || k > J) throw RangeError("stirling2: need 1 <= k <= J");
    if (J > kStirlingMax) throw RangeError("stirling2: J exceeds configured maximum 300");
    BigInt a = stirling2_sum(J, k);
    BigInt b = stirling2_triangle(J, k);
    if (a != b) throw std::runtime_error("stirling2: formula and recurrence disagree");
    return a;
}

BellTable::BellTable(std::vector<double> inputs, int Jmax) : Jmax_(Jmax) {
    if (Jmax < 1) throw RangeError("bell_table: Jmax must be >= 1");
    if (static_cast<int>(inputs.size()) < Jmax) inputs.resize(static_cast<std::size_t>(Jmax), 0.0);
    x_.assign(static_cast<std::size_t>(Jmax) + 1, 0.0);
    for (int r = 1; r <= Jmax; ++r) x_[static_cast<std::size_t>(r)] = inputs[static_cast<std::size_t>(r - 1)];

    rows_.resize(static_cast<std::size_t>(Jmax) + 1);
    rows_[0] = {1.0}; // B_{0,0} = 1
    // binomial triangle in doubles, exact for Jmax <= 56 and accurate beyond
    std::vector<std::vector<double>> binom(static_cast<std::size_t>(Jmax));
    for (int nn = 0; nn < Jmax; ++nn) {
        binom[static_cast<std::size_t>(nn)].resize(static_cast<std::size_t>(nn) + 1);
        for (int kk = 0; kk <= nn; ++kk)
            binom[static_cast<std::size_t>(nn)][static_cast<std::size_t>(kk)] =
                (kk == 0 || kk == nn) ? 1.0
                                      : binom[static_cast<std::size_t>(nn - 1)][static_cast<std::size_t>(kk - 1)] +
                                            binom[static_cast<std::size_t>(nn - 1)][static_cast<std::size_t>(kk)];
    }
    for (int J = 1; J <= Jmax; ++J) {
        rows_[static_cast<std::size_t>(J)].assign(static_cast<std::size_t>(J) + 1, 0.0);
        for (int k = 1; k <= J; ++k) {
            CompensatedSum<double> acc;
            for (int r = 1; r <= J - k + 1; ++r) {
                const double prev = (J - r >= k - 1) ? rows_[static_cast<std::size_t>(J - r)][static_cast<std::size_t>(k - 1)] : 0.0;
                if (prev == 0.0 || x_[static_cast<std::size_t>(r)] == 0.0) continue;
                acc.add(binom[static_cast<std::size_t>(J - 1)][static_cast<std::size_t>(r - 1)] * x_[static_cast<std::size_t>(r)] * prev);
            }
            rows_[static_cast<std::size_t>(J)][static_cast<std::size_t>(k)] = acc.value();
        }
    }
}

BellTable bell_table(const std::vector<double>& inputs, int Jmax) { return BellTable(inputs, Jmax); }

std::vector<double> bell_normalized_row(const std::vector<double>& mu, int k, std::int64_t T) {
    if (k < 1 || T < k) throw RangeError("bell_normalized_row: need 1 <= k <= T");
    const auto Ts = static_cast<std::size_t>(T);
    // P(s) = sum_{j>=1} mu_j s^j = s^{j0} Q(s) with Q(0) > 0
    std::size_t j0 = 1;
    while (j0 < mu.size() && mu[j0] == 0.0) ++j0;
    if (j0 >= mu.size()) throw RangeError("bell_normalized_row: mu vanishes");
    if (static_cast<std::size_t>(k) * j0 > Ts) return std::vector<double>(Ts + 1, 0.0);

    // factor out the scale in log domain to keep Q0^k representable
    double scale = 0.0;
    for (std::size_t j = j0; j < mu.size() && j <= Ts; ++j) scale = std::max(scale, mu[j]);
    const double log_scale = std::log(scale);

    // P^k = s^{k j0} Q^k with Q(0) > 0; indices of Q^k needed: 0..T - k*j0
    const std::size_t qlen = Ts - static_cast<std::size_t>(k) * j0 + 1;
    Coeffs<double> q(qlen, 0.0);
    for (std::size_t j = j0; j < j0 + qlen && j < mu.size(); ++j) q[j - j0] = mu[j] / scale;
    Coeffs<double> qk;
    pow_series(q, static_cast<double>(k), qk);

    // b_{J,k} = scale^k * qk[J - k*j0] / k!
    const double factor = std::exp(static_cast<double>(k) * log_scale - std::lgamma(static_cast<double>(k) + 1.0));
    std::vector<double> b(Ts + 1, 0.0);
    for (std::size_t J = static_cast<std::size_t>(k) * j0; J <= Ts; ++J) b[J] = qk[J - static_cast<std::size_t>(k) * j0] * factor;
    return b;
}

double bell_weighted_sum(const std::vector<double>& mu, int k, std::int64_t T) {
    if (k < 1 || T < k) throw RangeError("bell_weighted_sum: need 1 <= k <= T");
    const auto Ts = static_cast<std::size_t>(T);
    std::size_t j0 = 1;
    while (j0 < mu.size() && mu[j0] == 0.0) ++j0;
    if (j0 >= mu.size()) throw RangeError("bell_weighted_sum: mu vanishes");
    if (static_cast<std::size_t>(k) * j0 > Ts) return 0.0;

    double scale = 0.0;
    for (std::size_t j = j0; j < mu.size() && j <= Ts; ++j) scale = std::max(scale, mu[j]);

    const std::size_t qlen = Ts - static_cast<std::size_t>(k) * j0 + 1;
    Coeffs<double> q(qlen, 0.0);
    for (std::size_t j = j0; j < j0 + qlen && j < mu.size(); ++j) q[j - j0] = mu[j] / scale;
    Coeffs<double> qk;
    pow_series(q, static_cast<double>(k), qk);
    CompensatedSum<double> s;
    for (double v : qk) s.add(v);
    // sum = scale^k/k! * sum(qk); recombine in log domain
    const double log_sum = std::log(s.value()) + static_cast<double>(k) * std::log(scale) -
                           std::lgamma(static_cast<double>(k) + 1.0);
    return std::exp(log_sum);
}

void write_bell_csv(const BellTable& table, std::ostream& os) {
    os << "J,k,value\n";
    char buf[64];
    for (int J = 1; J <= table.Jmax(); ++J)
        for (int k = 1; k <= J; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", table.value(J, k));
            os << J << ',' << k << ',' << buf << '\n';
        }
}

std::vector<double> faa_di_bruno_check(const OffspringLaw& law, std::int64_t n, int J) {
    if (n < 1) throw DomainError("faa_di_bruno_check: n must be >= 1");
    if (J < 1) throw DomainError("faa_di_bruno_check: J must be >= 1");
    // d[j] = f_m^{(j)}(0); start at m = 1
    std::vector<double> d(static_cast<std::size_t>(J) + 1, 0.0);
    long double fact = 1.0L;
    for (int j = 1; j <= J; ++j) {
        fact *= j;
        d[static_cast<std::size_t>(j)] = static_cast<double>(fact * static_cast<long double>(law.pmf(j)));
    }
    long double u = law.survival_step(1.0L); // 1 - f_m(0) at m = 1
    d[0] = static_cast<double>(1.0L - u);

    std::vector<double> next(d.size(), 0.0);
    std::vector<double> inputs(static_cast<std::size_t>(J), 0.0);
    for (std::int64_t m = 1; m < n; ++m) {
        for (int r = 1; r <= J; ++r) inputs[static_cast<std::size_t>(r - 1)] = d[static_cast<std::size_t>(r)];
        BellTable bt(inputs, J);
        const double fprime = law.pgf_derivative_u(1, u);
        for (int jj = 1; jj <= J; ++jj) {
            CompensatedSum<double> acc;
            acc.add(fprime * d[static_cast<std::size_t>(jj)]);
            for (int k = 2; k <= jj; ++k) {
                const double bv = bt.value(jj, k);
                if (bv == 0.0) continue;
                acc.add(law.pgf_derivative_u(k, u) * bv);
            }
            next[static_cast<std::size_t>(jj)] = acc.value();
        }
        u = law.survival_step(u);
        next[0] = static_cast<double>(1.0L - u);
        d.swap(next);
    }
    return d;
}

} // namespace gwlab
