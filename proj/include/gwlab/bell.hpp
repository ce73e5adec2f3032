#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "gwlab/offspring.hpp"

namespace gwlab {

using BigInt = boost::multiprecision::cpp_int;

// Stirling numbers of the second kind, exact integers, computed by both the
// alternating-sum formula and the triangle recurrence (the routes must agree).
// Valid for 1 <= k <= J <= 300.
BigInt stirling2(int J, int k);

// Triangular array of partial Bell polynomial values B_{J,k}(x_1,...,x_{J-k+1})
// for 1 <= k <= J <= Jmax, built by the binomial convolution recurrence
//   B_{J,k} = sum_r binom(J-1, r-1) x_r B_{J-r,k-1}.
class BellTable {
public:
    BellTable(std::vector<double> inputs, int Jmax);

    double value(int J, int k) const { return rows_[static_cast<std::size_t>(J)][static_cast<std::size_t>(k)]; }
    int Jmax() const { return Jmax_; }
    const std::vector<double>& inputs() const { return x_; }

private:
    int Jmax_;
    std::vector<double> x_;                     // x_[r], r = 1..Jmax
    std::vector<std::vector<double>> rows_;     // rows_[J][k], k = 0..J
};

BellTable bell_table(const std::vector<double>& inputs, int Jmax);

// Normalized Bell row b_{J,k} = B_{J,k}(1! mu_1, ..., ) / J! for J = 0..T,
// equal to the coefficients of (sum_j mu_j s^j)^k / k!. No factorials appear,
// so the computation is overflow-safe up to the homogeneous mu-scale, which is
// factored out in log domain.
std::vector<double> bell_normalized_row(const std::vector<double>& mu, int k, std::int64_t T);

// sum_{J=k}^{T} B_{J,k}/J! with inputs x_r = r! mu_r
double bell_weighted_sum(const std::vector<double>& mu, int k, std::int64_t T);

// f_n^{(j)}(0) for j = 0..J via the Faa di Bruno derivative recursion,
// an independent oracle for the series engine.
std::vector<double> faa_di_bruno_check(const OffspringLaw& law, std::int64_t n, int J);

// header `J,k,value`, rows ordered by (J,k), 17 significant digits
void write_bell_csv(const BellTable& table, std::ostream& os);

} // namespace gwlab
