#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "gwlab/errors.hpp"

namespace gwlab {

// Neumaier-compensated accumulator; keeps O(eps) error in the long dot
// products of the coefficient recurrences independent of length.
template <class Real>
struct CompensatedSum {
    Real sum = Real(0);
    Real comp = Real(0);

    void add(Real v) {
        const Real t = sum + v;
        if ((sum >= Real(0) ? sum : -sum) >= (v >= Real(0) ? v : -v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }

    Real value() const { return sum + comp; }
};

// Truncated formal power series about a fixed expansion point. All
// operations are exact modulo truncation: coefficient m of any result
// depends only on input coefficients of index <= m (lower-triangular
// updates), so truncation order never leaks into retained coefficients.
template <class Real>
using Coeffs = std::vector<Real>;

template <class Real>
Real eval_series(const Coeffs<Real>& a, Real h) {
    Real acc = Real(0);
    for (std::size_t i = a.size(); i-- > 0;) acc = acc * h + a[i];
    return acc;
}

template <class Real>
Real sum_coeffs(const Coeffs<Real>& a, std::size_t from = 0) {
    CompensatedSum<Real> s;
    for (std::size_t i = from; i < a.size(); ++i) s.add(a[i]);
    return s.value();
}

// v = u^beta with u[0] > 0, from v' u = beta u' v:
//   m u0 v_m = sum_{i=1..m} ((beta+1) i - m) u_i v_{m-i}
template <class Real>
void pow_series(const Coeffs<Real>& u, Real beta, Coeffs<Real>& v) {
    const std::size_t n = u.size();
    v.resize(n);
    assert(u[0] > Real(0));
    using std::pow;
    v[0] = pow(u[0], beta);
    for (std::size_t m = 1; m < n; ++m) {
        CompensatedSum<Real> acc;
        for (std::size_t i = 1; i <= m; ++i)
            acc.add(((beta + Real(1)) * Real(i) - Real(m)) * u[i] * v[m - i]);
        v[m] = acc.value() / (Real(m) * u[0]);
    }
}

// r = 1/w with w[0] != 0
template <class Real>
void reciprocal_series(const Coeffs<Real>& w, Coeffs<Real>& r) {
    const std::size_t n = w.size();
    r.resize(n);
    r[0] = Real(1) / w[0];
    for (std::size_t m = 1; m < n; ++m) {
        CompensatedSum<Real> acc;
        for (std::size_t i = 1; i <= m; ++i) acc.add(w[i] * r[m - i]);
        r[m] = -acc.value() / w[0];
    }
}

// c = a * b truncated to a.size()
template <class Real>
void mul_series(const Coeffs<Real>& a, const Coeffs<Real>& b, Coeffs<Real>& c) {
    const std::size_t n = a.size();
    assert(b.size() == n);
    c.assign(n, Real(0));
    for (std::size_t m = 0; m < n; ++m) {
        CompensatedSum<Real> acc;
        for (std::size_t i = 0; i <= m; ++i) acc.add(a[i] * b[m - i]);
        c[m] = acc.value();
    }
}

} // namespace gwlab
