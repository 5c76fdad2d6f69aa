#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace chanflow::detail {

/// Adaptive Gauss-Kronrod on [a, b], split at `breaks` and at ±2^n so that
/// long ranges are covered by pieces of comparable relative size.
template <class F>
double integrate(F&& fn, double a, double b, const std::vector<double>& breaks = {},
                 double tol = 1e-13) {
    if (a == b) return 0.0;
    std::vector<double> pts{a, b};
    for (double x : breaks) {
        if (x > a && x < b) pts.push_back(x);
    }
    if (a < 0.0 && b > 0.0) pts.push_back(0.0);
    for (double p = 1.0; p < 1e18; p *= 2.0) {
        if (p > a && p < b) pts.push_back(p);
        if (-p > a && -p < b) pts.push_back(-p);
        if (p > std::max(std::abs(a), std::abs(b))) break;
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        sum += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(fn, pts[i], pts[i + 1],
                                                                             12, tol);
    }
    return sum;
}

}  // namespace chanflow::detail
