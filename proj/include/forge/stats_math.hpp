#pragma once

// Statistics helpers for comparing evaluation runs: Welch's unequal-variance
// t-test with a two-sided p-value.  The Student-t survival function is
// computed from the regularized incomplete beta function, so there is no
// dependency on an external stats library.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "forge/util.hpp"

namespace forge::stats {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double reg_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ForgeError("reg_incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);

    // Use the continued fraction directly where it converges fast, and the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) elsewhere.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_cf(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// P(T > t) for Student's t distribution with `dof` degrees of freedom, t >= 0.
inline double student_t_sf(double t, double dof) {
    if (!(dof > 0.0)) throw ForgeError("student_t_sf: dof must be positive");
    if (t < 0.0) return 1.0 - student_t_sf(-t, dof);
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return 0.5 * reg_incomplete_beta(dof / 2.0, 0.5, x);
}

struct TTestResult {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;
};

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (n-1 denominator).
inline double sample_variance(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

// Welch's two-sided t-test.  Degenerate inputs where both samples have zero
// variance yield p = 1 when the means agree and p = 0 when they differ,
// matching the convention used when comparing deterministic runs.
inline TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ForgeError("welch_t_test: each sample needs at least two values");

    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double va = sample_variance(a);
    const double vb = sample_variance(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    TTestResult r;
    if (va == 0.0 && vb == 0.0) {
        if (ma == mb) {
            r.t = 0.0;
            r.dof = na + nb - 2.0;
            r.p = 1.0;
        } else {
            r.t = (ma > mb) ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
            r.dof = na + nb - 2.0;
            r.p = 0.0;
        }
        return r;
    }

    const double sa = va / na;
    const double sb = vb / nb;
    const double se2 = sa + sb;
    r.t = (ma - mb) / std::sqrt(se2);
    r.dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    r.p = 2.0 * student_t_sf(std::fabs(r.t), r.dof);
    if (r.p > 1.0) r.p = 1.0;
    return r;
}

inline double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
    return welch_t_test(a, b).p;
}

} // namespace forge::stats
