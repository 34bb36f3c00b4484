#pragma once

// Adaptive Gauss-Kronrod 15(7) quadrature plus the semi-infinite transforms
// used throughout: Levy integrands live on (0, inf) with an integrable
// power singularity at 0 and exponential or power decay at infinity.
// Strategy: substitute x = e^t near zero so the singular factor becomes a
// smooth exponential, and sweep dyadic panels toward infinity with a
// relative-contribution stopping rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poismix {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Kronrod-15 abscissae/weights on [-1,1] and the embedded Gauss-7 weights.
// Values from QUADPACK dqk15 (public domain).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double integral;
    double error;
};

template <typename F>
PanelResult gk15(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fc = f(center);
    double result_gauss = kWg[3] * fc;
    double result_kronrod = kWgk[7] * fc;
    double fv[15];
    fv[7] = fc;
    for (int j = 0; j < 7; ++j) {
        double dx = half * kXgk[j];
        double f1 = f(center - dx);
        double f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        result_kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) result_gauss += kWg[j / 2] * (f1 + f2);
    }
    // QUADPACK error heuristic: rescale the raw Gauss/Kronrod gap by the
    // integrand's deviation from its mean to avoid over-reporting on
    // near-constant panels.
    double mean = result_kronrod * 0.5;
    double asc = 0.0;
    for (int j = 0; j < 15; ++j) {
        double w = (j == 7) ? kWgk[7] : kWgk[j < 7 ? j : 14 - j];
        asc += w * std::fabs(fv[j] - mean);
    }
    asc *= half;
    double err = std::fabs((result_kronrod - result_gauss) * half);
    if (asc != 0.0 && err != 0.0) {
        err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    }
    return {result_kronrod * half, err};
}

}  // namespace detail

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_depth = 48;
    std::size_t max_panels = 200000;
};

// Adaptive bisection on a finite interval.  Throws QuadratureError if the
// panel budget or recursion depth cannot meet the tolerance.
template <typename F>
double integrate(F&& f, double a, double b, QuadratureOptions opt = {}) {
    if (!(a < b)) return 0.0;
    struct Seg {
        double a, b, integral, error;
        int depth;
    };
    auto first = detail::gk15(f, a, b);
    std::size_t used = 1;
    std::vector<Seg> stack;
    stack.push_back({a, b, first.integral, first.error, 0});
    double total = first.integral;
    double total_err = first.error;
    while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::fabs(total))) {
        // Split the worst panel.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < stack.size(); ++i) {
            if (stack[i].error > stack[worst].error) worst = i;
        }
        Seg seg = stack[worst];
        if (seg.depth >= opt.max_depth || used + 2 > opt.max_panels) {
            throw QuadratureError("quadrature: tolerance not met (depth/panel budget exhausted)");
        }
        double mid = 0.5 * (seg.a + seg.b);
        auto left = detail::gk15(f, seg.a, mid);
        auto right = detail::gk15(f, mid, seg.b);
        used += 2;
        if (!std::isfinite(left.integral) || !std::isfinite(right.integral)) {
            throw QuadratureError("quadrature: integrand evaluated to a non-finite value");
        }
        total += left.integral + right.integral - seg.integral;
        total_err += left.error + right.error - seg.error;
        stack[worst] = {seg.a, mid, left.integral, left.error, seg.depth + 1};
        stack.push_back({mid, seg.b, right.integral, right.error, seg.depth + 1});
    }
    return total;
}

// integral over [lo, inf) of a decaying integrand: dyadic panels
// [lo, lo+w], [lo+w, lo+2w], ..., doubling width, stopping once a panel
// contributes less than rel_tol * |accumulated| (checked twice in a row so a
// single small panel inside an oscillation cannot stop the sweep early).
template <typename F>
double integrate_to_inf(F&& f, double lo, QuadratureOptions opt = {},
                        double first_width = 1.0) {
    double total = 0.0;
    double a = lo;
    double w = first_width;
    int consecutive_small = 0;
    for (int panel = 0; panel < 2000; ++panel) {
        double piece = integrate(f, a, a + w, opt);
        total += piece;
        double scale = std::max(std::fabs(total), 1e-300);
        if (std::fabs(piece) < std::max(opt.abs_tol, 0.5 * opt.rel_tol * scale)) {
            if (++consecutive_small >= 2) return total;
        } else {
            consecutive_small = 0;
        }
        a += w;
        w *= 2.0;
        if (a > 1e300) break;
    }
    throw QuadratureError("quadrature: semi-infinite sweep did not converge");
}

// integral over (0, hi] of an integrand with an integrable power singularity
// at 0: substitute x = e^t, i.e. compute integral over (-inf, log hi] of
// e^t f(e^t) dt, sweeping panels leftward until contributions vanish.
template <typename F>
double integrate_from_zero(F&& f, double hi, QuadratureOptions opt = {}) {
    if (!(hi > 0.0)) return 0.0;
    auto g = [&f](double t) {
        double x = std::exp(t);
        return x * f(x);
    };
    double b = std::log(hi);
    double w = 2.0;
    double total = 0.0;
    int consecutive_small = 0;
    for (int panel = 0; panel < 300; ++panel) {
        double piece = integrate(g, b - w, b, opt);
        if (!std::isfinite(piece)) {
            throw QuadratureError("quadrature: non-finite panel near the singular endpoint");
        }
        total += piece;
        double scale = std::max(std::fabs(total), 1e-300);
        if (std::fabs(piece) < std::max(opt.abs_tol, 0.5 * opt.rel_tol * scale)) {
            if (++consecutive_small >= 2) return total;
        } else {
            consecutive_small = 0;
        }
        b -= w;
        // Cap the width so the sweep cannot leap past its own stopping rule
        // into the region where x^-(1+alpha) overflows.
        w = std::min(2.0 * w, 8.0);
        if (b < -700.0) return total;  // x underflows; integrable tails are exhausted
    }
    throw QuadratureError("quadrature: singular-endpoint sweep did not converge");
}

// Convenience: full integral over (0, inf), split at `split`.
template <typename F>
double integrate_positive_axis(F&& f, QuadratureOptions opt = {}, double split = 1.0) {
    return integrate_from_zero(f, split, opt) + integrate_to_inf(f, split, opt);
}

}  // namespace poismix
