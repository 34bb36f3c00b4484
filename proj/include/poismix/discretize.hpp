#pragma once

// Discretization of a one-sided Levy measure onto the lattice a{1,2,...}:
// the Poisson-weight sequence ell_k = integral e^{-x/a}(x/a)^k M(dx), the
// total activity ell_plus = integral (1-e^{-x/a}) M(dx), the normalized
// jump-size weights (M1), the exponentially tilted mixing measure (M2), and
// the constants K_a (stable-normalized activity) and C_g used by the
// rejection samplers.

#include <poismix/levy.hpp>
#include <poismix/quadrature.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace poismix {

// log of ell_k; log-space throughout since (x/a)^k overflows quickly.
inline double log_ell_k(const LevySpec& spec, double a, long long k) {
    if (!(a > 0.0)) throw std::invalid_argument("ell_k: a must be > 0");
    if (k < 1) throw std::invalid_argument("ell_k: k must be >= 1");
    double kk = static_cast<double>(k);
    switch (spec.family()) {
        case Family::Cts: {
            // c l^alpha a^-alpha Gamma(k-alpha) (1+a/l)^{alpha-k}
            double al = spec.alpha();
            return std::log(spec.c()) + al * std::log(spec.l()) - al * std::log(a) +
                   std::lgamma(kk - al) + (al - kk) * std::log1p(a / spec.l());
        }
        case Family::PointMass: {
            double r = spec.pm_atom() / a;
            return std::log(spec.pm_lambda()) - r + kk * std::log(r);
        }
        case Family::Pt: {
            // eta a^-alpha Gamma(k-alpha) integral (1+u)^{-alpha-l-2} u^l (1+ua)^{alpha-k} du
            // with eta/B = c (alpha+l)(alpha+l+1); mass of the u-integrand sits
            // near u ~ 1/(k a) for large k, handled by the log substitution.
            double al = spec.alpha();
            double l = spec.l();
            double q = al + l + 2.0;
            QuadratureOptions opt;
            opt.abs_tol = 1e-300;
            opt.rel_tol = 1e-11;
            auto f = [&](double u) {
                return std::exp(-q * std::log1p(u) + l * std::log(u) +
                                (al - kk) * std::log1p(u * a));
            };
            double integral = integrate_from_zero(f, 1.0, opt) + integrate_to_inf(f, 1.0, opt);
            return std::log(spec.c() * (al + l) * (al + l + 1.0)) + std::lgamma(kk - al) -
                   al * std::log(a) + std::log(integral);
        }
        case Family::Custom: {
            double v = spec.weighted_density_integral([&](double x) {
                return std::exp(-x / a + kk * std::log(x / a));
            });
            return std::log(v);
        }
    }
    return -std::numeric_limits<double>::infinity();
}

inline double ell_k(const LevySpec& spec, double a, long long k) {
    return std::exp(log_ell_k(spec, a, k));
}

inline double ell_plus(const LevySpec& spec, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("ell_plus: a must be > 0");
    switch (spec.family()) {
        case Family::Cts: {
            // c l^alpha (Gamma(1-alpha)/alpha) [(1/a+1/l)^alpha - (1/l)^alpha]
            double al = spec.alpha();
            double g = std::tgamma(1.0 - al) / al;
            return spec.c() * std::pow(spec.l(), al) * g *
                   (std::pow(1.0 / a + 1.0 / spec.l(), al) - std::pow(1.0 / spec.l(), al));
        }
        case Family::PointMass:
            return spec.pm_lambda() * -std::expm1(-spec.pm_atom() / a);
        case Family::Pt: {
            // eta/B (Gamma(1-alpha)/alpha) integral (1+u)^{-alpha-l-2} u^l
            //        [(u+1/a)^alpha - u^alpha] du
            double al = spec.alpha();
            double l = spec.l();
            double q = al + l + 2.0;
            QuadratureOptions opt;
            opt.abs_tol = 1e-300;
            opt.rel_tol = 1e-11;
            auto f = [&](double u) {
                return std::exp(-q * std::log1p(u) + l * std::log(u)) *
                       (std::pow(u + 1.0 / a, al) - std::pow(u, al));
            };
            double integral = integrate_from_zero(f, 1.0, opt) + integrate_to_inf(f, 1.0, opt);
            return spec.c() * (al + l) * (al + l + 1.0) * (std::tgamma(1.0 - al) / al) *
                   integral;
        }
        case Family::Custom:
            return spec.weighted_density_integral(
                [&](double x) { return -std::expm1(-x / a); });
    }
    return 0.0;
}

// M2 mixing density at x: (1/ell_plus)(1 - e^{-x/a}) M(dx)/dx.
inline double m2_density(const LevySpec& spec, double a, double x) {
    if (!(a > 0.0) || !(x > 0.0)) throw std::invalid_argument("m2_density: a, x must be > 0");
    return -std::expm1(-x / a) * spec.density(x) / ell_plus(spec, a);
}

struct DiscretizeOptions {
    long long max_k = 1000000;
    bool with_table = true;   // summary mode skips the ell-table (compound
                              // sampling at tiny a needs only the scalars)
};

struct DiscretizedMeasure {
    double a = 0.0;
    std::vector<double> log_ell;  // log ell_k at k = 1..truncation_K (may be empty);
                                  // raw ell_k overflows double near k ~ 170
    double ell_plus = 0.0;
    double K_a = 0.0;             // a^alpha ell_plus / eta, stable families only (else 0)
    double C_g = 0.0;             // ess sup of the tempering function (stable families)
    long long truncation_K = 0;
    double tail_mass = 0.0;       // residual bound on sum_{k>K} ell_k / k!

    bool has_table() const { return !log_ell.empty(); }

    static DiscretizedMeasure build(const LevySpec& spec, double a, double tail_tol,
                                    DiscretizeOptions opts = {}) {
        if (!(a > 0.0)) throw std::invalid_argument("discretize: a must be > 0");
        if (!(tail_tol > 0.0 && tail_tol < 1.0)) {
            throw std::invalid_argument("discretize: tail_tol must lie in (0,1)");
        }
        DiscretizedMeasure dm;
        dm.a = a;
        dm.ell_plus = poismix::ell_plus(spec, a);
        if (spec.has_ts_structure()) {
            dm.K_a = std::pow(a, spec.alpha()) * dm.ell_plus / spec.eta();
            dm.C_g = spec.cg();
        }
        if (!opts.with_table || dm.ell_plus == 0.0) return dm;

        // Residual rule: the partial sums of ell_k/k! increase to ell_plus,
        // so the truncated tail is exactly the remaining gap.
        double target = tail_tol * dm.ell_plus;
        double partial = 0.0;
        for (long long k = 1; k <= opts.max_k; ++k) {
            double le = log_ell_k(spec, a, k);
            dm.log_ell.push_back(le);
            partial += std::exp(le - std::lgamma(static_cast<double>(k) + 1.0));
            double residual = dm.ell_plus - partial;
            if (residual < target) {
                dm.truncation_K = k;
                dm.tail_mass = std::max(residual, 0.0);
                return dm;
            }
        }
        throw std::runtime_error(
            "discretize: truncation cap exceeded before reaching tail tolerance "
            "(a too small for a full table; use summary mode / compound sampling)");
    }

    // Normalized M1 weight of the atom at a*k.
    double m1_weight(long long k) const {
        if (k < 1 || k > truncation_K) return 0.0;
        return std::exp(log_ell[static_cast<std::size_t>(k - 1)] -
                        std::lgamma(static_cast<double>(k) + 1.0)) /
               ell_plus;
    }
};

}  // namespace poismix
