#pragma once

// Error bounds for the lattice approximation, all via Esseen smoothing: a
// charfn-difference estimate integrated up to a cutoff T plus a smoothing
// remainder in 1/T.  Three closed-form families are exposed
//   - smoothing_*: the general O(sqrt(a)) bounds, cutoff T = a^{-1/2},
//     requiring r0 = integral of |charfn| of the limit law,
//   - ts_rate: the tempered-stable O(a^{1/(2-alpha)}) curve with its
//     explicit charfn decay constant A and closed-form cutoff,
//   - nvm_*: the O(a^{1/6}) bounds for the symmetric variance-mixture walk,
// plus bound_without_r0, which drops the r0 factor in exchange for moment-only
// integral estimates and a numerically optimized cutoff.  Exact Kolmogorov
// distances for rate studies evaluate lattice partial sums against an
// inverted reference cdf.

#include <poismix/discretize.hpp>
#include <poismix/inversion.hpp>
#include <poismix/levy.hpp>
#include <poismix/samplers.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poismix {

// Scalar ingredients of the closed-form bounds.  a and p vary per report row;
// the rest depend only on the measure pair and can be reused across a grid.
// zeta2 doubles as the variance-mixture scaling moment (both are E V^2).
struct BoundInputs {
    double a = 0.0;
    double p = 2.0;
    double m1 = std::numeric_limits<double>::quiet_NaN();
    double m2 = std::numeric_limits<double>::quiet_NaN();
    double zeta1 = std::numeric_limits<double>::quiet_NaN();
    double zeta2 = std::numeric_limits<double>::quiet_NaN();
    double zeta3 = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double r0 = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double A = std::numeric_limits<double>::quiet_NaN();
    double delta = 0.5;
    double beta = std::numeric_limits<double>::quiet_NaN();
};

// One evaluated bound (or measured distance) for a report table.
struct BoundRow {
    double a = 0.0;
    double p = std::numeric_limits<double>::infinity();
    std::string formula;
    double value = std::numeric_limits<double>::quiet_NaN();
    double exact = std::numeric_limits<double>::quiet_NaN();
};
using BoundReport = std::vector<BoundRow>;

namespace detail {

inline void require_input(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(std::string("bounds: missing or invalid input: ") + what);
    }
}

inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
inline bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

// Golden-section minimum of a convex-in-log function of the cutoff.
template <class F>
inline double minimize_over_log(F&& f, double t_lo, double t_hi) {
    double u = std::log(t_lo), v = std::log(t_hi);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = v - gr * (v - u), d = u + gr * (v - u);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    while (v - u > 1e-9) {
        if (fc < fd) {
            v = d;
            d = c;
            fd = fc;
            c = v - gr * (v - u);
            fc = f(std::exp(c));
        } else {
            u = c;
            c = d;
            fc = fd;
            d = u + gr * (v - u);
            fd = f(std::exp(d));
        }
    }
    return f(std::exp(0.5 * (u + v)));
}

}  // namespace detail

// Charfn decay constant of a tempered-stable law: |charfn(s)| <= e^{-|s|^A c}
// for |s| > 1, where A = (1-delta) (eta_+ + eta_-) int_0^beta (1-cos x)
// x^{-1-alpha} dx and g >= 1-delta on (0, beta).
struct TsConstants {
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double A = std::numeric_limits<double>::quiet_NaN();
};

inline TsConstants ts_decay_constant(const BilateralSpec& spec, double delta = 0.5) {
    detail::require_input(delta > 0.0 && delta < 1.0, "delta in (0,1)");
    detail::require_input(spec.plus.has_ts_structure() &&
                              (!spec.minus || spec.minus->has_ts_structure()),
                          "tempered-stable spec");
    double alpha = spec.plus.alpha();
    if (spec.minus && std::abs(spec.minus->alpha() - alpha) > 1e-12) {
        throw std::invalid_argument("bounds: sides must share one stability index");
    }
    double beta = spec.plus.beta(delta);
    if (spec.minus) beta = std::min(beta, spec.minus->beta(delta));
    double A = (1.0 - delta) * spec.eta_total() * detail::one_minus_cos_integral(alpha, beta);
    return {alpha, beta, A};
}

// Fill the scalar inputs for a mixture of spec jumps and nu counts.  r0 and
// the decay constants need tempered-stable structure and stay NaN otherwise;
// a is left for the caller to set per evaluation.
inline BoundInputs make_bound_inputs(const BilateralSpec& spec, const NuSpec& nu,
                                     const InversionConfig& cfg = {}, double delta = 0.5) {
    BoundInputs in;
    in.m1 = spec.m1_total();
    in.m2 = spec.m2_total();
    in.zeta1 = nu.zeta1();
    in.zeta2 = nu.zeta2();
    in.zeta3 = nu.zeta3();
    in.gamma = nu.gamma();
    in.delta = delta;
    bool ts = spec.plus.has_ts_structure() && (!spec.minus || spec.minus->has_ts_structure());
    if (ts) {
        in.r0 = r0(spec, cfg);
        bool same_alpha =
            !spec.minus || std::abs(spec.minus->alpha() - spec.plus.alpha()) <= 1e-12;
        if (same_alpha) {
            TsConstants c = ts_decay_constant(spec, delta);
            in.alpha = c.alpha;
            in.beta = c.beta;
            in.A = c.A;
        }
    }
    return in;
}

// Variance-mixture variant: r0 integrates the limit charfn of sqrt(X) W.
inline BoundInputs make_nvm_bound_inputs(const LevySpec& subordinator, const NuSpec& nu,
                                         const InversionConfig& cfg = {}) {
    BoundInputs in;
    Moments mom = subordinator.moments();
    in.m1 = mom.m1;
    in.m2 = mom.m2;
    in.zeta1 = nu.zeta1();
    in.zeta2 = nu.zeta2();
    in.zeta3 = nu.zeta3();
    in.gamma = nu.gamma();
    if (subordinator.has_ts_structure()) {
        in.r0 = r0_nvm(subordinator, cfg);
        in.alpha = subordinator.alpha();
    }
    return in;
}

// sup-norm bound sqrt(a) ((1/pi) e^{0.5 m1 z2/g} m1 z2/(2g) + 12/pi^2) r0.
inline double smoothing_linf(const BoundInputs& in) {
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta2), "zeta2");
    detail::require_input(detail::finite_pos(in.gamma), "gamma");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    double e = std::exp(0.5 * in.m1 * in.zeta2 / in.gamma);
    return std::sqrt(in.a) *
           (e * in.m1 * in.zeta2 / (2.0 * in.gamma * M_PI) + 12.0 / (M_PI * M_PI)) * in.r0;
}

// L1 constant C_a; the L1 bound is C_a sqrt(a) and decreasing a only shrinks
// the sqrt(a) terms inside.
inline double smoothing_l1_constant(const BoundInputs& in) {
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.m2), "m2");
    detail::require_input(detail::finite_nonneg(in.zeta1), "zeta1");
    detail::require_input(detail::finite_nonneg(in.zeta2), "zeta2");
    detail::require_input(detail::finite_pos(in.gamma), "gamma");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    double ra = std::sqrt(in.a);
    double e = std::exp(0.5 * in.m1 * in.zeta2 / in.gamma);
    double core = (ra + 1.0) * e * in.m1 + in.zeta1 / in.gamma * in.m2 + 2.0 * ra * in.m1 +
                  e * in.m1 * in.m1 * in.zeta1 / in.gamma;
    return core * in.zeta2 / (2.0 * in.gamma) * std::sqrt(in.r0) + 4.0 * M_PI;
}

inline double smoothing_l1(const BoundInputs& in) {
    return smoothing_l1_constant(in) * std::sqrt(in.a);
}

// L^p bound: the direct display for p >= 2, and the chain
// |F_a - F|_p <= |F_a - F|_1^{1/p} through the L1 constant for p in [1,2).
inline double smoothing_lp(const BoundInputs& in, double p) {
    detail::require_input(std::isfinite(p) && p >= 1.0, "p in [1,inf)");
    if (p < 2.0) return std::pow(smoothing_l1(in), 1.0 / p);
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta2), "zeta2");
    detail::require_input(detail::finite_pos(in.gamma), "gamma");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    double e = std::exp(0.5 * in.m1 * in.zeta2 / in.gamma);
    return std::sqrt(in.a) * e * in.m1 * in.zeta2 / (4.0 * in.gamma) *
               std::pow(in.r0, 1.0 - 1.0 / p) +
           4.0 * (p - 1.0) * std::pow(in.a, 0.5 / p);
}

// Tempered-stable sup-norm rate: three terms in a, a, and a^{1/(2-alpha)},
// evaluated at the closed-form cutoff t_star.  The tail integral
// int_1^inf s e^{-s^alpha A/2} ds is Gamma(2/alpha, A/2) / (alpha (A/2)^{2/alpha}).
struct TsRateResult {
    double bound = std::numeric_limits<double>::quiet_NaN();
    double A = std::numeric_limits<double>::quiet_NaN();
    double t_star = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double term1 = std::numeric_limits<double>::quiet_NaN();
    double term2 = std::numeric_limits<double>::quiet_NaN();
    double term3 = std::numeric_limits<double>::quiet_NaN();
};

inline TsRateResult ts_rate(const BilateralSpec& spec, const BoundInputs& in) {
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta2), "zeta2");
    detail::require_input(detail::finite_pos(in.gamma), "gamma");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    TsConstants c = ts_decay_constant(spec, in.delta);
    detail::require_input(detail::finite_pos(c.A), "A");
    double ex = 1.0 / (2.0 - c.alpha);
    double half = 0.5 * c.A;
    double ratio = in.m1 * in.zeta2 / (c.A * in.gamma);
    TsRateResult r;
    r.A = c.A;
    r.beta = c.beta;
    r.t_star = std::pow(in.a, -ex) * std::pow(1.0 / ratio, ex);
    r.term1 = in.a * in.m1 / M_PI * std::exp(in.a * in.m1 * in.zeta2 / in.gamma) * in.zeta2 /
              in.gamma;
    double tail = boost::math::tgamma(2.0 / c.alpha, half) /
                  (c.alpha * std::pow(half, 2.0 / c.alpha));
    r.term2 = in.a * in.m1 / M_PI * in.zeta2 / in.gamma * tail;
    r.term3 = std::pow(in.a, ex) * std::pow(ratio, ex) * 12.0 * in.r0 / (M_PI * M_PI);
    r.bound = r.term1 + r.term2 + r.term3;
    return r;
}

// r0-free route: assemble the smoothing bounds from moment-only integral
// estimates of the charfn difference and minimize the cutoff numerically.
// p >= 2 uses (1/2)(int |diff/s|^q)^{1/q} + 4(p-1)/T^{1/p} with q = p/(p-1);
// the L1 route sums the three quadratic estimates plus 4 pi / T and serves
// p in [1,2) through the 1/p-th power (rates a^{1/(2p)} and a^{2/(5p)}).
inline double bound_without_r0(const BoundInputs& in, double p) {
    detail::require_input(std::isfinite(p) && p >= 1.0, "p in [1,inf)");
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta2), "zeta2");
    detail::require_input(detail::finite_pos(in.gamma), "gamma");
    const double a = in.a, g = in.gamma, m1 = in.m1, m2 = in.m2;
    const double z1 = in.zeta1, z2 = in.zeta2;
    double t_lo = 1e-6;
    double t_hi = std::max(1e6, 1e4 / std::sqrt(a));
    auto l1_total = [&](double t) {
        double rt = std::sqrt(t), rt3 = t * rt;
        double i2 = a * rt3 * z2 * m1 / (g * std::sqrt(6.0));
        double j2 = a * rt * z2 * m1 / (g * std::sqrt(2.0));
        double k2 = a * std::sqrt(2.0) * z2 *
                    (rt3 * z1 * m2 / (2.0 * std::sqrt(3.0) * g * g) + rt * m1 / g +
                     m1 * m1 * z1 * rt3 / (2.0 * std::sqrt(3.0) * g * g));
        return i2 + k2 + j2 + 4.0 * M_PI / t;
    };
    bool have_l1 = detail::finite_nonneg(m2) && detail::finite_nonneg(z1);
    if (p < 2.0) {
        detail::require_input(have_l1, "m2 and zeta1");
        return std::pow(detail::minimize_over_log(l1_total, t_lo, t_hi), 1.0 / p);
    }
    double q = p / (p - 1.0);
    auto direct = [&](double t) {
        double iq = a * std::pow(t, 1.0 + 1.0 / q) * std::pow(2.0, 1.0 / q - 1.0) /
                    (g * std::pow(q + 1.0, 1.0 / q)) * z2 * m1;
        return 0.5 * iq + 4.0 * (p - 1.0) / std::pow(t, 1.0 / p);
    };
    double b = detail::minimize_over_log(direct, t_lo, t_hi);
    if (have_l1) {
        b = std::min(b, std::pow(detail::minimize_over_log(l1_total, t_lo, t_hi), 1.0 / p));
    }
    return b;
}

// Variance-mixture bounds; the scaling moment E V^2 enters as zeta2 and r0
// integrates the limit charfn of sqrt(X) W.
inline double nvm_linf(const BoundInputs& in) {
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta3), "zeta3");
    detail::require_input(detail::finite_pos(in.zeta2), "zeta2");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    double gp = std::pow(in.zeta2, -1.5);
    double e = std::exp(gp * in.zeta3 * in.m1 / 6.0);
    return std::pow(in.a, 1.0 / 6.0) *
           (gp * e * in.zeta3 * in.m1 / (6.0 * M_PI) + 12.0 / (M_PI * M_PI)) * in.r0;
}

inline double nvm_lp(const BoundInputs& in, double p) {
    detail::require_input(std::isfinite(p) && p >= 2.0, "p in [2,inf)");
    detail::require_input(detail::finite_pos(in.a), "a");
    detail::require_input(detail::finite_nonneg(in.m1), "m1");
    detail::require_input(detail::finite_nonneg(in.zeta3), "zeta3");
    detail::require_input(detail::finite_pos(in.zeta2), "zeta2");
    detail::require_input(detail::finite_nonneg(in.r0), "r0");
    double gp = std::pow(in.zeta2, -1.5);
    double e = std::exp(gp * in.zeta3 * in.m1 / 6.0);
    return std::pow(in.a, 1.0 / 6.0) / 12.0 * gp * e * in.zeta3 * in.m1 *
               std::pow(in.r0, 1.0 - 1.0 / p) +
           4.0 * (p - 1.0) * std::pow(in.a, 1.0 / (6.0 * p));
}

struct NvmBounds {
    double linf = std::numeric_limits<double>::quiet_NaN();
    double lp = std::numeric_limits<double>::quiet_NaN();
};

inline NvmBounds nvm_bounds(const BoundInputs& in) {
    NvmBounds b;
    b.linf = nvm_linf(in);
    if (in.p >= 2.0 && std::isfinite(in.p)) b.lp = nvm_lp(in, in.p);
    return b;
}

// Exact Kolmogorov distance between the lattice law and the inverted limit
// cdf.  The lattice cdf is a step function, so the sup is attained at lattice
// points or their left limits; midpoints are probed as a guard.  value is
// exact up to grid_error (reference accuracy plus the tail cut).
struct ExactDistance {
    double value = std::numeric_limits<double>::quiet_NaN();
    double grid_error = std::numeric_limits<double>::quiet_NaN();
};

struct ExactDistanceOptions {
    double tail_eps = 1e-6;      // extend until both cdfs are this close to their limits
    double pmf_tail_tol = 1e-8;  // lattice weight-table build tolerance
    double phi_cut = 1e-10;      // reference inversion node cutoff
    InversionConfig inversion = {};
    const ReferenceCdf* reference = nullptr;  // reuse one inverted cdf across an a-grid
};

inline ReferenceCdf reference_cdf(const BilateralSpec& spec,
                                  const ExactDistanceOptions& opts = {}) {
    ReferenceCdfOptions ro;
    ro.phi_cut = opts.phi_cut;
    ro.tail_prob = std::min(1e-8, 0.01 * opts.tail_eps);
    BilateralSpec copy = spec;
    return ReferenceCdf::build([copy](double s) { return copy.charfn(s); }, opts.inversion, ro);
}

inline ReferenceCdf reference_cdf_nvm(const LevySpec& subordinator,
                                      const ExactDistanceOptions& opts = {}) {
    ReferenceCdfOptions ro;
    ro.phi_cut = opts.phi_cut;
    ro.tail_prob = std::min(1e-8, 0.01 * opts.tail_eps);
    LevySpec copy = subordinator;
    return ReferenceCdf::build([copy](double s) { return charfn_nvm_limit(copy, s); },
                               opts.inversion, ro);
}

namespace detail {

// Extend a lattice pmf until its mass is within eps of saturation; returns
// false when the table underflowed first (remaining deficit stays in play).
inline bool extend_to_mass(PmfBuilder& b, double eps) {
    while (b.cum(b.size() - 1) < 1.0 - eps) {
        if (!b.extend()) return false;
    }
    return true;
}

}  // namespace detail

// Distance between two lattice laws on the same grid (tails count through
// the final partial sums).
inline ExactDistance exact_kolmogorov(const PmfTable& f, const PmfTable& g) {
    if (f.a != g.a) {
        throw std::invalid_argument("exact_kolmogorov: tables live on different lattices");
    }
    if (f.cumulative.empty() || g.cumulative.empty()) {
        throw std::invalid_argument("exact_kolmogorov: empty pmf table");
    }
    std::size_t n = std::max(f.cumulative.size(), g.cumulative.size());
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double cf = k < f.cumulative.size() ? f.cumulative[k] : f.cumulative.back();
        double cg = k < g.cumulative.size() ? g.cumulative[k] : g.cumulative.back();
        d = std::max(d, std::abs(cf - cg));
    }
    return {d, 0.0};
}

// Lattice mixture law against the inverted limit law.  Unit Poisson counts
// only; the symmetric walk goes through exact_kolmogorov_nvm.
inline ExactDistance exact_kolmogorov(const BilateralSpec& spec, const NuSpec& nu, double a,
                                      const ExactDistanceOptions& opts = {}) {
    if (!(a > 0.0)) throw std::invalid_argument("exact_kolmogorov: a must be > 0");
    if (nu.kind() != NuSpec::Kind::UnitPoisson) {
        throw std::invalid_argument(
            "exact_kolmogorov: counts must be unit Poisson; use exact_kolmogorov_nvm for the "
            "symmetric walk");
    }
    std::optional<ReferenceCdf> own;
    const ReferenceCdf* ref = opts.reference;
    if (!ref) {
        own.emplace(reference_cdf(spec, opts));
        ref = &*own;
    }
    double d = 0.0;
    if (!spec.minus) {
        DiscretizedMeasure dm = DiscretizedMeasure::build(spec.plus, a, opts.pmf_tail_tol);
        detail::PmfBuilder b(dm);
        bool saturated = detail::extend_to_mass(b, 0.5 * opts.tail_eps);
        double prev = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            double x = a * static_cast<double>(k);
            double fk = ref->cdf(x);
            double cum = b.cum(k);
            d = std::max(d, std::abs(cum - fk));
            d = std::max(d, std::abs(prev - fk));
            d = std::max(d, std::abs(cum - ref->cdf(x + 0.5 * a)));
            prev = cum;
        }
        // Underflowed tables saturate below one while the limit cdf reaches it.
        if (!saturated) d = std::max(d, 1.0 - b.cum(b.size() - 1));
    } else {
        DiscretizedMeasure dp = DiscretizedMeasure::build(spec.plus, a, opts.pmf_tail_tol);
        DiscretizedMeasure dm = DiscretizedMeasure::build(*spec.minus, a, opts.pmf_tail_tol);
        detail::PmfBuilder bp(dp);
        detail::PmfBuilder bm(dm);
        bool sat_p = detail::extend_to_mass(bp, 0.25 * opts.tail_eps);
        bool sat_m = detail::extend_to_mass(bm, 0.25 * opts.tail_eps);
        std::size_t np = bp.size(), nm = bm.size();
        if (static_cast<double>(np) * static_cast<double>(nm) > 4e8) {
            throw std::runtime_error(
                "exact_kolmogorov: bilateral lattice too fine; increase a or tail_eps");
        }
        // cdf of the difference at lattice index j, weights over the minus side.
        auto cdf_at = [&](long long j) {
            long double acc = 0.0L;
            for (std::size_t m = 0; m < nm; ++m) {
                long long t = j + static_cast<long long>(m);
                if (t < 0) continue;
                std::size_t tp = std::min<std::size_t>(static_cast<std::size_t>(t), np - 1);
                acc += static_cast<long double>(bm.p(m)) * bp.cum(tp);
            }
            return static_cast<double>(acc);
        };
        long long j_lo = -static_cast<long long>(nm) + 1;
        long long j_hi = static_cast<long long>(np) - 1;
        double prev = cdf_at(j_lo - 1);
        for (long long j = j_lo; j <= j_hi; ++j) {
            double x = a * static_cast<double>(j);
            double fj = ref->cdf(x);
            double cum = cdf_at(j);
            d = std::max(d, std::abs(cum - fj));
            d = std::max(d, std::abs(prev - fj));
            d = std::max(d, std::abs(cum - ref->cdf(x + 0.5 * a)));
            prev = cum;
        }
        if (!sat_p || !sat_m) {
            d = std::max(d, 1.0 - bp.cum(np - 1) * bm.cum(nm - 1));
        }
    }
    return {d, opts.tail_eps + 2e-6};
}

inline ExactDistance exact_kolmogorov(const LevySpec& spec, const NuSpec& nu, double a,
                                      const ExactDistanceOptions& opts = {}) {
    return exact_kolmogorov(BilateralSpec{spec, std::nullopt}, nu, a, opts);
}

// Variance-mixture walk against its limit law sqrt(X) W.  The lattice pmf
// comes from the wrapped charfn: with step = sqrt(a/gamma*) the pmf at k is
// (1/pi) int_0^pi cos(uk) charfn_mixture(u/step) du, a smooth periodic
// integrand that the trapezoid rule nails.
inline ExactDistance exact_kolmogorov_nvm(const LevySpec& subordinator, const NuSpec& nu,
                                          double a, const ExactDistanceOptions& opts = {}) {
    if (!(a > 0.0)) throw std::invalid_argument("exact_kolmogorov_nvm: a must be > 0");
    if (!nu.symmetric()) {
        throw std::invalid_argument("exact_kolmogorov_nvm: mixing law must be symmetric");
    }
    std::optional<ReferenceCdf> own;
    const ReferenceCdf* ref = opts.reference;
    if (!ref) {
        own.emplace(reference_cdf_nvm(subordinator, opts));
        ref = &*own;
    }
    double step = std::sqrt(a / nu.gamma_star());
    double sigma_k = std::sqrt(std::max(subordinator.moments().m1, 0.0)) / step;
    std::size_t k_hi = static_cast<std::size_t>(std::ceil(8.0 * sigma_k + 16.0));
    std::vector<double> pmf;
    double total = 0.0;
    for (int round = 0; round < 8; ++round) {
        std::size_t n = std::max<std::size_t>(4096, 8 * k_hi);
        std::vector<double> w(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            double u = M_PI * static_cast<double>(j) / static_cast<double>(n);
            w[j] = charfn_nvm_mixture(subordinator, nu, a, u / step).real();
        }
        pmf.assign(k_hi + 1, 0.0);
        total = 0.0;
        for (std::size_t k = 0; k <= k_hi; ++k) {
            double acc = 0.5 * w[0] + 0.5 * (k % 2 == 0 ? w[n] : -w[n]);
            for (std::size_t j = 1; j < n; ++j) {
                acc += std::cos(static_cast<double>(k) * M_PI * static_cast<double>(j) /
                                static_cast<double>(n)) *
                       w[j];
            }
            pmf[k] = std::max(0.0, acc / static_cast<double>(n));
            total += (k == 0 ? 1.0 : 2.0) * pmf[k];
        }
        if (1.0 - total <= 0.5 * opts.tail_eps) break;
        k_hi *= 2;
    }
    k_hi = pmf.size() - 1;
    double d = 0.0;
    double prev = 0.5 * std::max(0.0, 1.0 - total);
    double cum = prev;
    for (long long j = -static_cast<long long>(k_hi); j <= static_cast<long long>(k_hi); ++j) {
        cum += pmf[static_cast<std::size_t>(j < 0 ? -j : j)];
        double x = step * static_cast<double>(j);
        double fj = ref->cdf(x);
        d = std::max(d, std::abs(cum - fj));
        d = std::max(d, std::abs(prev - fj));
        d = std::max(d, std::abs(cum - ref->cdf(x + 0.5 * step)));
        prev = cum;
    }
    return {d, opts.tail_eps + 2e-6};
}

}  // namespace poismix
