#pragma once

// Levy measure specifications for finite-variation, driftless jump laws on
// (0, inf), their bilateral combinations, and the mixing laws used by the
// scaled Poisson mixture.  Everything downstream (discretization, samplers,
// bounds, inversion) consumes the interface defined here.
//
// Families:
//   cts        tempered stable, exponential tempering  eta * e^{-x/l} * x^{-1-alpha}
//   pt         tempered stable, power tempering        eta * gt(x)     * x^{-1-alpha}
//              with gt the Beta-normalized completely monotone kernel
//              integral of e^{-xu} (1+u)^{-alpha-l-2} u^l du / B(l+1, alpha+1),
//              so gt(0+) = 1 and eta = c Gamma(l+1) Gamma(alpha+1) / Gamma(alpha+l)
//   pointmass  lambda * delta_atom (no stable structure; lattice algorithms only)
//   custom     tabulated density, log-log interpolated
//
// The tempered-stable families expose (alpha, eta, gt, C_g, beta(delta)) for
// the rejection samplers and the rate constants; the other families do not.

#include <poismix/quadrature.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poismix {

using Complex = std::complex<double>;

struct Moments {
    double m1 = 0.0;  // integral of x      M(dx)
    double m2 = 0.0;  // integral of x^2    M(dx), may be +inf
};

enum class Family { Cts, Pt, PointMass, Custom };

namespace detail {

// Monotone-in-practice cubic Hermite table for log gt(e^t) with exact nodal
// derivatives; relative error ~1e-10 at 2048 nodes over 12 decades.
struct PtKernelTable {
    double alpha = 0.0, l = 0.0;
    double log_beta_norm = 0.0;   // log B(l+1, alpha+1)
    double slope0 = 0.0;          // gt'(0) = -B(l+2, alpha)/B(l+1, alpha+1)
    double t_lo = 0.0, t_hi = 0.0, dt = 0.0;
    std::vector<double> val;      // log gt at node
    std::vector<double> der;      // d log gt / d t at node

    // Kernel integral of e^{-xu} (1+u)^{-alpha-l-2} u^l du evaluated in the
    // substituted variable v = x u, where the integrand's mass stays at
    // v = O(l+1) for every x:  x^{-l-1-p} * integral e^{-v} v^{l+p} (1+v/x)^{-q} dv.
    // p = 0 gives the kernel, p = 1 its negated x-derivative.
    double scaled_integral(double x, double p) const {
        QuadratureOptions opt;
        opt.abs_tol = 1e-300;  // relative control only; values span decades
        opt.rel_tol = 1e-12;
        double q = alpha + l + 2.0;
        double lp = l + p;
        auto f = [&](double v) {
            return std::exp(-v - q * std::log1p(v / x) + lp * std::log(v));
        };
        return integrate_from_zero(f, 1.0, opt) + integrate_to_inf(f, 1.0, opt);
    }

    void build(double alpha_in, double l_in) {
        alpha = alpha_in;
        l = l_in;
        log_beta_norm = std::lgamma(l + 1.0) + std::lgamma(alpha + 1.0) -
                        std::lgamma(alpha + l + 2.0);
        slope0 = -std::exp(std::lgamma(l + 2.0) + std::lgamma(alpha) -
                           std::lgamma(alpha + l + 2.0) - log_beta_norm);
        t_lo = std::log(1e-8);
        t_hi = std::log(1e4);
        const int n = 2048;
        dt = (t_hi - t_lo) / (n - 1);
        val.resize(n);
        der.resize(n);
        for (int i = 0; i < n; ++i) {
            double x = std::exp(t_lo + i * dt);
            double i0 = scaled_integral(x, 0.0);  // raw = x^{-l-1} i0
            double i1 = scaled_integral(x, 1.0);  // raw' = -x^{-l-2} i1
            val[i] = -(l + 1.0) * std::log(x) + std::log(i0) - log_beta_norm;
            der[i] = -i1 / i0;  // d log g / d log x = x g'/g
        }
    }

    // log gt(x); exact asymptotics outside the table.
    double log_gt(double x) const {
        double t = std::log(x);
        if (t <= t_lo) {
            // gt(x) = 1 + slope0 * x + O(x^2); slope0 * x <= 1e-8.
            return std::log1p(slope0 * x);
        }
        if (t >= t_hi) {
            // Watson lemma, three terms of the u -> 0 expansion of
            // (1+u)^{-q} u^l about the exponential scale 1/x.
            double q = alpha + l + 2.0;
            double lead = std::lgamma(l + 1.0) - (l + 1.0) * t;
            double corr = 1.0 - q * (l + 1.0) / x +
                          0.5 * q * (q + 1.0) * (l + 1.0) * (l + 2.0) / (x * x);
            return lead + std::log(corr) - log_beta_norm;
        }
        double s = (t - t_lo) / dt;
        int i = std::min(static_cast<int>(s), static_cast<int>(val.size()) - 2);
        double u = s - i;
        double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        double h10 = u * (1.0 - u) * (1.0 - u);
        double h01 = u * u * (3.0 - 2.0 * u);
        double h11 = u * u * (u - 1.0);
        return h00 * val[i] + h01 * val[i + 1] + dt * (h10 * der[i] + h11 * der[i + 1]);
    }
};

// Log-log interpolated tabulated density with power extrapolation below the
// first node and hard zero above the last.
struct CustomTable {
    std::vector<double> logx;
    std::vector<double> logd;
    double slope_lo = 0.0;

    double density(double x) const {
        if (x <= 0.0) return 0.0;
        double t = std::log(x);
        if (t >= logx.back()) return 0.0;
        if (t <= logx.front()) {
            return std::exp(logd.front() + slope_lo * (t - logx.front()));
        }
        auto it = std::upper_bound(logx.begin(), logx.end(), t);
        std::size_t i = static_cast<std::size_t>(it - logx.begin()) - 1;
        double w = (t - logx[i]) / (logx[i + 1] - logx[i]);
        return std::exp((1.0 - w) * logd[i] + w * logd[i + 1]);
    }

    // integral over (lo, inf) of f(x) density(x) dx, split at the table
    // breakpoints so each quadrature panel sees a smooth integrand (the
    // interpolant has kinks at every node, which defeats global adaption).
    template <class F>
    double weighted_integral(F&& f, double lo = 0.0) const {
        double total = 0.0;
        double x0 = std::exp(logx.front());
        QuadratureOptions seg_opt;
        seg_opt.abs_tol = 1e-300;
        seg_opt.rel_tol = 1e-9;
        seg_opt.max_depth = 20;
        seg_opt.max_panels = 64;
        // Power-law head below the first node.
        if (lo < x0) {
            auto head = [&](double x) { return f(x) * density(x); };
            QuadratureOptions head_opt;
            head_opt.abs_tol = 1e-300;
            head_opt.rel_tol = 1e-10;
            total += (lo == 0.0) ? integrate_from_zero(head, x0, head_opt)
                                 : integrate(head, lo, x0, head_opt);
        }
        for (std::size_t i = 0; i + 1 < logx.size(); ++i) {
            double a = std::exp(logx[i]);
            double b = std::exp(logx[i + 1]);
            if (b <= lo) continue;
            a = std::max(a, lo);
            if (a >= b) continue;
            total += integrate([&](double x) { return f(x) * density(x); }, a, b, seg_opt);
        }
        return total;
    }
};

}  // namespace detail

class LevySpec {
public:
    static LevySpec cts(double c, double l, double alpha) {
        validate_ts(c, l, alpha, "cts");
        LevySpec s;
        s.family_ = Family::Cts;
        s.c_ = c;
        s.l_ = l;
        s.alpha_ = alpha;
        s.eta_ = c * std::pow(l, alpha);
        return s;
    }

    static LevySpec pt(double c, double l, double alpha) {
        validate_ts(c, l, alpha, "pt");
        LevySpec s;
        s.family_ = Family::Pt;
        s.c_ = c;
        s.l_ = l;
        s.alpha_ = alpha;
        s.eta_ = c * std::exp(std::lgamma(l + 1.0) + std::lgamma(alpha + 1.0) -
                              std::lgamma(alpha + l));
        s.pt_ = std::make_shared<detail::PtKernelTable>();
        s.pt_->build(alpha, l);
        return s;
    }

    static LevySpec point_mass(double lambda, double atom) {
        if (!(lambda > 0.0)) throw std::invalid_argument("pointmass: lambda must be > 0");
        if (!(atom > 0.0)) throw std::invalid_argument("pointmass: atom must be > 0");
        LevySpec s;
        s.family_ = Family::PointMass;
        s.c_ = lambda;
        s.l_ = atom;
        return s;
    }

    static LevySpec custom(std::vector<double> x, std::vector<double> density) {
        if (x.size() != density.size() || x.size() < 2) {
            throw std::invalid_argument("custom: need matching x/density arrays, length >= 2");
        }
        auto tab = std::make_shared<detail::CustomTable>();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0) || !(density[i] > 0.0)) {
                throw std::invalid_argument("custom: nodes must be strictly positive");
            }
            if (i > 0 && !(x[i] > x[i - 1])) {
                throw std::invalid_argument("custom: x nodes must be strictly increasing");
            }
            tab->logx.push_back(std::log(x[i]));
            tab->logd.push_back(std::log(density[i]));
        }
        tab->slope_lo = (tab->logd[1] - tab->logd[0]) / (tab->logx[1] - tab->logx[0]);
        if (!(tab->slope_lo > -2.0)) {
            throw std::invalid_argument(
                "custom: density grows faster than x^-2 toward 0; x M(dx) not integrable");
        }
        LevySpec s;
        s.family_ = Family::Custom;
        s.custom_ = std::move(tab);
        return s;
    }

    Family family() const { return family_; }
    bool has_ts_structure() const { return family_ == Family::Cts || family_ == Family::Pt; }
    double alpha() const {
        require_ts("alpha");
        return alpha_;
    }
    double eta() const {
        require_ts("eta");
        return eta_;
    }
    double c() const { return c_; }
    double l() const { return l_; }
    double pm_lambda() const { return c_; }
    double pm_atom() const { return l_; }

    // Tabulated density nodes back on the linear scale (serialization).
    std::vector<double> custom_x() const {
        require_custom("custom_x");
        std::vector<double> x(custom_->logx.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(custom_->logx[i]);
        return x;
    }
    std::vector<double> custom_density() const {
        require_custom("custom_density");
        std::vector<double> d(custom_->logd.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::exp(custom_->logd[i]);
        return d;
    }

    // Essential sup of the normalized tempering function; both shipped
    // kernels decrease from gt(0+) = 1.
    double cg() const {
        require_ts("cg");
        return 1.0;
    }

    double log_gt(double x) const {
        require_ts("gt");
        if (x <= 0.0) return 0.0;
        if (family_ == Family::Cts) return -x / l_;
        return pt_->log_gt(x);
    }
    double gt(double x) const { return std::exp(log_gt(x)); }

    // Largest point below which the tempering function stays >= 1 - delta.
    double beta(double delta) const {
        require_ts("beta");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("beta: delta in (0,1)");
        double target = std::log1p(-delta);
        if (family_ == Family::Cts) return -l_ * target;
        double lo = 0.0, hi = 1.0;
        while (pt_->log_gt(hi) > target) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (pt_->log_gt(mid) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Levy density at x > 0; the point-mass family has none.
    double density(double x) const {
        if (x <= 0.0) return 0.0;
        switch (family_) {
            case Family::Cts:
            case Family::Pt:
                return eta_ * std::exp(log_gt(x) - (1.0 + alpha_) * std::log(x));
            case Family::PointMass:
                throw std::domain_error("pointmass measure has no density");
            case Family::Custom:
                return custom_->density(x);
        }
        return 0.0;
    }

    Moments moments() const {
        Moments m;
        switch (family_) {
            case Family::Cts:
                m.m1 = c_ * l_ * std::tgamma(1.0 - alpha_);
                m.m2 = c_ * l_ * l_ * std::tgamma(2.0 - alpha_);
                return m;
            case Family::Pt:
                m.m1 = c_ * std::tgamma(1.0 - alpha_);
                m.m2 = (alpha_ + l_ > 1.0)
                           ? 2.0 * c_ * std::tgamma(2.0 - alpha_) / (alpha_ + l_ - 1.0)
                           : std::numeric_limits<double>::infinity();
                return m;
            case Family::PointMass:
                m.m1 = c_ * l_;
                m.m2 = c_ * l_ * l_;
                return m;
            case Family::Custom:
                m.m1 = custom_->weighted_integral([](double x) { return x; });
                m.m2 = custom_->weighted_integral([](double x) { return x * x; });
                return m;
        }
        return m;
    }

    // Mass of (x, inf); used for tail blending of reference cdfs.
    double tail_mass(double x) const {
        if (x <= 0.0) throw std::domain_error("tail_mass: x must be > 0 (total mass may be infinite)");
        switch (family_) {
            case Family::PointMass:
                return x < l_ ? c_ : 0.0;
            case Family::Cts: {
                // c Gamma(-alpha, x/l) via the recurrence
                // Gamma(-a, w) = (w^-a e^-w - Gamma(1-a, w)) / a.
                double w = x / l_;
                double g = (std::pow(w, -alpha_) * std::exp(-w) -
                            boost::math::tgamma(1.0 - alpha_, w)) /
                           alpha_;
                return c_ * g;
            }
            case Family::Custom:
                return custom_->weighted_integral([](double) { return 1.0; }, x);
            default:
                return integrate_to_inf([this](double y) { return density(y); }, x,
                                        QuadratureOptions{1e-14, 1e-10, 48, 200000},
                                        std::max(x, 1.0));
        }
    }

    // integral of (e^{-z x} - 1) M(dx) for Re z >= 0 (principal branch).
    // This single transform yields the limit cumulant (z = -is), the mixture
    // characteristic exponent, and the squared-scale NVM transforms.
    Complex laplace_exponent(Complex z) const {
        if (z == Complex(0.0, 0.0)) return {0.0, 0.0};
        if (!(z.real() >= 0.0)) throw std::domain_error("laplace_exponent: Re z must be >= 0");
        switch (family_) {
            case Family::Cts: {
                // c l^alpha Gamma(-alpha) [ (1/l + z)^alpha - (1/l)^alpha ]
                double gneg = -std::tgamma(1.0 - alpha_) / alpha_;
                Complex base = std::pow(1.0 / l_ + z, alpha_) - std::pow(1.0 / l_, alpha_);
                return eta_ * gneg * base;
            }
            case Family::Pt: {
                // eta Gamma(-alpha) integral (1+u)^{-alpha-l-2} u^l
                //                            [(u+z)^alpha - u^alpha] du / B(l+1, alpha+1)
                // Trapezoid rule in y = log u: the integrand is analytic in
                // the strip |Im y| < pi/2 (nearest branch point sits at
                // u = -z), so the error decays like exp(-pi^2/h).  The
                // window covers the exp((l+1)y) rise on the left and the
                // exp(-2y) tail past the |z| crossover on the right.
                double q = alpha_ + l_ + 2.0;
                double scale = c_ * std::exp(std::lgamma(alpha_ + l_ + 2.0) -
                                             std::lgamma(alpha_ + l_)) *
                               (-std::tgamma(1.0 - alpha_) / alpha_);
                double h = 0.28;
                double y_lo = -42.0 / (l_ + 1.0);
                double y_hi = std::log1p(std::abs(z)) + 22.0;
                auto n = static_cast<long long>(std::ceil((y_hi - y_lo) / h));
                Complex acc(0.0, 0.0);
                for (long long j = 0; j <= n; ++j) {
                    double y = y_lo + h * static_cast<double>(j);
                    double u = std::exp(y);
                    double env = std::exp((l_ + 1.0) * y - q * std::log1p(u));
                    Complex diff = std::pow(u + z, alpha_) - std::pow(u, alpha_);
                    double w = (j == 0 || j == n) ? 0.5 : 1.0;
                    acc += (w * env) * diff;
                }
                return scale * h * acc;
            }
            case Family::PointMass:
                return c_ * (std::exp(-z * l_) - 1.0);
            case Family::Custom: {
                // e^{-rx}cos(ix) - 1 rearranged to avoid cancellation at 0,
                // where the density blows up like x^{-1-alpha}.
                double vr = custom_->weighted_integral([&](double x) {
                    double si = std::sin(0.5 * z.imag() * x);
                    return std::expm1(-z.real() * x) * std::cos(z.imag() * x) -
                           2.0 * si * si;
                });
                double vi = 0.0;
                if (z.imag() != 0.0) {
                    vi = custom_->weighted_integral([&](double x) {
                        return -std::exp(-z.real() * x) * std::sin(z.imag() * x);
                    });
                }
                return {vr, vi};
            }
        }
        return {0.0, 0.0};
    }

    // Limit cumulant C(s) = integral of (e^{isx} - 1) M(dx).
    Complex cumulant(double s) const { return laplace_exponent(Complex(0.0, -s)); }

    // integral over (lo, inf) of f(x) M(dx) by quadrature; tabulated densities
    // integrate segment by segment to sidestep their interpolation kinks.
    template <class F>
    double weighted_density_integral(F&& f, double lo = 0.0) const {
        if (family_ == Family::Custom) {
            return custom_->weighted_integral(std::forward<F>(f), lo);
        }
        QuadratureOptions opt;
        opt.abs_tol = 1e-13;
        opt.rel_tol = 1e-10;
        auto g = [&](double x) { return f(x) * density(x); };
        if (lo == 0.0) return integrate_positive_axis(g, opt);
        return integrate_to_inf(g, lo, opt, std::max(lo, 1.0));
    }

private:
    static void validate_ts(double c, double l, double alpha, const char* fam) {
        if (!(c > 0.0)) throw std::invalid_argument(std::string(fam) + ": c must be > 0");
        if (!(l > 0.0)) throw std::invalid_argument(std::string(fam) + ": l must be > 0");
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument(std::string(fam) + ": alpha must lie in (0,1)");
        }
    }
    void require_ts(const char* what) const {
        if (!has_ts_structure()) {
            throw std::domain_error(std::string(what) + ": requires a tempered-stable family");
        }
    }
    void require_custom(const char* what) const {
        if (family_ != Family::Custom) {
            throw std::domain_error(std::string(what) + ": requires a tabulated family");
        }
    }

    Family family_ = Family::Cts;
    double c_ = 0.0, l_ = 0.0, alpha_ = 0.0, eta_ = 0.0;
    std::shared_ptr<detail::PtKernelTable> pt_;
    std::shared_ptr<detail::CustomTable> custom_;
};

// Two independent one-sided measures; minus may be absent (subordinator).
struct BilateralSpec {
    LevySpec plus;
    std::optional<LevySpec> minus;

    bool one_sided() const { return !minus.has_value(); }

    double m1_total() const {
        double m = plus.moments().m1;
        if (minus) m += minus->moments().m1;
        return m;
    }
    double m2_total() const {
        double m = plus.moments().m2;
        if (minus) m += minus->moments().m2;
        return m;
    }
    double eta_total() const {
        double e = plus.eta();
        if (minus) e += minus->eta();
        return e;
    }

    // Limit charfn of the bilateral law X+ - X-.
    Complex charfn(double s) const {
        Complex e = plus.laplace_exponent(Complex(0.0, -s));
        if (minus) e += minus->laplace_exponent(Complex(0.0, s));
        return std::exp(e);
    }
};

// Mixing law of the unit jumps in the Poisson mixture.
// UnitPoisson: point mass at 1 (lattice counts).  Rademacher: fair +-1
// (symmetric; drives the variance-mixture construction).
class NuSpec {
public:
    enum class Kind { UnitPoisson, Rademacher };

    static NuSpec unit_poisson() { return NuSpec(Kind::UnitPoisson); }
    static NuSpec rademacher() { return NuSpec(Kind::Rademacher); }

    Kind kind() const { return kind_; }
    double zeta1() const { return 1.0; }  // E|V|
    double zeta2() const { return 1.0; }  // E V^2
    double zeta3() const { return 1.0; }  // E|V|^3
    double gamma() const { return kind_ == Kind::UnitPoisson ? 1.0 : 0.0; }  // |E V|
    double gamma_star() const { return 1.0; }                                // E V^2
    bool symmetric() const { return kind_ == Kind::Rademacher; }

    // C_nu(u) = E e^{iuV} - 1.
    Complex cumulant(double u) const {
        if (kind_ == Kind::UnitPoisson) {
            return Complex(std::cos(u) - 1.0, std::sin(u));
        }
        return Complex(std::cos(u) - 1.0, 0.0);
    }

private:
    explicit NuSpec(Kind k) : kind_(k) {}
    Kind kind_;
};

// Charfn of the scaled Poisson mixture Y_a at a given s: each side
// contributes integral of (e^{(x/(a gamma)) C_nu(+-sa)} - 1) M(dx), which is
// the Laplace exponent at z = -C_nu(+-sa)/(a gamma), Re z >= 0.
inline Complex charfn_mixture(const BilateralSpec& spec, const NuSpec& nu, double a, double s) {
    if (!(a > 0.0)) throw std::invalid_argument("charfn_mixture: a must be > 0");
    if (!(nu.gamma() > 0.0)) {
        throw std::invalid_argument("charfn_mixture: mixing law must have nonzero mean");
    }
    double ag = a * nu.gamma();
    Complex e = spec.plus.laplace_exponent(-nu.cumulant(s * a) / ag);
    if (spec.minus) e += spec.minus->laplace_exponent(-nu.cumulant(-s * a) / ag);
    return std::exp(e);
}

// Charfns of the normal-variance-mixture pair: the limit law sqrt(X) W with
// W standard normal, and its sampled counterpart sqrt(a/gamma*) Z(X/a) with
// Z a Rademacher random walk.
inline Complex charfn_nvm_limit(const LevySpec& subordinator, double s) {
    return std::exp(subordinator.laplace_exponent(Complex(0.5 * s * s, 0.0)));
}

inline Complex charfn_nvm_mixture(const LevySpec& subordinator, const NuSpec& nu, double a,
                                  double s) {
    if (!(a > 0.0)) throw std::invalid_argument("charfn_nvm_mixture: a must be > 0");
    if (!nu.symmetric()) {
        throw std::invalid_argument("charfn_nvm_mixture: mixing law must be symmetric");
    }
    double u = s * std::sqrt(a / nu.gamma_star());
    Complex z = -nu.cumulant(u) / a;  // (1 - cos u)/a >= 0
    return std::exp(subordinator.laplace_exponent(z));
}

}  // namespace poismix
