#pragma once

// Characteristic-function inversion: pointwise Gil-Pelaez cdf values, the
// integrated-modulus constant r0 with a tempered-stable tail bound, and a
// reusable reference cdf/pdf built from precomputed quadrature nodes.

#include <poismix/levy.hpp>
#include <poismix/quadrature.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace poismix {

struct InversionConfig {
    double max_s = 1e5;    // hard cap on the integration range
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
};

namespace detail {

// integral of (1-cos u) u^{-1-alpha} over (0, B); for large B the full-line
// value Gamma(1-alpha)/alpha * cos(pi alpha / 2) minus an integration-by-parts
// tail expansion avoids chasing the oscillatory remainder.
inline double one_minus_cos_integral(double alpha, double B) {
    if (!(B > 0.0)) return 0.0;
    if (B <= 50.0) {
        QuadratureOptions opt;
        opt.abs_tol = 1e-300;
        opt.rel_tol = 1e-11;
        return integrate_from_zero(
            [&](double u) {
                double h = std::sin(0.5 * u);
                return 2.0 * h * h * std::pow(u, -1.0 - alpha);
            },
            B, opt);
    }
    double total = std::tgamma(1.0 - alpha) / alpha * std::cos(0.5 * M_PI * alpha);
    // tail = B^-alpha/alpha - integral_B^inf cos(u) u^{-1-alpha} du, the cosine
    // part expanded by parts to O(B^{-3-alpha}).
    double c1 = 1.0 + alpha;
    double cosint = -std::sin(B) * std::pow(B, -c1) -
                    c1 * std::cos(B) * std::pow(B, -c1 - 1.0) +
                    c1 * (c1 + 1.0) * std::sin(B) * std::pow(B, -c1 - 2.0);
    double tail = std::pow(B, -alpha) / alpha - cosint;
    return total - tail;
}

// Decay constant of the TS charfn bound |mu^(s)| <= exp(-A(s0) |s|^alpha*)
// valid for |s| >= s0; summed over the two sides with alpha* the smaller
// stability index.
struct TsDecay {
    double A = 0.0;
    double alpha = 0.0;
};

inline TsDecay ts_decay(const BilateralSpec& spec, double s0, double delta = 0.5) {
    auto side = [&](const LevySpec& m) {
        double beta = m.beta(delta);
        return (1.0 - delta) * m.eta() *
               one_minus_cos_integral(m.alpha(), s0 * beta);
    };
    TsDecay d;
    d.alpha = spec.plus.alpha();
    double A = side(spec.plus);
    if (spec.minus) {
        d.alpha = std::min(d.alpha, spec.minus->alpha());
        A += side(*spec.minus);
    }
    d.A = A;
    return d;
}

// integral over (S, inf) of exp(-A s^alpha) ds.
inline double ts_tail_integral(double A, double alpha, double S) {
    double t = A * std::pow(S, alpha);
    return boost::math::tgamma(1.0 / alpha, t) / (alpha * std::pow(A, 1.0 / alpha));
}

}  // namespace detail

// Gil-Pelaez pointwise cdf: F(x) = 1/2 - (1/pi) integral_0^inf
// Im(e^{-isx} charfn(s)) / s ds. The tail is summed in half-period blocks with
// two rounds of averaging so conditionally convergent integrands (bounded,
// purely oscillatory charfns) still settle.
inline double invert_cdf(const std::function<Complex(double)>& charfn, double x,
                         const InversionConfig& cfg = {}) {
    auto h = [&](double s) {
        Complex v = std::exp(Complex(0.0, -s * x)) * charfn(s);
        return v.imag() / s;
    };
    QuadratureOptions head_opt;
    head_opt.abs_tol = 0.05 * cfg.abs_tol;
    head_opt.rel_tol = cfg.rel_tol;
    double s0 = std::min(16.0, cfg.max_s);
    double u = integrate(h, 0.0, s0, head_opt);

    // Block length = half the period of e^{-isx}, so consecutive block sums of
    // a purely oscillatory tail alternate and the averaging ladder telescopes.
    double omega = std::max(0.05, std::abs(x));
    double block = M_PI / omega;
    QuadratureOptions block_opt;
    block_opt.abs_tol = std::max(1e-3 * cfg.abs_tol, 1e-15);
    block_opt.rel_tol = cfg.rel_tol;

    double result = u;
    bool converged = (s0 >= cfg.max_s);
    // Repeated-averaging ladder: avg[0] = raw partial sums, avg[d] = running
    // mean of consecutive avg[d-1] values; each level damps a 1/k oscillatory
    // remainder by another order.
    constexpr int kDepth = 4;
    double lvl[kDepth] = {0, 0, 0, 0};
    double top_prev = 0.0, mid_prev = 0.0;
    int steps = 0;
    int settled = 0;
    double s = s0;
    while (!converged) {
        if (s >= cfg.max_s) {
            throw QuadratureError(
                "invert_cdf: truncation bound not met before max_s");
        }
        double e = std::min(s + block, cfg.max_s);
        u += integrate(h, s, e, block_opt);
        s = e;
        int maxd = std::min(steps, kDepth - 1);
        double carry = u;
        for (int d = 0; d <= maxd; ++d) {
            double old = lvl[d];
            lvl[d] = carry;
            if (d < maxd) carry = 0.5 * (carry + old);
        }
        ++steps;
        if (steps > kDepth) {
            double top = lvl[kDepth - 1];
            double mid = lvl[kDepth - 2];
            if (std::abs(top - top_prev) < 0.5 * cfg.abs_tol &&
                std::abs(mid - mid_prev) < 50.0 * cfg.abs_tol) {
                if (++settled >= 2) {
                    result = top;
                    converged = true;
                }
            } else {
                settled = 0;
            }
            top_prev = top;
            mid_prev = mid;
        }
    }
    double F = 0.5 - result / M_PI;
    return std::min(1.0, std::max(0.0, F));
}

// r0 = integral over R of |mu^(s)| ds for a (bilateral) TS law: swept
// quadrature out to where the modulus is negligible, plus the analytic
// exp(-A s^alpha) tail bound from the decay estimate.
inline double r0(const BilateralSpec& spec, const InversionConfig& cfg = {}) {
    if (!spec.plus.has_ts_structure() ||
        (spec.minus && !spec.minus->has_ts_structure())) {
        throw std::domain_error(
            "r0: integrability is only established for tempered-stable families");
    }
    auto mod = [&](double s) { return std::abs(spec.charfn(s)); };
    QuadratureOptions opt;
    opt.abs_tol = 0.01 * cfg.abs_tol;
    opt.rel_tol = cfg.rel_tol;
    double total = integrate(mod, 0.0, 1.0, opt);
    double s = 1.0, width = 1.0;
    int small = 0;
    while (small < 2) {
        if (s >= cfg.max_s) {
            throw QuadratureError("r0: modulus did not decay before max_s");
        }
        double e = std::min(s + width, cfg.max_s);
        double piece = integrate(mod, s, e, opt);
        total += piece;
        s = e;
        width = std::min(2.0 * width, 0.25 * s);
        small = (piece < std::max(opt.abs_tol, 0.5 * cfg.rel_tol * total) &&
                 mod(s) < 1e-13)
                    ? small + 1
                    : 0;
    }
    auto decay = detail::ts_decay(spec, s);
    return 2.0 * total + 2.0 * detail::ts_tail_integral(decay.A, decay.alpha, s);
}

// r0* = integral over R of the normal-variance-mixture limit charfn
// exp(laplace(s^2/2)); real, positive, monotone decreasing.
inline double r0_nvm(const LevySpec& subordinator, const InversionConfig& cfg = {}) {
    if (!subordinator.has_ts_structure()) {
        throw std::domain_error("r0_nvm: requires a tempered-stable subordinator");
    }
    auto mod = [&](double s) { return charfn_nvm_limit(subordinator, s).real(); };
    QuadratureOptions opt;
    opt.abs_tol = 0.01 * cfg.abs_tol;
    opt.rel_tol = cfg.rel_tol;
    double total = integrate(mod, 0.0, 1.0, opt);
    double s = 1.0, width = 1.0;
    int small = 0;
    while (small < 2) {
        if (s >= cfg.max_s) {
            throw QuadratureError("r0_nvm: modulus did not decay before max_s");
        }
        double e = std::min(s + width, cfg.max_s);
        double piece = integrate(mod, s, e, opt);
        total += piece;
        s = e;
        width = std::min(2.0 * width, 0.25 * s);
        small = (piece < std::max(opt.abs_tol, 0.5 * cfg.rel_tol * total) &&
                 mod(s) < 1e-14)
                    ? small + 1
                    : 0;
    }
    return 2.0 * total;
}

struct ReferenceCdfOptions {
    double scale_hint = 1.0;   // starting width for the support probe
    double tail_prob = 1e-8;   // grid extends until both cdf tails are below this
    int grid_points = 4097;
    double phi_cut = 1e-14;    // node range stops once |charfn| falls below
    double max_dx = 0.0;       // if > 0, grow grid_points to keep spacing below this
};

// Precomputed-node inversion: quadrature nodes and weights for the Gil-Pelaez
// integral are fixed once, so evaluating the cdf at many points is a plain
// trigonometric sum (done by complex rotation down a uniform grid, then
// monotone interpolation).
class ReferenceCdf {
public:
    static ReferenceCdf build(std::function<Complex(double)> charfn,
                              InversionConfig cfg = {}, ReferenceCdfOptions opts = {}) {
        ReferenceCdf rc;

        // Frequency range: double until the modulus is negligible.
        double S = 4.0;
        while (std::abs(charfn(S)) > opts.phi_cut ||
               std::abs(charfn(0.71 * S)) > opts.phi_cut) {
            S *= 2.0;
            if (S > cfg.max_s) {
                throw QuadratureError("reference cdf: charfn modulus does not decay");
            }
        }

        // Support range: geometric probing with pointwise inversion.
        double hi = opts.scale_hint;
        while (1.0 - invert_cdf(charfn, hi, cfg) > opts.tail_prob) {
            hi *= 2.0;
            if (!(hi < 1e12)) throw std::runtime_error("reference cdf: no right tail");
        }
        double lo = -opts.scale_hint;
        while (invert_cdf(charfn, lo, cfg) > opts.tail_prob) {
            lo *= 2.0;
            if (!(lo > -1e12)) throw std::runtime_error("reference cdf: no left tail");
        }

        // Panels sized to keep e^{-isx} resolved over the whole support.
        double xmax = std::max(std::abs(lo), std::abs(hi));
        double hpanel = M_PI / (2.0 * std::max(1.0, xmax));
        std::size_t panels = static_cast<std::size_t>(std::ceil(S / hpanel));
        rc.node_s_.reserve(panels * 15);
        rc.coef_.reserve(panels * 15);
        rc.wphi_.reserve(panels * 15);
        auto push_node = [&](double sj, double wj) {
            Complex phi = charfn(sj);
            rc.node_s_.push_back(sj);
            rc.wphi_.push_back(wj * phi);
            rc.coef_.push_back(wj * phi / sj);
        };
        for (std::size_t p = 0; p < panels; ++p) {
            double a = S * static_cast<double>(p) / static_cast<double>(panels);
            double b = S * static_cast<double>(p + 1) / static_cast<double>(panels);
            double c = 0.5 * (a + b), hw = 0.5 * (b - a);
            for (int j = 0; j < 7; ++j) {
                push_node(c - hw * detail::kXgk[j], hw * detail::kWgk[j]);
                push_node(c + hw * detail::kXgk[j], hw * detail::kWgk[j]);
            }
            push_node(c, hw * detail::kWgk[7]);
        }

        // Uniform cdf grid filled by per-node complex rotation.
        int n = opts.grid_points;
        if (opts.max_dx > 0.0) {
            double needed = std::ceil((hi - lo) / opts.max_dx) + 1.0;
            n = std::max(n, static_cast<int>(std::min(needed, double(1 << 20))));
        }
        rc.grid_x_.resize(static_cast<std::size_t>(n));
        rc.grid_F_.assign(static_cast<std::size_t>(n), 0.0);
        double dx = (hi - lo) / static_cast<double>(n - 1);
        for (int i = 0; i < n; ++i) rc.grid_x_[static_cast<std::size_t>(i)] = lo + dx * i;
        for (std::size_t j = 0; j < rc.node_s_.size(); ++j) {
            Complex p = std::exp(Complex(0.0, -rc.node_s_[j] * lo)) * rc.coef_[j];
            Complex rot = std::exp(Complex(0.0, -rc.node_s_[j] * dx));
            for (int i = 0; i < n; ++i) {
                rc.grid_F_[static_cast<std::size_t>(i)] += p.imag();
                p *= rot;
            }
        }
        for (auto& f : rc.grid_F_) f = std::min(1.0, std::max(0.0, 0.5 - f / M_PI));
        // Enforce monotonicity (quadrature wiggle is ~abs_tol).
        for (std::size_t i = 1; i < rc.grid_F_.size(); ++i) {
            rc.grid_F_[i] = std::max(rc.grid_F_[i], rc.grid_F_[i - 1]);
        }
        return rc;
    }

    double cdf(double x) const {
        if (x <= grid_x_.front()) return grid_F_.front();
        if (x >= grid_x_.back()) return grid_F_.back();
        double t = (x - grid_x_.front()) / (grid_x_[1] - grid_x_[0]);
        auto i = static_cast<std::size_t>(t);
        if (i + 1 >= grid_x_.size()) i = grid_x_.size() - 2;
        double w = (x - grid_x_[i]) / (grid_x_[i + 1] - grid_x_[i]);
        return (1.0 - w) * grid_F_[i] + w * grid_F_[i + 1];
    }

    // Density by the same nodes: f(x) = (1/pi) integral_0^inf Re(e^{-isx} phi).
    double pdf(double x) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < node_s_.size(); ++j) {
            acc += (std::exp(Complex(0.0, -node_s_[j] * x)) * wphi_[j]).real();
        }
        return std::max(0.0, acc / M_PI);
    }

    double x_lo() const { return grid_x_.front(); }
    double x_hi() const { return grid_x_.back(); }

private:
    std::vector<double> node_s_;
    std::vector<Complex> coef_;   // w_j phi(s_j) / s_j
    std::vector<Complex> wphi_;   // w_j phi(s_j)
    std::vector<double> grid_x_;
    std::vector<double> grid_F_;
};

}  // namespace poismix
