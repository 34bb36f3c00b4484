#include <catch2/catch_amalgamated.hpp>

#include <poismix/bounds.hpp>
#include <poismix/discretize.hpp>
#include <poismix/levy.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

using namespace poismix;
using Catch::Approx;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Composite-Simpson oracle for the decay-constant integral
// int_0^B (1-cos x) x^{-1-alpha} dx; x = t^2 removes the endpoint kink.
double cos_integral_oracle(double alpha, double B) {
    auto f = [&](double t) {
        if (t == 0.0) return 0.0;
        double s = std::sin(0.5 * t * t);
        return 4.0 * s * s * std::pow(t, -1.0 - 2.0 * alpha);
    };
    int n = 1 << 16;
    double h = std::sqrt(B) / n;
    double acc = f(0.0) + f(std::sqrt(B));
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("bound inputs: moments, mixing constants, decay data") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    BoundInputs in = make_bound_inputs(one, NuSpec::unit_poisson());
    CHECK(in.m1 == Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-12));
    CHECK(in.m2 == Approx(0.25 * 0.5 * std::sqrt(M_PI)).epsilon(1e-12));
    CHECK(in.zeta1 == 1.0);
    CHECK(in.zeta2 == 1.0);
    CHECK(in.zeta3 == 1.0);
    CHECK(in.gamma == 1.0);
    REQUIRE(std::isfinite(in.r0));
    CHECK(in.r0 > 0.0);
    CHECK(in.alpha == Approx(0.5));
    CHECK(in.beta == Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(in.A == Approx(ts_decay_constant(one, 0.5).A).epsilon(1e-14));

    BoundInputs pt = make_bound_inputs(BilateralSpec{LevySpec::pt(1.0, 2.0, 0.3), std::nullopt},
                                       NuSpec::unit_poisson());
    CHECK(pt.alpha == Approx(0.3));
    CHECK(std::isfinite(pt.r0));
    CHECK(pt.A > 0.0);

    BoundInputs pm = make_bound_inputs(
        BilateralSpec{LevySpec::point_mass(2.0, 1.0), std::nullopt}, NuSpec::unit_poisson());
    CHECK(std::isnan(pm.r0));
    CHECK(std::isnan(pm.alpha));
}

TEST_CASE("sup-norm bound: explicit scaling and linearity in r0") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BoundInputs in = make_bound_inputs(BilateralSpec{cts, std::nullopt}, NuSpec::unit_poisson());
    in.a = 0.5;
    double b = smoothing_linf(in);
    REQUIRE(b > 0.0);
    in.a = 0.25;
    CHECK(smoothing_linf(in) == Approx(b / std::sqrt(2.0)).epsilon(1e-12));
    in.a = 0.5;
    in.r0 *= 2.0;
    CHECK(smoothing_linf(in) == Approx(2.0 * b).epsilon(1e-12));
    in.r0 *= 0.5;
    in.a = 1e-30;
    CHECK(smoothing_linf(in) < 1e-10);
}

TEST_CASE("lp and l1 bounds: constants and the small-p chain") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BoundInputs in = make_bound_inputs(BilateralSpec{cts, std::nullopt}, NuSpec::unit_poisson());

    // The p >= 2 display is (sqrt-a term) + 4(p-1) a^{1/(2p)}: stripping the
    // second term must leave something scaling exactly like sqrt(a).
    in.a = 1e-4;
    double head = smoothing_lp(in, 2.0) - 4.0 * std::pow(in.a, 0.25);
    in.a = 0.25e-4;
    double head2 = smoothing_lp(in, 2.0) - 4.0 * std::pow(in.a, 0.25);
    CHECK(head == Approx(2.0 * head2).epsilon(1e-10));

    // L1 constant is nonincreasing as a shrinks, and the bound is C_a sqrt(a).
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {1.0, 0.5, 0.1, 1e-3, 1e-6}) {
        in.a = a;
        double c = smoothing_l1_constant(in);
        CHECK(c <= prev);
        CHECK(smoothing_l1(in) == Approx(c * std::sqrt(a)).epsilon(1e-14));
        prev = c;
    }

    // p < 2 rides the L1 bound through the 1/p-th power.
    in.a = 1e-2;
    CHECK(smoothing_lp(in, 1.0) == Approx(smoothing_l1(in)).epsilon(1e-14));
    CHECK(smoothing_lp(in, 1.5) ==
          Approx(std::pow(smoothing_l1(in), 1.0 / 1.5)).epsilon(1e-14));
}

TEST_CASE("l1 bound dominates the numeric integrated distance") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    double a = 1e-2;
    ReferenceCdf ref = reference_cdf(one);
    DiscretizedMeasure dm = DiscretizedMeasure::build(cts, a, 1e-8);
    detail::PmfBuilder b(dm);
    detail::extend_to_mass(b, 1e-7);
    long double acc = 0.0L;
    for (std::size_t k = 0; k < b.size(); ++k) {
        double cum = b.cum(k);
        for (int i = 0; i < 4; ++i) {
            double x = a * (static_cast<double>(k) + (i + 0.5) / 4.0);
            acc += std::abs(cum - ref.cdf(x)) * (a / 4.0);
        }
    }
    double l1 = static_cast<double>(acc);
    BoundInputs in = make_bound_inputs(one, NuSpec::unit_poisson());
    in.a = a;
    REQUIRE(l1 > 1e-3);
    CHECK(l1 < 0.5);
    CHECK(l1 <= smoothing_l1(in));
}

TEST_CASE("ts decay constant: closed-form radius and quadrature cross-check") {
    for (double alpha : {0.25, 0.5, 0.75}) {
        LevySpec cts = LevySpec::cts(1.0, 0.5, alpha);
        BilateralSpec one{cts, std::nullopt};
        TsConstants c = ts_decay_constant(one, 0.5);
        CHECK(c.beta == Approx(0.5 * std::log(2.0)).epsilon(1e-12));
        double eta = std::pow(0.5, alpha);
        double expected = 0.5 * eta * cos_integral_oracle(alpha, c.beta);
        CHECK(c.A == Approx(expected).epsilon(1e-8));
        // Mirroring the measure doubles the total intensity, not the radius.
        TsConstants sym = ts_decay_constant(BilateralSpec{cts, cts}, 0.5);
        CHECK(sym.A == Approx(2.0 * c.A).epsilon(1e-12));
        CHECK(sym.beta == Approx(c.beta).epsilon(1e-12));
    }
    // Point-mass kernels have no decay constant; mixed indices are rejected.
    CHECK_THROWS_AS(ts_decay_constant(
                        BilateralSpec{LevySpec::point_mass(1.0, 1.0), std::nullopt}, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        ts_decay_constant(
            BilateralSpec{LevySpec::cts(1.0, 0.5, 0.5), LevySpec::cts(1.0, 0.5, 0.25)}, 0.5),
        std::invalid_argument);
}

TEST_CASE("ts rate curve: term structure and asymptotic halving ratio") {
    NuSpec up = NuSpec::unit_poisson();

    LevySpec c50 = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{c50, std::nullopt};
    BoundInputs in = make_bound_inputs(one, up);
    in.a = std::ldexp(1.0, -8);
    TsRateResult r = ts_rate(one, in);
    CHECK(r.bound == Approx(r.term1 + r.term2 + r.term3).epsilon(1e-14));
    CHECK(r.A == Approx(in.A).epsilon(1e-14));
    CHECK(r.t_star > 0.0);
    in.a *= 0.5;
    TsRateResult rh = ts_rate(one, in);
    double ex = 1.0 / (2.0 - 0.5);
    CHECK(rh.t_star == Approx(r.t_star * std::pow(2.0, ex)).epsilon(1e-12));
    CHECK(rh.term3 == Approx(r.term3 * std::pow(2.0, -ex)).epsilon(1e-12));

    // Far down the scale the a^{1/(2-alpha)} term dominates the two linear
    // terms, so halving a divides the bound by 2^{1/(2-alpha)}.
    auto ratio_at = [&](const BilateralSpec& spec, BoundInputs base, double a) {
        base.a = a;
        double b1 = ts_rate(spec, base).bound;
        base.a = 0.5 * a;
        return b1 / ts_rate(spec, base).bound;
    };
    CHECK(ratio_at(one, in, 1e-28) == Approx(std::pow(2.0, 1.0 / 1.5)).margin(1e-3));

    LevySpec c25 = LevySpec::cts(1.0, 0.5, 0.25);
    BilateralSpec one25{c25, std::nullopt};
    CHECK(ratio_at(one25, make_bound_inputs(one25, up), 1e-60) ==
          Approx(std::pow(2.0, 1.0 / 1.75)).margin(1e-3));

    LevySpec c75 = LevySpec::cts(1.0, 0.5, 0.75);
    BilateralSpec one75{c75, std::nullopt};
    CHECK(ratio_at(one75, make_bound_inputs(one75, up), 1e-30) ==
          Approx(std::pow(2.0, 1.0 / 1.25)).margin(1e-3));
}

TEST_CASE("exact distance: coarse-lattice sanity and self comparison") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.25);
    BilateralSpec one{cts, std::nullopt};
    // At a = 1000 nearly all lattice mass sits at zero, so the distance is the
    // mass-at-zero discrepancy against the continuous limit law.
    ExactDistance d = exact_kolmogorov(one, NuSpec::unit_poisson(), 1000.0);
    CHECK(d.value == Approx(std::exp(-ell_plus(cts, 1000.0))).margin(1e-4));

    DiscretizedMeasure dm = DiscretizedMeasure::build(cts, 0.5, 1e-10);
    PmfTable tab = pmf_recursive(dm, 200);
    CHECK(exact_kolmogorov(tab, tab).value == 0.0);

    DiscretizedMeasure dm2 = DiscretizedMeasure::build(cts, 0.25, 1e-10);
    PmfTable tab2 = pmf_recursive(dm2, 200);
    CHECK_THROWS_AS(exact_kolmogorov(tab, tab2), std::invalid_argument);
    CHECK_THROWS_AS(exact_kolmogorov(tab, PmfTable{}), std::invalid_argument);
    CHECK_THROWS_AS(exact_kolmogorov(one, NuSpec::rademacher(), 0.5, {}),
                    std::invalid_argument);
}

TEST_CASE("exact distance: dominance and rate recovery across the scale grid") {
    NuSpec up = NuSpec::unit_poisson();
    for (double alpha : {0.25, 0.5, 0.75}) {
        LevySpec cts = LevySpec::cts(1.0, 0.5, alpha);
        BilateralSpec one{cts, std::nullopt};
        ExactDistanceOptions opts;
        ReferenceCdf ref = reference_cdf(one, opts);
        opts.reference = &ref;
        BoundInputs in = make_bound_inputs(one, up);
        std::vector<double> xs, ys;
        double prev = std::numeric_limits<double>::infinity();
        for (int e = 4; e <= 12; ++e) {
            double a = std::ldexp(1.0, -e);
            ExactDistance d = exact_kolmogorov(one, up, a, opts);
            REQUIRE(d.value > 0.0);
            CHECK(d.value < prev);
            prev = d.value;
            in.a = a;
            CHECK(d.value <= smoothing_linf(in));
            CHECK(d.value <= ts_rate(one, in).bound);
            xs.push_back(std::log(a));
            ys.push_back(std::log(d.value));
        }
        double slope = ls_slope(xs, ys);
        CHECK(slope >= 1.0 / (2.0 - alpha) - 0.15);
        CHECK(slope <= 1.0);
    }
}

TEST_CASE("exact distance: one-sided reduction and pinned fine-scale value") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    ExactDistanceOptions opts;
    ReferenceCdf ref = reference_cdf(one, opts);
    opts.reference = &ref;
    ExactDistance d1 = exact_kolmogorov(one, NuSpec::unit_poisson(), 0.1, opts);
    ExactDistance d2 = exact_kolmogorov(cts, NuSpec::unit_poisson(), 0.1, opts);
    CHECK(d1.value == d2.value);
    ExactDistance fine = exact_kolmogorov(one, NuSpec::unit_poisson(), std::ldexp(1.0, -8), opts);
    CHECK(fine.value == Approx(0.00605).margin(5e-4));
}

TEST_CASE("exact distance: bilateral lattice vs inverted limit") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec sym{cts, cts};
    ExactDistance d = exact_kolmogorov(sym, NuSpec::unit_poisson(), 0.1);
    REQUIRE(d.value > 0.0);
    CHECK(d.value == Approx(0.0655).margin(2e-3));
    BoundInputs in = make_bound_inputs(sym, NuSpec::unit_poisson());
    in.a = 0.1;
    CHECK(d.value <= smoothing_linf(in));
}

TEST_CASE("variance-mixture bounds and exact distance") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    NuSpec rad = NuSpec::rademacher();
    BoundInputs in = make_nvm_bound_inputs(cts, rad);
    REQUIRE(std::isfinite(in.r0));
    CHECK(in.r0 > 0.0);

    // Unit second and third absolute moments collapse the constants.
    in.a = 1e-2;
    double m1 = in.m1;
    double expected = std::pow(in.a, 1.0 / 6.0) *
                      (std::exp(m1 / 6.0) * m1 / (6.0 * M_PI) + 12.0 / (M_PI * M_PI)) * in.r0;
    CHECK(nvm_linf(in) == Approx(expected).epsilon(1e-12));

    double b = nvm_linf(in);
    in.a = 0.5e-2;
    CHECK(nvm_linf(in) == Approx(b * std::pow(2.0, -1.0 / 6.0)).epsilon(1e-12));
    in.a = 1e-2;
    CHECK(nvm_lp(in, 2.0) > 0.0);
    in.p = 2.0;
    NvmBounds nb = nvm_bounds(in);
    CHECK(nb.linf == Approx(nvm_linf(in)));
    CHECK(nb.lp == Approx(nvm_lp(in, 2.0)));
    in.p = 1.5;
    CHECK(std::isnan(nvm_bounds(in).lp));

    ExactDistance d = exact_kolmogorov_nvm(cts, rad, 1e-2);
    CHECK(d.value == Approx(0.02332).margin(1e-3));
    CHECK(d.value <= b);
    CHECK_THROWS_AS(exact_kolmogorov_nvm(cts, NuSpec::unit_poisson(), 1e-2, {}),
                    std::invalid_argument);
}

TEST_CASE("moment-only route: optimized-cutoff slopes and r0 comparison") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    BoundInputs in = make_bound_inputs(one, NuSpec::unit_poisson());
    for (double p : {2.0, 1.0}) {
        std::vector<double> xs, ys;
        for (double a : {1e-8, 1e-10, 1e-12}) {
            in.a = a;
            xs.push_back(std::log(a));
            ys.push_back(std::log(bound_without_r0(in, p)));
        }
        double target = p >= 2.0 ? 1.0 / (2.0 * p) : 2.0 / (5.0 * p);
        CHECK(ls_slope(xs, ys) == Approx(target).margin(5e-3));
    }
    // Knowing r0 tightens the integrated bound at this scale.
    in.a = 1e-4;
    CHECK(bound_without_r0(in, 1.0) >= smoothing_l1(in));

    BoundInputs no_m2 = in;
    no_m2.m2 = kNan;
    CHECK_THROWS_AS(bound_without_r0(no_m2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bound_without_r0(in, 0.5), std::invalid_argument);
}

TEST_CASE("bound input validation") {
    BoundInputs empty;
    CHECK_THROWS_AS(smoothing_linf(empty), std::invalid_argument);
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    BoundInputs in = make_bound_inputs(one, NuSpec::unit_poisson());
    CHECK_THROWS_AS(smoothing_linf(in), std::invalid_argument);  // a still unset
    in.a = 0.1;
    BoundInputs no_r0 = in;
    no_r0.r0 = kNan;
    CHECK_THROWS_AS(smoothing_linf(no_r0), std::invalid_argument);
    BoundInputs no_gamma = in;
    no_gamma.gamma = 0.0;
    CHECK_THROWS_AS(smoothing_linf(no_gamma), std::invalid_argument);
    CHECK_THROWS_AS(
        ts_rate(BilateralSpec{LevySpec::point_mass(1.0, 1.0), std::nullopt}, in),
        std::invalid_argument);
}

TEST_CASE("every bound shrinks to zero with the scale") {
    LevySpec cts = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec one{cts, std::nullopt};
    BoundInputs in = make_bound_inputs(one, NuSpec::unit_poisson());
    double prev_linf = std::numeric_limits<double>::infinity();
    double prev_ts = std::numeric_limits<double>::infinity();
    double prev_nr = std::numeric_limits<double>::infinity();
    for (double a : {1e-2, 1e-6, 1e-12, 1e-24, 1e-36}) {
        in.a = a;
        double bl = smoothing_linf(in);
        double bt = ts_rate(one, in).bound;
        double bn = bound_without_r0(in, 2.0);
        CHECK(bl < prev_linf);
        CHECK(bt < prev_ts);
        CHECK(bn < prev_nr);
        prev_linf = bl;
        prev_ts = bt;
        prev_nr = bn;
    }
    CHECK(prev_linf < 1e-4);
    CHECK(prev_ts < 1e-4);
    CHECK(prev_nr < 1e-4);

    BoundInputs nv = make_nvm_bound_inputs(cts, NuSpec::rademacher());
    nv.a = 1e-36;
    CHECK(nvm_linf(nv) < 1e-4);
}
