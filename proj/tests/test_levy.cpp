#include <catch2/catch_amalgamated.hpp>

#include <poismix/levy.hpp>
#include <poismix/quadrature.hpp>
#include <poismix/random.hpp>

#include <cmath>
#include <complex>

using namespace poismix;
using Catch::Approx;

namespace {

// Quadrature oracle for moments of an absolutely continuous measure.
double moment_oracle(const LevySpec& spec, int p) {
    QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    return integrate_positive_axis(
        [&](double x) { return std::pow(x, p) * spec.density(x); }, opt);
}

// Quadrature oracle for the Laplace-type transform integral (e^{-zx}-1) M(dx)
// at real z, valid for absolutely continuous families.
double laplace_oracle(const LevySpec& spec, double z) {
    QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    return integrate_positive_axis(
        [&](double x) { return std::expm1(-z * x) * spec.density(x); }, opt);
}

// Adaptive-quadrature oracle for the pt transform at complex z: the mixing
// integral (1+u)^{-alpha-l-2} u^l [(u+z)^alpha - u^alpha] du, split at 1 and
// integrated separately for the real and imaginary parts.
Complex pt_laplace_oracle(double c, double l, double alpha, Complex z) {
    double q = alpha + l + 2.0;
    double scale = c * std::exp(std::lgamma(q) - std::lgamma(alpha + l)) *
                   (-std::tgamma(1.0 - alpha) / alpha);
    QuadratureOptions opt;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 1e-12;
    auto term = [&](double u) -> Complex {
        double env = std::exp(-q * std::log1p(u) + l * std::log(u));
        return env * (std::pow(u + z, alpha) - std::pow(u, alpha));
    };
    auto re = [&](double u) { return term(u).real(); };
    auto im = [&](double u) { return term(u).imag(); };
    double vr = integrate_from_zero(re, 1.0, opt) + integrate_to_inf(re, 1.0, opt);
    double vi = integrate_from_zero(im, 1.0, opt) + integrate_to_inf(im, 1.0, opt);
    return scale * Complex(vr, vi);
}

}  // namespace

TEST_CASE("point mass moments") {
    auto spec = LevySpec::point_mass(2.0, 1.0);
    auto m = spec.moments();
    CHECK(m.m1 == Approx(2.0).epsilon(1e-14));
    CHECK(m.m2 == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("cts moments match closed form and quadrature oracle") {
    auto spec = LevySpec::cts(1.0, 0.5, 0.5);
    auto m = spec.moments();
    CHECK(m.m1 == Approx(0.5 * std::tgamma(0.5)).epsilon(1e-12));  // 0.88623
    CHECK(m.m2 == Approx(0.25 * std::tgamma(1.5)).epsilon(1e-12)); // 0.22156
    CHECK(m.m1 == Approx(0.8862269254).epsilon(1e-8));
    CHECK(m.m2 == Approx(0.2215567314).epsilon(1e-8));
    CHECK(m.m1 == Approx(moment_oracle(spec, 1)).epsilon(1e-8));
    CHECK(m.m2 == Approx(moment_oracle(spec, 2)).epsilon(1e-8));
}

TEST_CASE("pt moments match closed form and quadrature oracle") {
    double c = 0.8, al = 0.4, l = 1.7;
    auto spec = LevySpec::pt(c, l, al);
    auto m = spec.moments();
    CHECK(m.m1 == Approx(c * std::tgamma(1.0 - al)).epsilon(1e-12));
    CHECK(m.m2 == Approx(2.0 * c * std::tgamma(2.0 - al) / (al + l - 1.0)).epsilon(1e-12));
    CHECK(m.m1 == Approx(moment_oracle(spec, 1)).epsilon(1e-6));
    CHECK(m.m2 == Approx(moment_oracle(spec, 2)).epsilon(1e-6));
}

TEST_CASE("pt density is a normalized tempering of the stable kernel") {
    double c = 1.0, al = 0.5, l = 2.0;
    auto spec = LevySpec::pt(c, l, al);
    // g~(0+) = 1: near zero the density approaches eta x^{-1-alpha}.
    for (double x : {1e-7, 1e-8}) {
        double ratio = spec.density(x) / (spec.eta() * std::pow(x, -1.0 - al));
        CHECK(ratio == Approx(1.0).epsilon(1e-4));
    }
    // g~ decreasing.
    double prev = spec.gt(1e-6);
    for (double x = 1e-5; x < 1e3; x *= 2.0) {
        double cur = spec.gt(x);
        CHECK(cur <= prev * (1.0 + 1e-12));
        CHECK(cur > 0.0);
        prev = cur;
    }
    // Memoized kernel agrees with direct quadrature of the raw integral.
    for (double x : {0.03, 0.7, 4.0, 60.0}) {
        QuadratureOptions opt;
        opt.rel_tol = 1e-12;
        double q = al + l + 2.0;
        auto f = [&](double u) {
            return std::exp(-x * u - q * std::log1p(u) + l * std::log(u));
        };
        double raw = integrate_from_zero(f, 1.0, opt) + integrate_to_inf(f, 1.0, opt);
        double lograw = std::log(raw) + std::lgamma(q) - std::lgamma(l + 1.0) -
                        std::lgamma(al + 1.0);
        CHECK(spec.log_gt(x) == Approx(lograw).epsilon(1e-7));
    }
}

TEST_CASE("cts tempering accessors") {
    auto spec = LevySpec::cts(2.0, 1.5, 0.3);
    CHECK(spec.eta() == Approx(2.0 * std::pow(1.5, 0.3)).epsilon(1e-14));
    CHECK(spec.gt(0.7) == Approx(std::exp(-0.7 / 1.5)).epsilon(1e-14));
    CHECK(spec.cg() == Approx(1.0).epsilon(1e-14));
    // Quantile of the tempering: g(beta) = 1 - delta.
    CHECK(spec.beta(0.5) == Approx(1.5 * std::log(2.0)).epsilon(1e-12));
    auto pt = LevySpec::pt(1.0, 2.0, 0.5);
    double b = pt.beta(0.5);
    CHECK(pt.gt(b) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("laplace exponent closed forms vs quadrature") {
    SECTION("cts") {
        auto spec = LevySpec::cts(1.3, 0.9, 0.6);
        for (double z : {0.1, 1.0, 7.5}) {
            double closed = spec.laplace_exponent(Complex(z, 0.0)).real();
            CHECK(closed == Approx(laplace_oracle(spec, z)).epsilon(1e-9));
        }
    }
    SECTION("pt") {
        auto spec = LevySpec::pt(0.9, 1.2, 0.35);
        for (double z : {0.2, 2.0, 11.0}) {
            double closed = spec.laplace_exponent(Complex(z, 0.0)).real();
            CHECK(closed == Approx(laplace_oracle(spec, z)).epsilon(1e-7));
        }
    }
    SECTION("pt at complex arguments") {
        struct Params {
            double c, l, alpha;
        };
        for (auto [c, l, alpha] : {Params{1.0, 1.0, 0.25}, Params{1.0, 1.0, 0.75},
                                   Params{0.9, 0.3, 0.5}, Params{1.3, 2.6, 0.6}}) {
            auto spec = LevySpec::pt(c, l, alpha);
            for (Complex z : {Complex(0.0, -0.7), Complex(0.0, 35.0),
                              Complex(0.0, -400.0), Complex(3.0, -3.0),
                              Complex(250.0, 120.0), Complex(1e-3, -1e-3)}) {
                Complex fast = spec.laplace_exponent(z);
                Complex slow = pt_laplace_oracle(c, l, alpha, z);
                CHECK(std::abs(fast - slow) <=
                      1e-9 * (1.0 + std::abs(slow)));
            }
        }
    }
    SECTION("point mass") {
        auto spec = LevySpec::point_mass(1.5, 2.0);
        double z = 0.8;
        double closed = spec.laplace_exponent(Complex(z, 0.0)).real();
        CHECK(closed == Approx(1.5 * std::expm1(-z * 2.0)).epsilon(1e-14));
    }
}

TEST_CASE("cumulant examples") {
    SECTION("zero frequency") {
        auto spec = LevySpec::cts(1.0, 0.5, 0.5);
        auto v = spec.cumulant(0.0);
        CHECK(std::abs(v) < 1e-14);
    }
    SECTION("point mass at pi") {
        // lambda (e^{i pi} - 1) = -2 lambda with lambda = 1, atom 1.
        auto spec = LevySpec::point_mass(1.0, 1.0);
        auto v = spec.cumulant(M_PI);
        CHECK(v.real() == Approx(-2.0).epsilon(1e-12));
        CHECK(std::abs(v.imag()) < 1e-12);
    }
    SECTION("real part nonpositive") {
        auto spec = LevySpec::pt(1.1, 2.3, 0.45);
        RandomSource rng(7, 0);
        for (int i = 0; i < 100; ++i) {
            double s = (rng.u01() - 0.5) * 60.0;
            CHECK(spec.cumulant(s).real() <= 1e-12);
        }
    }
}

TEST_CASE("bilateral spec aggregates both sides") {
    auto plus = LevySpec::cts(1.0, 0.5, 0.5);
    auto minus = LevySpec::cts(0.5, 1.0, 0.5);
    BilateralSpec bi{plus, minus};
    auto mp = plus.moments();
    auto mm = minus.moments();
    CHECK(bi.m1_total() == Approx(mp.m1 + mm.m1).epsilon(1e-13));
    CHECK(bi.m2_total() == Approx(mp.m2 + mm.m2).epsilon(1e-13));
    CHECK(bi.eta_total() == Approx(plus.eta() + minus.eta()).epsilon(1e-13));

    BilateralSpec one{plus, std::nullopt};
    CHECK(one.one_sided());
    CHECK(one.m1_total() == Approx(mp.m1).epsilon(1e-13));
}

TEST_CASE("bilateral characteristic function properties") {
    auto plus = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec sym{plus, plus};
    BilateralSpec asym{LevySpec::cts(1.0, 0.5, 0.5), LevySpec::cts(0.3, 2.0, 0.7)};
    RandomSource rng(11, 0);
    for (int i = 0; i < 50; ++i) {
        double s = (rng.u01() - 0.5) * 40.0;
        auto sv = sym.charfn(s);
        CHECK(std::abs(sv.imag()) < 1e-12);          // symmetric law => real charfn
        CHECK(std::abs(sv) <= 1.0 + 1e-12);
        auto av = asym.charfn(s);
        auto conj = asym.charfn(-s);
        CHECK(av.real() == Approx(conj.real()).margin(1e-13));
        CHECK(av.imag() == Approx(-conj.imag()).margin(1e-13));
        CHECK(std::abs(av) <= 1.0 + 1e-12);
    }
}

TEST_CASE("mixture characteristic function basics") {
    NuSpec nu = NuSpec::unit_poisson();
    auto spec = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec bi{spec, std::nullopt};
    SECTION("unit at zero frequency") {
        CHECK(std::abs(charfn_mixture(bi, nu, 0.25, 0.0) - Complex(1.0, 0.0)) < 1e-14);
    }
    SECTION("modulus bounded by one, conjugate symmetric") {
        RandomSource rng(3, 0);
        for (int i = 0; i < 60; ++i) {
            double s = (rng.u01() - 0.5) * 50.0;
            auto v = charfn_mixture(bi, nu, 0.1, s);
            CHECK(std::abs(v) <= 1.0 + 1e-12);
            auto w = charfn_mixture(bi, nu, 0.1, -s);
            CHECK(v.real() == Approx(w.real()).margin(1e-13));
            CHECK(v.imag() == Approx(-w.imag()).margin(1e-13));
        }
    }
    SECTION("point mass reduction") {
        // Single jump size c, rate lambda: the mixture law is a times a
        // Poisson(c/a)-compound of unit Poissons, charfn
        // exp(lambda (e^{(c/a)(e^{isa}-1)} - 1)).
        auto pm = LevySpec::point_mass(2.0, 1.0);
        BilateralSpec bpm{pm, std::nullopt};
        double a = 0.5;
        for (double s : {0.3, 1.1, 2.9}) {
            auto inner = (1.0 / a) * (std::exp(Complex(0.0, s * a)) - 1.0);
            auto expect = std::exp(2.0 * (std::exp(inner) - 1.0));
            auto got = charfn_mixture(bpm, nu, a, s);
            CHECK(std::abs(got - expect) < 1e-12);
        }
    }
}

TEST_CASE("mixture charfn converges to subordinator charfn") {
    NuSpec nu = NuSpec::unit_poisson();
    auto spec = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec bi{spec, std::nullopt};
    for (double s : {0.7, 2.0}) {
        auto target = bi.charfn(s);
        auto approx = charfn_mixture(bi, nu, 1e-3, s);
        CHECK(std::abs(approx - target) < 1e-2);
    }
}

TEST_CASE("mixture charfn gap halves with a") {
    // First-order accuracy in a: gap(a/2)/gap(a) -> 1/2.
    NuSpec nu = NuSpec::unit_poisson();
    auto spec = LevySpec::cts(1.0, 0.5, 0.5);
    BilateralSpec bi{spec, std::nullopt};
    for (double s : {1.0, 3.0}) {
        auto target = bi.charfn(s);
        double a = 5e-3;
        double g1 = std::abs(charfn_mixture(bi, nu, a, s) - target);
        double g2 = std::abs(charfn_mixture(bi, nu, a / 2.0, s) - target);
        double factor = g2 / g1;
        CHECK(factor > 0.4);
        CHECK(factor < 0.6);
    }
}

TEST_CASE("rademacher mixing and nvm limit") {
    NuSpec nu = NuSpec::rademacher();
    CHECK(nu.symmetric());
    CHECK(nu.gamma() == Approx(0.0).margin(0.0));
    CHECK(nu.gamma_star() == Approx(1.0).epsilon(1e-14));
    CHECK(nu.zeta2() == Approx(1.0).epsilon(1e-14));
    // C_nu(u) = cos u - 1, real.
    auto c = nu.cumulant(1.3);
    CHECK(c.real() == Approx(std::cos(1.3) - 1.0).epsilon(1e-14));
    CHECK(std::abs(c.imag()) < 1e-15);

    auto spec = LevySpec::cts(1.0, 0.5, 0.5);
    // Normal variance mixture limit: exp(laplace(s^2/2)), real, in (0, 1].
    for (double s : {0.0, 0.9, 4.0}) {
        auto v = charfn_nvm_limit(spec, s);
        CHECK(v.imag() == Approx(0.0).margin(1e-15));
        CHECK(v.real() <= 1.0 + 1e-14);
        CHECK(v.real() > 0.0);
    }
    // Mixture converges to the limit.
    for (double s : {0.8, 2.5}) {
        auto target = charfn_nvm_limit(spec, s);
        auto approx = charfn_nvm_mixture(spec, nu, 1e-4, s);
        CHECK(std::abs(approx - target) < 1e-2);
    }
}

TEST_CASE("unit poisson mixing constants") {
    NuSpec nu = NuSpec::unit_poisson();
    CHECK(nu.gamma() == Approx(1.0).epsilon(1e-14));
    CHECK(nu.zeta1() == Approx(1.0).epsilon(1e-14));
    CHECK(nu.zeta2() == Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(nu.symmetric());
    auto c = nu.cumulant(0.7);
    CHECK(c.real() == Approx(std::cos(0.7) - 1.0).epsilon(1e-14));
    CHECK(c.imag() == Approx(std::sin(0.7)).epsilon(1e-14));
}

TEST_CASE("custom family from tabulated density") {
    // Tabulate the CTS(1, 0.5, 0.5) density and check the custom machinery
    // reproduces moments and the laplace exponent by quadrature.
    auto ref = LevySpec::cts(1.0, 0.5, 0.5);
    std::vector<double> xs, ds;
    for (double lx = std::log(1e-9); lx <= std::log(200.0); lx += 0.01) {
        double x = std::exp(lx);
        xs.push_back(x);
        ds.push_back(ref.density(x));
    }
    auto spec = LevySpec::custom(xs, ds);
    auto m = spec.moments();
    auto mr = ref.moments();
    CHECK(m.m1 == Approx(mr.m1).epsilon(1e-4));
    CHECK(m.m2 == Approx(mr.m2).epsilon(1e-4));
    double z = 1.5;
    CHECK(spec.laplace_exponent(Complex(z, 0.0)).real() ==
          Approx(ref.laplace_exponent(Complex(z, 0.0)).real()).epsilon(1e-4));
}

TEST_CASE("spec validation rejects bad parameters") {
    CHECK_THROWS_AS(LevySpec::cts(-1.0, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(LevySpec::cts(1.0, 0.5, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(LevySpec::cts(1.0, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(LevySpec::cts(1.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(LevySpec::pt(1.0, -2.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(LevySpec::point_mass(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(charfn_mixture(BilateralSpec{LevySpec::cts(1, 0.5, 0.5), std::nullopt},
                                   NuSpec::unit_poisson(), -0.1, 1.0),
                    std::invalid_argument);
}
