#pragma once

// Samplers for the lattice approximation law: direct inverse-transform on the
// recursive pmf, the compound route (Poisson count, rejection-sampled mixing
// draw, zero-truncated Poisson), bilateral recombination, and the
// normal-variance-mixture sampler. All draws are reproducible given a seed,
// independent of batching or thread count, via per-draw substreams.

#include <poismix/discretize.hpp>
#include <poismix/levy.hpp>
#include <poismix/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace poismix {

struct SampleBatch {
    std::vector<double> values;
    double a = 0.0;
    std::string spec_id;
    std::uint64_t seed = 0;
};

struct PmfTable {
    double a = 0.0;
    std::vector<double> p;           // p[k] = P(Y_a = a k), k >= 0
    std::vector<double> cumulative;  // running sums of p
};

namespace detail {

// Incremental evaluation of the lattice pmf: p_0 = e^{-ell_plus} and
// p_k = (1/k) sum_{j<k} w_{k-j} p_j with w_m = ell_m / (m-1)!. Nonnegative
// terms only, so the recursion is numerically benign; long double guards the
// long convolutions. Beyond the stored ell-table the jump masses are treated
// as zero, so the result is the pmf of the truncated measure (accurate to the
// build tolerance of the table).
class PmfBuilder {
public:
    explicit PmfBuilder(const DiscretizedMeasure& dm) {
        w_.reserve(dm.log_ell.size());
        for (std::size_t m = 1; m <= dm.log_ell.size(); ++m) {
            w_.push_back(std::exp(static_cast<long double>(dm.log_ell[m - 1]) -
                                  std::lgamma(static_cast<long double>(m))));
        }
        p_.push_back(std::exp(-static_cast<long double>(dm.ell_plus)));
        peak_ = p_[0];
        cum_.push_back(static_cast<double>(p_[0]));
    }

    // Extends the table by one index; returns false once the next term has
    // fallen past the pmf mode below the underflow cutoff.
    bool extend() {
        std::size_t k = p_.size();
        std::size_t j_lo = k > w_.size() ? k - w_.size() : 0;
        long double acc = 0.0L;
        for (std::size_t j = j_lo; j < k; ++j) {
            acc += w_[k - j - 1] * p_[j];
        }
        long double pk = acc / static_cast<long double>(k);
        if (pk < 1e-300L && pk < peak_) return false;
        peak_ = std::max(peak_, pk);
        p_.push_back(pk);
        cum_.push_back(cum_.back() + static_cast<double>(pk));
        return true;
    }

    std::size_t size() const { return p_.size(); }
    double p(std::size_t k) const { return static_cast<double>(p_[k]); }
    double cum(std::size_t k) const { return cum_[k]; }
    double cum_back() const { return cum_.back(); }

private:
    std::vector<long double> w_;
    std::vector<long double> p_;
    std::vector<double> cum_;
    long double peak_ = 0.0L;
};

// Shared inverse-transform kernel over a lazily extended pmf table; returns
// the lattice index.
inline long long inverse_index(PmfBuilder& b, double u) {
    while (b.cum_back() <= u) {
        if (!b.extend()) {
            throw std::runtime_error(
                "sample_inverse: pmf table exhausted before covering a draw "
                "(heavy tail; use the compound sampler)");
        }
    }
    std::size_t lo = 0, hi = b.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (b.cum(mid) > u) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return static_cast<long long>(lo);
}

inline std::string spec_tag(const LevySpec& spec) {
    std::ostringstream os;
    switch (spec.family()) {
        case Family::Cts:
            os << "cts(c=" << spec.c() << ",l=" << spec.l() << ",alpha=" << spec.alpha()
               << ")";
            break;
        case Family::Pt:
            os << "pt(c=" << spec.c() << ",l=" << spec.l() << ",alpha=" << spec.alpha()
               << ")";
            break;
        case Family::PointMass:
            os << "pointmass(lambda=" << spec.pm_lambda() << ",x=" << spec.pm_atom()
               << ")";
            break;
        case Family::Custom:
            os << "custom";
            break;
    }
    return os.str();
}

}  // namespace detail

inline PmfTable pmf_recursive(const DiscretizedMeasure& dm, std::size_t k_max) {
    if (!dm.has_table()) {
        throw std::invalid_argument("pmf_recursive: measure built without a table");
    }
    detail::PmfBuilder b(dm);
    while (b.size() <= k_max && b.extend()) {
    }
    PmfTable t;
    t.a = dm.a;
    std::size_t n = std::min<std::size_t>(b.size(), k_max + 1);
    t.p.reserve(n);
    t.cumulative.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        t.p.push_back(b.p(k));
        t.cumulative.push_back(b.cum(k));
    }
    return t;
}

// Algorithm: inverse transform directly on the lattice pmf, with the table
// extended lazily to cover each uniform draw.
inline SampleBatch sample_inverse(const DiscretizedMeasure& dm, std::size_t n,
                                  RandomSource rng) {
    if (!dm.has_table()) {
        throw std::invalid_argument("sample_inverse: measure built without a table");
    }
    detail::PmfBuilder b(dm);
    SampleBatch batch;
    batch.a = dm.a;
    batch.seed = rng.seed();
    batch.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomSource sub = rng.substream(i);
        batch.values.push_back(
            dm.a * static_cast<double>(detail::inverse_index(b, sub.u01())));
    }
    return batch;
}

// Deterministic acceptance probabilities of the two rejection samplers for
// the mixing law; the gamma-proposal route exists only under exponential
// domination of the tempering (closed form for the exponential kernel).
struct AcceptanceProbs {
    double alg4 = std::numeric_limits<double>::quiet_NaN();
    double alg5 = std::numeric_limits<double>::quiet_NaN();
};

inline AcceptanceProbs acceptance_probabilities(const LevySpec& spec, double a) {
    if (!spec.has_ts_structure()) {
        throw std::domain_error(
            "acceptance_probabilities: requires a tempered-stable family");
    }
    double alpha = spec.alpha();
    double ka = std::pow(a, alpha) * ell_plus(spec, a) / spec.eta();
    AcceptanceProbs probs;
    probs.alg4 = ka * alpha * (1.0 - alpha) / spec.cg();
    if (spec.family() == Family::Cts) {
        double zeta = a / spec.l();
        probs.alg5 = ka * std::pow(zeta, 1.0 - alpha) / std::tgamma(1.0 - alpha);
    }
    return probs;
}

// Proposal/acceptance tallies of the rejection samplers, for empirical
// acceptance-rate checks.
struct RejectionStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double rate() const {
        return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals)
                         : 0.0;
    }
};

// Rejection sampler for the mixing law with the two-piece power proposal
// V = U1^{1/(1-alpha)} U2^{-1/alpha} (density proportional to (v ^ 1) v^{-1-alpha});
// accepts with phi1(v) = g(av)(1 - e^{-v}) / ((v ^ 1) C_g). Returns the draw
// on the original jump scale (aV).
inline double sample_m2_alg4(const LevySpec& spec, double a, RandomSource& rng,
                             std::size_t max_iter = 1000000,
                             RejectionStats* stats = nullptr) {
    if (!spec.has_ts_structure()) {
        throw std::domain_error("sample_m2_alg4: requires a tempered-stable family");
    }
    double alpha = spec.alpha();
    double inv_cg = 1.0 / spec.cg();
    for (std::size_t it = 0; it < max_iter; ++it) {
        double v = std::pow(rng.u01(), 1.0 / (1.0 - alpha)) *
                   std::pow(rng.u01(), -1.0 / alpha);
        double phi1 = inv_cg * spec.gt(a * v) * -std::expm1(-v) / std::min(v, 1.0);
        if (stats) ++stats->proposals;
        if (rng.u01() <= phi1) {
            if (stats) ++stats->accepted;
            return a * v;
        }
    }
    throw std::runtime_error("sample_m2_alg4: rejection loop exceeded max iterations");
}

// Rejection sampler with a gamma proposal, available when the rescaled
// tempering obeys g(av) <= C e^{-zeta v^p}; the exponential kernel gives
// p = 1, C = 1, zeta = a/l exactly, so phi2(v) = (1 - e^{-v})/v.
inline double sample_m2_alg5(const LevySpec& spec, double a, RandomSource& rng,
                             std::size_t max_iter = 1000000,
                             RejectionStats* stats = nullptr) {
    if (spec.family() != Family::Cts) {
        throw std::domain_error(
            "sample_m2_alg5: gamma-proposal route requires exponential tempering");
    }
    double alpha = spec.alpha();
    double zeta = a / spec.l();
    for (std::size_t it = 0; it < max_iter; ++it) {
        double v = sample_gamma(1.0 - alpha, zeta, rng);
        if (v <= 0.0) continue;
        // Domination check; exact equality for the exponential kernel, so a
        // violation indicates inconsistent parameters.
        double ratio = spec.gt(a * v) * std::exp(zeta * v);
        if (ratio > 1.0 + 1e-9) {
            throw std::runtime_error(
                "sample_m2_alg5: tempering not dominated by the gamma envelope");
        }
        double phi2 = ratio * -std::expm1(-v) / v;
        if (stats) ++stats->proposals;
        if (rng.u01() <= phi2) {
            if (stats) ++stats->accepted;
            return a * v;
        }
    }
    throw std::runtime_error("sample_m2_alg5: rejection loop exceeded max iterations");
}

enum class M2Route { Auto, PowerProposal, GammaProposal };

namespace detail {

inline M2Route pick_m2_route(const LevySpec& spec, double a) {
    if (spec.family() != Family::Cts) return M2Route::PowerProposal;
    auto probs = acceptance_probabilities(spec, a);
    return probs.alg5 >= probs.alg4 ? M2Route::GammaProposal : M2Route::PowerProposal;
}

// One compound draw as a lattice index: N jumps, each a zero-truncated
// Poisson count at a mixing intensity drawn on the rescaled (lattice) scale.
// A point-mass measure needs no rejection step: its mixing law is the atom
// itself. Returning the integer count keeps differences of draws exactly on
// the lattice.
inline long long compound_count(const LevySpec& spec, double a, double lp,
                                M2Route route, RandomSource& rng) {
    long long n = sample_poisson(lp, rng);
    long long total = 0;
    for (long long i = 0; i < n; ++i) {
        double lambda;
        if (spec.family() == Family::PointMass) {
            lambda = spec.pm_atom() / a;
        } else if (route == M2Route::GammaProposal) {
            lambda = sample_m2_alg5(spec, a, rng) / a;
        } else {
            lambda = sample_m2_alg4(spec, a, rng) / a;
        }
        total += sample_ztpois(lambda, rng);
    }
    return total;
}

}  // namespace detail

// Compound sampler: N ~ Pois(ell_plus) jumps, each jump a * ZTPois(lambda)
// with lambda drawn from the rescaled mixing law; the rejection route is fixed
// per call by the larger deterministic acceptance probability.
inline SampleBatch sample_compound(const DiscretizedMeasure& dm, const LevySpec& spec,
                                   double a, std::size_t n, RandomSource rng,
                                   M2Route route = M2Route::Auto) {
    if (dm.a != a) {
        throw std::invalid_argument("sample_compound: dm and a disagree");
    }
    if (route == M2Route::Auto) route = detail::pick_m2_route(spec, a);
    SampleBatch batch;
    batch.a = a;
    batch.seed = rng.seed();
    batch.spec_id = detail::spec_tag(spec);
    batch.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomSource sub = rng.substream(i);
        batch.values.push_back(
            a * static_cast<double>(
                    detail::compound_count(spec, a, dm.ell_plus, route, sub)));
    }
    return batch;
}

// Difference of two independent one-sided draws on the common lattice.
inline SampleBatch sample_bilateral(const BilateralSpec& bspec, const NuSpec& nu,
                                    double a, std::size_t n, RandomSource rng,
                                    M2Route route = M2Route::Auto) {
    if (nu.kind() != NuSpec::Kind::UnitPoisson) {
        throw std::invalid_argument(
            "sample_bilateral: lattice recombination requires the unit-Poisson nu");
    }
    double lp_plus = ell_plus(bspec.plus, a);
    double lp_minus = bspec.minus ? ell_plus(*bspec.minus, a) : 0.0;
    M2Route route_plus =
        route == M2Route::Auto ? detail::pick_m2_route(bspec.plus, a) : route;
    M2Route route_minus =
        bspec.minus
            ? (route == M2Route::Auto ? detail::pick_m2_route(*bspec.minus, a) : route)
            : M2Route::Auto;
    SampleBatch batch;
    batch.a = a;
    batch.seed = rng.seed();
    batch.spec_id = detail::spec_tag(bspec.plus) +
                    (bspec.minus ? "-" + detail::spec_tag(*bspec.minus) : "");
    batch.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomSource sub = rng.substream(i);
        RandomSource sub_plus = sub.substream(0);
        long long k =
            detail::compound_count(bspec.plus, a, lp_plus, route_plus, sub_plus);
        if (bspec.minus) {
            RandomSource sub_minus = sub.substream(1);
            k -= detail::compound_count(*bspec.minus, a, lp_minus, route_minus,
                                        sub_minus);
        }
        batch.values.push_back(a * static_cast<double>(k));
    }
    return batch;
}

// Inverse-transform variant of the bilateral sampler: one pmf table per side,
// draws differenced on the common lattice.
inline SampleBatch sample_bilateral_inverse(const DiscretizedMeasure& dm_plus,
                                            const DiscretizedMeasure* dm_minus,
                                            std::size_t n, RandomSource rng) {
    if (!dm_plus.has_table() || (dm_minus && !dm_minus->has_table())) {
        throw std::invalid_argument(
            "sample_bilateral_inverse: measures built without tables");
    }
    if (dm_minus && dm_minus->a != dm_plus.a) {
        throw std::invalid_argument("sample_bilateral_inverse: lattice scales differ");
    }
    detail::PmfBuilder b_plus(dm_plus);
    std::optional<detail::PmfBuilder> b_minus;
    if (dm_minus) b_minus.emplace(*dm_minus);
    SampleBatch batch;
    batch.a = dm_plus.a;
    batch.seed = rng.seed();
    batch.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomSource sub = rng.substream(i);
        RandomSource sub_plus = sub.substream(0);
        long long k = detail::inverse_index(b_plus, sub_plus.u01());
        if (b_minus) {
            RandomSource sub_minus = sub.substream(1);
            k -= detail::inverse_index(*b_minus, sub_minus.u01());
        }
        batch.values.push_back(dm_plus.a * static_cast<double>(k));
    }
    return batch;
}

struct NvmOptions {
    double a_inner = 0.0;  // 0 picks the default a^2
};

// Normal variance mixture approximant sqrt(a/gamma*) Z(X/a) with Z a
// Rademacher compound Poisson; X itself is approximated by the compound
// sampler at a much finer inner scale.
inline SampleBatch sample_nvm(const LevySpec& spec, const NuSpec& nu, double a,
                              std::size_t n, RandomSource rng, NvmOptions opts = {}) {
    if (!nu.symmetric() || !(nu.gamma_star() > 0.0)) {
        throw std::invalid_argument(
            "sample_nvm: requires a symmetric jump law with positive second moment");
    }
    double a_inner = opts.a_inner > 0.0 ? opts.a_inner : a * a;
    double lp_inner = ell_plus(spec, a_inner);
    M2Route route = detail::pick_m2_route(spec, a_inner);
    double step = std::sqrt(a / nu.gamma_star());
    SampleBatch batch;
    batch.a = a;
    batch.seed = rng.seed();
    batch.spec_id = detail::spec_tag(spec) + "-nvm";
    batch.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomSource sub = rng.substream(i);
        double x = a_inner * static_cast<double>(detail::compound_count(
                                 spec, a_inner, lp_inner, route, sub));
        long long count = sample_poisson(x / a, sub);
        long long z = sample_signed_steps(count, sub);
        batch.values.push_back(step * static_cast<double>(z));
    }
    return batch;
}

}  // namespace poismix
