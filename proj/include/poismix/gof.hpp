// Goodness-of-fit machinery: Kolmogorov-Smirnov and Cramer-von Mises tests
// with asymptotic p-values, null-calibration helpers, the acceptance-rate and
// p-value study runners, and diagnostic (KDE / qq) data emission.
#ifndef POISMIX_GOF_HPP
#define POISMIX_GOF_HPP

#include <poismix/bounds.hpp>
#include <poismix/inversion.hpp>
#include <poismix/levy.hpp>
#include <poismix/samplers.hpp>

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace poismix {

enum class GofTest { KS, CVM };

struct GofResult {
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    GofTest test = GofTest::KS;
};

// Shared experiment configuration. Defaults follow the study protocol of the
// reproduced tables (5000 observations per sample, 100 replications); tests
// run a reduced desk scale by overriding replications.
struct StudyConfig {
    BilateralSpec spec;
    std::vector<double> a_values;
    std::size_t n_per_sample;
    std::size_t replications;
    std::uint64_t seed;
    unsigned threads;  // worker cap; 0 resolves POISMIX_THREADS, then hardware

    explicit StudyConfig(BilateralSpec s)
        : spec(std::move(s)),
          a_values{0.5, 1e-1, 1e-2, 1e-4},
          n_per_sample(5000),
          replications(100),
          seed(0),
          threads(0) {}
};

namespace detail {

// Asymptotic Kolmogorov tail Q(t) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 t^2}.
// Below t = 1 the Jacobi theta dual of the cdf converges faster:
// P(K <= t) = (sqrt(2 pi)/t) sum_{j>=1} e^{-(2j-1)^2 pi^2 / (8 t^2)}.
inline double kolmogorov_tail(double t) {
    if (!(t > 0.0)) return 1.0;
    if (t < 1.0) {
        double c = M_PI * M_PI / (8.0 * t * t);
        double cdf = 0.0;
        for (int j = 1; j <= 9; j += 2) {
            double term = std::exp(-static_cast<double>(j) * static_cast<double>(j) * c);
            cdf += term;
            if (term < 1e-18) break;
        }
        cdf *= std::sqrt(2.0 * M_PI) / t;
        return std::min(1.0, std::max(0.0, 1.0 - cdf));
    }
    double tail = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 24; ++j) {
        double term = std::exp(-2.0 * static_cast<double>(j) * static_cast<double>(j) * t * t);
        tail += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * tail));
}

// Limiting Cramer-von Mises cdf (Smirnov form, Bessel-K series):
// V(x) = (1/(pi sqrt(x))) sum_{j>=0} c_j sqrt(4j+1) e^{-y_j} K_{1/4}(y_j),
// y_j = (4j+1)^2/(16x), c_j = Gamma(j+1/2) / (Gamma(1/2) j!).
inline double cvm_limit_cdf(double x) {
    if (!(x > 0.0)) return 0.0;
    if (x < 2e-4) return 0.0;    // leading e^{-2 y_0} below 1e-300
    if (x > 300.0) return 1.0;   // tail far beyond double resolution
    double sum = 0.0;
    double cj = 1.0;
    for (int j = 0; j < 160; ++j) {
        double m = 4.0 * static_cast<double>(j) + 1.0;
        double y = m * m / (16.0 * x);
        if (y > 340.0) break;    // e^{-y} K_{1/4}(y) ~ e^{-2y} underflows
        double term = cj * std::sqrt(m) * std::exp(-y) * boost::math::cyl_bessel_k(0.25, y);
        sum += term;
        if (j > 2 && term < sum * 1e-16) break;
        cj *= (2.0 * static_cast<double>(j) + 1.0) / (2.0 * static_cast<double>(j) + 2.0);
    }
    return std::min(1.0, sum / (M_PI * std::sqrt(x)));
}

// Reference cdf evaluated at the order statistics, with validation. The probe
// outside the sample range distinguishes a genuinely flat cdf (an error) from
// a sample concentrated on few lattice points (legitimate).
inline std::vector<double> cdf_at_order_stats(const std::vector<double>& values,
                                              const std::function<double(double)>& cdf) {
    if (values.empty()) throw std::invalid_argument("gof: empty sample");
    std::vector<double> xs = values;
    std::sort(xs.begin(), xs.end());
    double span = std::max(1.0, xs.back() - xs.front());
    double lo = cdf(xs.front() - span);
    double hi = cdf(xs.back() + span);
    if (!(hi - lo > 0.0)) {
        throw std::invalid_argument("gof: cdf is degenerate around the sample range");
    }
    std::vector<double> u(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double v = cdf(xs[i]);
        if (!std::isfinite(v) || v < -1e-9 || v > 1.0 + 1e-9) {
            throw std::invalid_argument("gof: cdf returned a value outside [0,1]");
        }
        u[i] = std::min(1.0, std::max(0.0, v));
        if (i > 0) u[i] = std::max(u[i], u[i - 1]);  // absorb quadrature wiggle
    }
    return u;
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("POISMIX_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Index-parallel loop; each body(i) owns slot i of its output, so results do
// not depend on the worker count or claim order.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
    threads = resolve_threads(threads);
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t nw = std::min<std::size_t>(threads, count);
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Reference cdf tuned for p-value studies: test statistics at study sample
// sizes resolve D ~ 1e-2, so tails, node cutoff, and grid spacing only need
// ~1e-5 accuracy.  Heavy-tailed families (pt) get a wide support; the dx cap
// keeps the cdf interpolation error in step with it.
inline ReferenceCdf study_reference(const BilateralSpec& spec) {
    ReferenceCdfOptions ro;
    ro.tail_prob = 1e-5;
    ro.phi_cut = 1e-5;
    double sd = std::sqrt(std::max(spec.m2_total(), 1e-12));
    ro.scale_hint = std::max(1.0, sd);
    ro.max_dx = 0.015 * sd;
    BilateralSpec copy = spec;
    return ReferenceCdf::build([copy](double s) { return copy.charfn(s); }, {}, ro);
}

}  // namespace detail

// One-sample Kolmogorov-Smirnov test against a continuous reference cdf;
// p-value from the asymptotic Kolmogorov distribution of sqrt(n) D_n.
inline GofResult ks_test(const SampleBatch& sample,
                         const std::function<double(double)>& cdf) {
    std::vector<double> u = detail::cdf_at_order_stats(sample.values, cdf);
    std::size_t n = u.size();
    double dn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fi = static_cast<double>(i);
        d = std::max(d, u[i] - fi / dn);
        d = std::max(d, (fi + 1.0) / dn - u[i]);
    }
    GofResult r;
    r.statistic = d;
    r.p_value = detail::kolmogorov_tail(std::sqrt(dn) * d);
    r.n = n;
    r.test = GofTest::KS;
    return r;
}

// One-sample Cramer-von Mises test: W^2 = 1/(12n) + sum (F(x_(i)) - (2i-1)/(2n))^2,
// p-value from the limiting W^2 distribution.
inline GofResult cvm_test(const SampleBatch& sample,
                          const std::function<double(double)>& cdf) {
    std::vector<double> u = detail::cdf_at_order_stats(sample.values, cdf);
    std::size_t n = u.size();
    double dn = static_cast<double>(n);
    double w2 = 1.0 / (12.0 * dn);
    for (std::size_t i = 0; i < n; ++i) {
        double diff = u[i] - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * dn);
        w2 += diff * diff;
    }
    GofResult r;
    r.statistic = w2;
    r.p_value = std::min(1.0, std::max(0.0, 1.0 - detail::cvm_limit_cdf(w2)));
    r.n = n;
    r.test = GofTest::CVM;
    return r;
}

// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with the effective
// sample size n1 n2 / (n1 + n2)); used to compare sampler variants.
inline GofResult ks_two_sample(const SampleBatch& first, const SampleBatch& second) {
    if (first.values.empty() || second.values.empty()) {
        throw std::invalid_argument("gof: empty sample");
    }
    std::vector<double> xs = first.values;
    std::vector<double> ys = second.values;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double n1 = static_cast<double>(xs.size());
    double n2 = static_cast<double>(ys.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < xs.size() && j < ys.size()) {
        double x = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= x) ++i;
        while (j < ys.size() && ys[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    GofResult r;
    r.statistic = d;
    r.p_value = detail::kolmogorov_tail(std::sqrt(n1 * n2 / (n1 + n2)) * d);
    r.n = xs.size() + ys.size();
    r.test = GofTest::KS;
    return r;
}

// Quantile of a precomputed reference cdf by bisection on its support grid.
inline double reference_quantile(const ReferenceCdf& ref, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("gof: quantile level outside (0,1)");
    }
    double lo = ref.x_lo(), hi = ref.x_hi();
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo) + std::abs(hi));
         ++it) {
        double mid = 0.5 * (lo + hi);
        (ref.cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Mean KS / CVM p-values of lattice samples against the continuous limit law,
// one row per lattice scale. Replications run on independent substreams (in
// parallel when threads allow); the aggregate depends only on the seed.
struct GofStudyRow {
    double a = 0.0;
    double ks_mean = 0.0;
    double cvm_mean = 0.0;
    std::size_t replications = 0;
};

inline std::vector<GofStudyRow> run_gof_study(const StudyConfig& config,
                                              const ReferenceCdf* reference = nullptr,
                                              std::uint64_t stream_base = 0) {
    if (config.replications < 1) {
        throw std::invalid_argument("gof: replications must be at least 1");
    }
    ReferenceCdf local = reference ? ReferenceCdf()
                                   : detail::study_reference(config.spec);
    const ReferenceCdf& ref = reference ? *reference : local;
    auto cdf = [&ref](double x) { return ref.cdf(x); };
    NuSpec nu = NuSpec::unit_poisson();
    RandomSource root(config.seed);
    std::vector<GofStudyRow> rows;
    rows.reserve(config.a_values.size());
    for (std::size_t ai = 0; ai < config.a_values.size(); ++ai) {
        double a = config.a_values[ai];
        RandomSource cell = root.substream(stream_base + ai);
        std::vector<double> ks_p(config.replications), cvm_p(config.replications);
        detail::parallel_for(config.replications, config.threads, [&](std::size_t r) {
            SampleBatch batch = sample_bilateral(config.spec, nu, a,
                                                 config.n_per_sample, cell.substream(r));
            ks_p[r] = ks_test(batch, cdf).p_value;
            cvm_p[r] = cvm_test(batch, cdf).p_value;
        });
        GofStudyRow row;
        row.a = a;
        row.replications = config.replications;
        for (std::size_t r = 0; r < config.replications; ++r) {
            row.ks_mean += ks_p[r];
            row.cvm_mean += cvm_p[r];
        }
        row.ks_mean /= static_cast<double>(config.replications);
        row.cvm_mean /= static_cast<double>(config.replications);
        rows.push_back(row);
    }
    return rows;
}

// Acceptance-probability table: deterministic probabilities of the two mixing
// rejection routes next to Monte Carlo rates, for the symmetric study family
// (c = 1, l = 0.5) over alpha x a. n_per_sample is the proposal budget of the
// Monte Carlo columns.
struct Table1Row {
    double alpha = 0.0;
    double a = 0.0;
    double alg4 = 0.0;
    double alg5 = 0.0;
    double alg4_mc = 0.0;
    double alg5_mc = 0.0;
};

inline std::vector<Table1Row> run_table1(const StudyConfig& config) {
    const double alphas[] = {0.25, 0.5, 0.75};
    RandomSource root(config.seed);
    std::vector<Table1Row> rows;
    rows.reserve(3 * config.a_values.size());
    std::uint64_t row_id = 0;
    for (double alpha : alphas) {
        LevySpec spec = LevySpec::cts(1.0, 0.5, alpha);
        for (double a : config.a_values) {
            Table1Row row;
            row.alpha = alpha;
            row.a = a;
            AcceptanceProbs probs = acceptance_probabilities(spec, a);
            row.alg4 = probs.alg4;
            row.alg5 = probs.alg5;
            RandomSource cell = root.substream(row_id++);
            RejectionStats s4;
            RandomSource r4 = cell.substream(0);
            while (s4.proposals < config.n_per_sample) {
                sample_m2_alg4(spec, a, r4, 1000000, &s4);
            }
            row.alg4_mc = s4.rate();
            RejectionStats s5;
            RandomSource r5 = cell.substream(1);
            while (s5.proposals < config.n_per_sample) {
                sample_m2_alg5(spec, a, r5, 1000000, &s5);
            }
            row.alg5_mc = s5.rate();
            rows.push_back(row);
        }
    }
    return rows;
}

// Mean p-value table over the two symmetric study families (CTS with l = 0.5,
// PT with l = 1, both c = 1) for alpha in {0.25, 0.5, 0.75} and the scales in
// config.a_values, against the inverted continuous limit of each family.
struct Table2Row {
    std::string family;
    double alpha = 0.0;
    double a = 0.0;
    double ks_mean = 0.0;
    double cvm_mean = 0.0;
    std::size_t replications = 0;
};

inline std::vector<Table2Row> run_table2(const StudyConfig& config) {
    const double alphas[] = {0.25, 0.5, 0.75};
    const char* families[] = {"cts", "pt"};
    std::vector<Table2Row> rows;
    rows.reserve(6 * config.a_values.size());
    for (std::size_t fi = 0; fi < 2; ++fi) {
        for (std::size_t mi = 0; mi < 3; ++mi) {
            LevySpec side = fi == 0 ? LevySpec::cts(1.0, 0.5, alphas[mi])
                                    : LevySpec::pt(1.0, 1.0, alphas[mi]);
            StudyConfig cell(BilateralSpec{side, side});
            cell.a_values = config.a_values;
            cell.n_per_sample = config.n_per_sample;
            cell.replications = config.replications;
            cell.seed = config.seed;
            cell.threads = config.threads;
            ReferenceCdf ref = detail::study_reference(cell.spec);
            std::uint64_t base = (fi * 3 + mi) * config.a_values.size();
            std::vector<GofStudyRow> study = run_gof_study(cell, &ref, base);
            for (const GofStudyRow& s : study) {
                Table2Row row;
                row.family = families[fi];
                row.alpha = alphas[mi];
                row.a = s.a;
                row.ks_mean = s.ks_mean;
                row.cvm_mean = s.cvm_mean;
                row.replications = s.replications;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

// Diagnostic data behind the density and qq plots: a Gaussian KDE (Silverman
// bandwidth) against the reference density on a quantile-trimmed grid, and
// order-statistic qq pairs. Returns the paths written.
inline std::vector<std::string> emit_diagnostics(const SampleBatch& sample,
                                                 const ReferenceCdf& ref,
                                                 const std::string& out_prefix) {
    if (sample.values.empty()) throw std::invalid_argument("gof: empty sample");
    std::vector<double> xs = sample.values;
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    double dn = static_cast<double>(n);

    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= dn;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= std::max(1.0, dn - 1.0);
    double iqr = xs[static_cast<std::size_t>(0.75 * (dn - 1.0))] -
                 xs[static_cast<std::size_t>(0.25 * (dn - 1.0))];
    double sd = std::sqrt(var);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = std::max(sd, 1e-3);
    double h = 0.9 * spread * std::pow(dn, -0.2);
    if (!(h > 0.0)) h = 1e-3;

    double glo = reference_quantile(ref, 0.005);
    double ghi = reference_quantile(ref, 0.995);
    const int grid_n = 257;

    char line[128];
    std::string density_path = out_prefix + "_density.csv";
    std::ofstream density(density_path);
    if (!density) throw std::runtime_error("gof: cannot open " + density_path);
    density << "grid,kde,reference_pdf\n";
    double inv_h = 1.0 / h;
    double norm = 1.0 / (dn * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_n; ++g) {
        double x = glo + (ghi - glo) * static_cast<double>(g) / (grid_n - 1);
        double kde = 0.0;
        for (double xi : xs) {
            double z = (x - xi) * inv_h;
            if (std::abs(z) < 8.0) kde += std::exp(-0.5 * z * z);
        }
        kde *= norm;
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", x, kde, ref.pdf(x));
        density << line;
    }
    density.close();

    std::string qq_path = out_prefix + "_qq.csv";
    std::ofstream qq(qq_path);
    if (!qq) throw std::runtime_error("gof: cannot open " + qq_path);
    qq << "theoretical_quantile,empirical_quantile\n";
    for (std::size_t i = 0; i < n; ++i) {
        double p = (static_cast<double>(i) + 0.5) / dn;
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", reference_quantile(ref, p),
                      xs[i]);
        qq << line;
    }
    qq.close();
    return {density_path, qq_path};
}

}  // namespace poismix

#endif  // POISMIX_GOF_HPP
