// Command-line surface for the poismix library: sampling, pmf tables, error
// bounds, acceptance probabilities, goodness-of-fit studies, and the study
// tables. Exit codes: 0 success, 2 usage error, 1 numeric failure.
#include <poismix/io.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

using namespace poismix;

namespace {

constexpr const char* kTickHelp =
    "lattice scale a (the tick size: the approximant lives on the grid a*Z)";

BilateralSpec load_spec_checked(const std::string& path) {
    try {
        return load_spec(path);
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--spec", e.what());
    }
}

// Output sink: --out FILE or stdout. Files open in binary mode so identical
// invocations produce byte-identical artifacts on every platform.
struct Sink {
    std::ofstream file;
    std::ostream* stream = nullptr;

    explicit Sink(const std::string& path) {
        if (path.empty()) {
            stream = &std::cout;
        } else {
            file.open(path, std::ios::binary);
            if (!file) throw std::runtime_error("io: cannot open " + path);
            stream = &file;
        }
    }
    std::ostream& out() { return *stream; }
};

void emit_json(Sink& sink, const nlohmann::json& j) { sink.out() << j.dump(2) << "\n"; }

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "poismix: approximate simulation of (bilateral) subordinators by scaled\n"
        "Poisson mixtures on the lattice a*Z, with explicit error bounds.\n"
        "The scale a is the tick size of the approximating lattice."};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    std::string format = "csv";
    std::string algo = "auto";
    double a = 0.0;
    double p_index = 2.0;
    std::size_t n = 5000;
    std::size_t kmax = 64;
    std::size_t replications = 20;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool with_exact = false;
    std::vector<double> a_grid;

    auto add_common = [&](CLI::App* sub, bool needs_spec) {
        if (needs_spec) {
            sub->add_option("--spec", spec_path,
                            "JSON spec file (schema \"poismix/1\"): a one-sided family "
                            "or {plus, minus} sides")
                ->required();
        }
        sub->add_option("--out", out_path, "output file (default: stdout)");
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
        return sub;
    };

    CLI::App* sample = add_common(
        app.add_subcommand("sample", "Draw n approximate variates on the lattice a*Z"),
        true);
    sample->add_option("--a", a, kTickHelp)->required()->check(CLI::PositiveNumber);
    sample->add_option("--n", n, "number of variates");
    sample->add_option("--seed", seed, "random seed (identical seeds give identical output)");
    sample->add_option("--algo", algo,
                       "sampling route: compound (jump-by-jump), inverse (pmf inverse "
                       "transform), auto = compound")
        ->check(CLI::IsMember({"auto", "compound", "inverse"}));

    CLI::App* pmf = add_common(
        app.add_subcommand("pmf", "Print the lattice pmf of a one-sided approximant"),
        true);
    pmf->add_option("--a", a, kTickHelp)->required()->check(CLI::PositiveNumber);
    pmf->add_option("--kmax", kmax, "largest lattice index k (support point x = a*k)");

    CLI::App* bounds = add_common(
        app.add_subcommand("bounds",
                           "Evaluate the closed-form approximation error bounds at a"),
        true);
    bounds->add_option("--a", a, kTickHelp)->required()->check(CLI::PositiveNumber);
    bounds->add_option("--p", p_index, "Wasserstein-like index p of the L^p bounds");
    bounds->add_flag("--exact", with_exact,
                     "also compute the exact Kolmogorov distance (slow at small a)");

    CLI::App* accept = add_common(
        app.add_subcommand("accept",
                           "Deterministic acceptance probabilities of the two mixing "
                           "rejection routes"),
        true);
    accept->add_option("--a", a, kTickHelp)->required()->check(CLI::PositiveNumber);

    CLI::App* gof = add_common(
        app.add_subcommand("gof",
                           "Mean KS/CVM p-values of lattice samples against the "
                           "continuous limit, over a grid of scales"),
        true);
    gof->add_option("--a-grid", a_grid, std::string(kTickHelp) + "; one value per row")
        ->delimiter(',');
    gof->add_option("--n", n, "observations per sample");
    gof->add_option("--replications", replications,
                    "samples per scale (20 = desk scale, 100 = full study)");
    gof->add_option("--seed", seed, "random seed");
    gof->add_option("--threads", threads,
                    "worker cap for replications (0: POISMIX_THREADS, then hardware); "
                    "results are identical for every value");

    CLI::App* table1 = add_common(
        app.add_subcommand("table1",
                           "Acceptance-probability table (deterministic and Monte "
                           "Carlo columns) for the symmetric study family"),
        false);
    table1->add_option("--a-grid", a_grid, std::string(kTickHelp) + "; one value per row")
        ->delimiter(',');
    table1->add_option("--n", n, "Monte Carlo proposal budget per entry")
        ->default_val(std::size_t{100000});
    table1->add_option("--seed", seed, "random seed");

    CLI::App* table2 = add_common(
        app.add_subcommand("table2",
                           "Mean p-value table for the CTS and PT symmetric study "
                           "families over alpha x a"),
        false);
    table2->add_option("--a-grid", a_grid, std::string(kTickHelp) + "; one value per row")
        ->delimiter(',');
    table2->add_option("--n", n, "observations per sample");
    table2->add_option("--replications", replications,
                       "samples per cell (20 = desk scale, 100 = full study)");
    table2->add_option("--seed", seed, "random seed");
    table2->add_option("--threads", threads,
                       "worker cap for replications (0: POISMIX_THREADS, then "
                       "hardware); results are identical for every value");

    CLI::App* rate = add_common(
        app.add_subcommand("rate-study",
                           "Exact Kolmogorov distance and bounds over a scale grid, "
                           "with the fitted log-log decay slope"),
        true);
    rate->add_option("--a-grid", a_grid, std::string(kTickHelp) + "; one value per row")
        ->delimiter(',');

    sample->callback([&] {
        BilateralSpec spec = load_spec_checked(spec_path);
        NuSpec nu = NuSpec::unit_poisson();
        SampleBatch batch;
        if (algo == "inverse") {
            DiscretizedMeasure dm_plus = DiscretizedMeasure::build(spec.plus, a, 1e-12);
            if (spec.one_sided()) {
                batch = sample_inverse(dm_plus, n, RandomSource(seed));
            } else {
                DiscretizedMeasure dm_minus =
                    DiscretizedMeasure::build(*spec.minus, a, 1e-12);
                batch = sample_bilateral_inverse(dm_plus, &dm_minus, n,
                                                 RandomSource(seed));
            }
        } else {
            batch = sample_bilateral(spec, nu, a, n, RandomSource(seed));
        }
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, sample_to_json(batch, spec_to_json(spec)));
        } else {
            write_sample_csv(batch, spec_to_json(spec), sink.out());
        }
    });

    pmf->callback([&] {
        BilateralSpec spec = load_spec_checked(spec_path);
        if (!spec.one_sided()) {
            throw CLI::ValidationError("--spec",
                                       "pmf needs a one-sided spec (lattice support a*k, "
                                       "k >= 0)");
        }
        DiscretizedMeasure dm = DiscretizedMeasure::build(spec.plus, a, 1e-12);
        PmfTable table = pmf_recursive(dm, kmax);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, pmf_to_json(table));
        } else {
            write_pmf_csv(table, sink.out());
        }
    });

    bounds->callback([&] {
        BilateralSpec spec = load_spec_checked(spec_path);
        NuSpec nu = NuSpec::unit_poisson();
        BoundInputs in = make_bound_inputs(spec, nu);
        in.a = a;
        in.p = p_index;
        double exact = std::numeric_limits<double>::quiet_NaN();
        if (with_exact) {
            exact = exact_kolmogorov(spec, nu, a).value;
        }
        BoundReport report;
        auto push = [&](const char* formula, double value, double exact_value) {
            BoundRow row;
            row.a = a;
            row.p = p_index;
            row.formula = formula;
            row.value = value;
            row.exact = exact_value;
            report.push_back(row);
        };
        double nan = std::numeric_limits<double>::quiet_NaN();
        push("smoothing_linf", smoothing_linf(in), exact);
        push("smoothing_l1", smoothing_l1(in), nan);
        push("smoothing_lp", smoothing_lp(in, p_index), nan);
        if (std::isfinite(in.A)) {
            push("ts_rate", ts_rate(spec, in).bound, exact);
        }
        push("bound_without_r0", bound_without_r0(in, p_index), nan);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, bounds_to_json(report));
        } else {
            write_bounds_csv(report, sink.out());
        }
    });

    accept->callback([&] {
        BilateralSpec spec = load_spec_checked(spec_path);
        if (!spec.one_sided()) {
            throw CLI::ValidationError("--spec",
                                       "accept reports per-side probabilities; pass a "
                                       "one-sided spec");
        }
        AcceptanceProbs probs = acceptance_probabilities(spec.plus, a);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, nlohmann::json{{"schema", kSpecSchema},
                                           {"a", a},
                                           {"alg4", probs.alg4},
                                           {"alg5", probs.alg5}});
        } else {
            char line[64];
            std::snprintf(line, sizeof line, "alg4=%.4f alg5=%.4f\n", probs.alg4,
                          probs.alg5);
            sink.out() << line;
        }
    });

    gof->callback([&] {
        StudyConfig cfg(load_spec_checked(spec_path));
        if (!a_grid.empty()) cfg.a_values = a_grid;
        cfg.n_per_sample = n;
        cfg.replications = replications;
        cfg.seed = seed;
        cfg.threads = threads;
        std::vector<GofStudyRow> rows = run_gof_study(cfg);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, study_to_json(rows));
        } else {
            write_study_csv(rows, sink.out());
        }
    });

    table1->callback([&] {
        StudyConfig cfg(BilateralSpec{LevySpec::cts(1.0, 0.5, 0.5), std::nullopt});
        if (!a_grid.empty()) cfg.a_values = a_grid;
        cfg.n_per_sample = n;
        cfg.seed = seed;
        std::vector<Table1Row> rows = run_table1(cfg);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, table1_to_json(rows));
        } else {
            write_table1_csv(rows, sink.out());
        }
    });

    table2->callback([&] {
        StudyConfig cfg(BilateralSpec{LevySpec::cts(1.0, 0.5, 0.5), std::nullopt});
        if (!a_grid.empty()) cfg.a_values = a_grid;
        cfg.n_per_sample = n;
        cfg.replications = replications;
        cfg.seed = seed;
        cfg.threads = threads;
        std::vector<Table2Row> rows = run_table2(cfg);
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, table2_to_json(rows));
        } else {
            write_table2_csv(rows, sink.out());
        }
    });

    rate->callback([&] {
        BilateralSpec spec = load_spec_checked(spec_path);
        NuSpec nu = NuSpec::unit_poisson();
        std::vector<double> grid = a_grid;
        if (grid.empty()) {
            for (int k = 4; k <= 12; ++k) grid.push_back(std::pow(2.0, -k));
        }
        BoundInputs base = make_bound_inputs(spec, nu);
        ExactDistanceOptions opts;
        ReferenceCdf ref = reference_cdf(spec, opts);
        opts.reference = &ref;
        std::vector<RateStudyRow> rows;
        std::vector<double> log_a, log_d;
        for (double ai : grid) {
            RateStudyRow row;
            row.a = ai;
            row.exact = exact_kolmogorov(spec, nu, ai, opts).value;
            BoundInputs in = base;
            in.a = ai;
            row.linf_bound = smoothing_linf(in);
            row.rate_bound = std::isfinite(in.A)
                                 ? ts_rate(spec, in).bound
                                 : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
            if (row.exact > 0.0) {
                log_a.push_back(std::log(ai));
                log_d.push_back(std::log(row.exact));
            }
        }
        double slope = log_a.size() >= 2 ? fit_slope(log_a, log_d)
                                         : std::numeric_limits<double>::quiet_NaN();
        Sink sink(out_path);
        if (format == "json") {
            emit_json(sink, rate_study_to_json(rows, slope));
        } else {
            write_rate_study_csv(rows, slope, sink.out());
        }
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "poismix: error: " << e.what() << "\n";
        return 1;
    }
}
