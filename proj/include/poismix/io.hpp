// Serialization: the versioned JSON spec schema plus CSV/JSON emitters for
// samples, pmf tables, bound reports, study tables, and rate studies. All
// writers are deterministic byte for byte given the same inputs.
#ifndef POISMIX_IO_HPP
#define POISMIX_IO_HPP

#include <poismix/bounds.hpp>
#include <poismix/gof.hpp>
#include <poismix/levy.hpp>
#include <poismix/samplers.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poismix {

inline constexpr const char* kSpecSchema = "poismix/1";

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot open " + path);
    return out;
}

}  // namespace detail

// ---- JSON spec schema ------------------------------------------------------

inline nlohmann::json levy_to_json(const LevySpec& spec) {
    using nlohmann::json;
    switch (spec.family()) {
        case Family::Cts:
            return json{{"family", "cts"}, {"c", spec.c()}, {"l", spec.l()},
                        {"alpha", spec.alpha()}};
        case Family::Pt:
            return json{{"family", "pt"}, {"c", spec.c()}, {"l", spec.l()},
                        {"alpha", spec.alpha()}};
        case Family::PointMass:
            return json{{"family", "point_mass"}, {"lambda", spec.pm_lambda()},
                        {"atom", spec.pm_atom()}};
        case Family::Custom:
            return json{{"family", "custom"}, {"x", spec.custom_x()},
                        {"density", spec.custom_density()}};
    }
    throw std::logic_error("io: unreachable family");
}

inline LevySpec levy_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("io: spec entry must be a JSON object");
    std::string family = j.value("family", std::string());
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number()) {
            throw std::invalid_argument(std::string("io: spec field missing or non-numeric: ") + key);
        }
        return j.at(key).get<double>();
    };
    if (family == "cts") return LevySpec::cts(num("c"), num("l"), num("alpha"));
    if (family == "pt") return LevySpec::pt(num("c"), num("l"), num("alpha"));
    if (family == "point_mass") return LevySpec::point_mass(num("lambda"), num("atom"));
    if (family == "custom") {
        if (!j.contains("x") || !j.contains("density") || !j.at("x").is_array() ||
            !j.at("density").is_array()) {
            throw std::invalid_argument("io: custom spec needs x and density arrays");
        }
        return LevySpec::custom(j.at("x").get<std::vector<double>>(),
                                j.at("density").get<std::vector<double>>());
    }
    throw std::invalid_argument("io: unknown family: \"" + family + "\"");
}

// One-sided specs serialize flat; bilateral ones carry plus/minus objects.
inline nlohmann::json spec_to_json(const BilateralSpec& spec) {
    nlohmann::json j;
    if (spec.one_sided()) {
        j = levy_to_json(spec.plus);
    } else {
        j["plus"] = levy_to_json(spec.plus);
        j["minus"] = levy_to_json(*spec.minus);
    }
    j["schema"] = kSpecSchema;
    return j;
}

inline BilateralSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("io: spec must be a JSON object");
    if (j.value("schema", std::string()) != kSpecSchema) {
        throw std::invalid_argument(std::string("io: spec schema must be \"") + kSpecSchema +
                                    "\"");
    }
    if (j.contains("family")) {
        return BilateralSpec{levy_from_json(j), std::nullopt};
    }
    if (!j.contains("plus")) {
        throw std::invalid_argument("io: spec needs a top-level family or a plus side");
    }
    std::optional<LevySpec> minus;
    if (j.contains("minus") && !j.at("minus").is_null()) {
        minus = levy_from_json(j.at("minus"));
    }
    return BilateralSpec{levy_from_json(j.at("plus")), std::move(minus)};
}

inline BilateralSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("io: malformed JSON in " + path + ": " + e.what());
    }
    return spec_from_json(j);
}

inline void save_spec(const BilateralSpec& spec, const std::string& path) {
    std::ofstream out = detail::open_out(path);
    out << spec_to_json(spec).dump(2) << "\n";
}

// ---- samples ----------------------------------------------------------------

inline void write_sample_csv(const SampleBatch& batch, const nlohmann::json& spec_json,
                             std::ostream& out) {
    out << "# spec=" << spec_json.dump() << " a=" << detail::fmt17(batch.a)
        << " seed=" << batch.seed << "\n";
    for (double v : batch.values) out << detail::fmt17(v) << "\n";
}

inline nlohmann::json sample_to_json(const SampleBatch& batch,
                                     const nlohmann::json& spec_json) {
    return nlohmann::json{{"schema", kSpecSchema},
                          {"spec", spec_json},
                          {"a", batch.a},
                          {"seed", batch.seed},
                          {"values", batch.values}};
}

// ---- pmf tables -------------------------------------------------------------

inline void write_pmf_csv(const PmfTable& table, std::ostream& out) {
    out << "k,x,p,cumulative\n";
    for (std::size_t k = 0; k < table.p.size(); ++k) {
        out << k << ',' << detail::fmt17(table.a * static_cast<double>(k)) << ','
            << detail::fmt17(table.p[k]) << ',' << detail::fmt17(table.cumulative[k])
            << "\n";
    }
}

inline nlohmann::json pmf_to_json(const PmfTable& table) {
    return nlohmann::json{{"schema", kSpecSchema},
                          {"a", table.a},
                          {"p", table.p},
                          {"cumulative", table.cumulative}};
}

// ---- study tables -----------------------------------------------------------

inline void write_table1_csv(const std::vector<Table1Row>& rows, std::ostream& out) {
    out << "alpha,a,alg4,alg5,alg4_mc,alg5_mc\n";
    for (const Table1Row& r : rows) {
        out << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.a) << ','
            << detail::fmt17(r.alg4) << ',' << detail::fmt17(r.alg5) << ','
            << detail::fmt17(r.alg4_mc) << ',' << detail::fmt17(r.alg5_mc) << "\n";
    }
}

inline nlohmann::json table1_to_json(const std::vector<Table1Row>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Table1Row& r : rows) {
        arr.push_back({{"alpha", r.alpha},
                       {"a", r.a},
                       {"alg4", r.alg4},
                       {"alg5", r.alg5},
                       {"alg4_mc", r.alg4_mc},
                       {"alg5_mc", r.alg5_mc}});
    }
    return nlohmann::json{{"schema", kSpecSchema}, {"table", "acceptance"}, {"rows", arr}};
}

inline void write_table2_csv(const std::vector<Table2Row>& rows, std::ostream& out) {
    out << "family,alpha,a,ks_mean,cvm_mean,replications\n";
    for (const Table2Row& r : rows) {
        out << r.family << ',' << detail::fmt17(r.alpha) << ',' << detail::fmt17(r.a)
            << ',' << detail::fmt17(r.ks_mean) << ',' << detail::fmt17(r.cvm_mean) << ','
            << r.replications << "\n";
    }
}

inline nlohmann::json table2_to_json(const std::vector<Table2Row>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Table2Row& r : rows) {
        arr.push_back({{"family", r.family},
                       {"alpha", r.alpha},
                       {"a", r.a},
                       {"ks_mean", r.ks_mean},
                       {"cvm_mean", r.cvm_mean},
                       {"replications", r.replications}});
    }
    return nlohmann::json{{"schema", kSpecSchema}, {"table", "pvalues"}, {"rows", arr}};
}

inline void write_study_csv(const std::vector<GofStudyRow>& rows, std::ostream& out) {
    out << "a,ks_mean,cvm_mean,replications\n";
    for (const GofStudyRow& r : rows) {
        out << detail::fmt17(r.a) << ',' << detail::fmt17(r.ks_mean) << ','
            << detail::fmt17(r.cvm_mean) << ',' << r.replications << "\n";
    }
}

inline nlohmann::json study_to_json(const std::vector<GofStudyRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const GofStudyRow& r : rows) {
        arr.push_back({{"a", r.a},
                       {"ks_mean", r.ks_mean},
                       {"cvm_mean", r.cvm_mean},
                       {"replications", r.replications}});
    }
    return nlohmann::json{{"schema", kSpecSchema}, {"table", "gof"}, {"rows", arr}};
}

// ---- bound reports ------------------------------------------------------------

inline void write_bounds_csv(const BoundReport& report, std::ostream& out) {
    out << "a,p,formula,value,exact\n";
    for (const BoundRow& r : report) {
        out << detail::fmt17(r.a) << ',' << detail::fmt17(r.p) << ',' << r.formula << ','
            << detail::fmt17(r.value) << ',' << detail::fmt17(r.exact) << "\n";
    }
}

inline nlohmann::json bounds_to_json(const BoundReport& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const BoundRow& r : report) {
        arr.push_back({{"a", r.a},
                       {"p", r.p},
                       {"formula", r.formula},
                       {"value", r.value},
                       {"exact", r.exact}});
    }
    return nlohmann::json{{"schema", kSpecSchema}, {"table", "bounds"}, {"rows", arr}};
}

// ---- rate studies --------------------------------------------------------------

struct RateStudyRow {
    double a = 0.0;
    double exact = 0.0;
    double linf_bound = 0.0;
    double rate_bound = 0.0;
};

inline void write_rate_study_csv(const std::vector<RateStudyRow>& rows, double slope,
                                 std::ostream& out) {
    out << "# slope=" << detail::fmt17(slope) << "\n";
    out << "a,exact_kolmogorov,linf_bound,rate_bound\n";
    for (const RateStudyRow& r : rows) {
        out << detail::fmt17(r.a) << ',' << detail::fmt17(r.exact) << ','
            << detail::fmt17(r.linf_bound) << ',' << detail::fmt17(r.rate_bound) << "\n";
    }
}

inline nlohmann::json rate_study_to_json(const std::vector<RateStudyRow>& rows,
                                         double slope) {
    nlohmann::json arr = nlohmann::json::array();
    for (const RateStudyRow& r : rows) {
        arr.push_back({{"a", r.a},
                       {"exact_kolmogorov", r.exact},
                       {"linf_bound", r.linf_bound},
                       {"rate_bound", r.rate_bound}});
    }
    return nlohmann::json{
        {"schema", kSpecSchema}, {"table", "rate"}, {"slope", slope}, {"rows", arr}};
}

}  // namespace poismix

#endif  // POISMIX_IO_HPP
