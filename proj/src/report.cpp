#include "sensivalue/report.hpp"

#include "sensivalue/evalue.hpp"
#include "sensivalue/parallel.hpp"
#include "sensivalue/posterior.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace sensivalue {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(trim(field));
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Reads the header and the data records, skipping blank lines.
template <class RowFn>
void read_csv(std::istream& in, const std::string& source, const std::vector<std::string>& header,
              RowFn on_row) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (!have_header) {
            if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
            if (fields != header) {
                std::string expected;
                for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
                fail(source, lineno, "expected header '" + expected + "'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != header.size()) {
            fail(source, lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        on_row(fields, lineno);
    }
    if (!have_header) fail(source, lineno, "missing header");
}

ordered_json interval_json(const EvalueInterval& iv, int precision) {
    ordered_json j;
    j["method"] = method_tag(iv.method());
    j["lower"] = round_significant(iv.lower(), precision);
    j["upper"] = round_significant(iv.upper(), precision);
    j["level"] = iv.level();
    j["singular_fallback"] = iv.singular_fallback();
    return j;
}

ordered_json t_json(const GeneralizedT& t, int precision) {
    return {{"location", round_significant(t.location(), precision)},
            {"scale", round_significant(t.scale(), precision)},
            {"df", round_significant(t.df(), precision)}};
}

std::string format_number(double x, int precision) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

// Lossless JSON forms of the core types.
json to_j(const Vec2& v) { return json::array({v.x, v.y}); }
json to_j(const SymMat2& m) { return json::array({m.xx, m.xy, m.yy}); }
Vec2 vec2_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
SymMat2 sym_of(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json to_j(const MissingDataSample& s) {
    return {{"y", s.y()}, {"r", s.observed() ? 1 : 0}, {"propensity", s.propensity()}};
}
json to_j(const SensitivityPairs& p) {
    json rows = json::array();
    for (const auto& r : p.rows()) rows.push_back(to_j(r));
    return {{"rows", rows}};
}
json to_j(const NiwHyperparams& h) {
    return {{"delta0", h.delta0()}, {"psi", to_j(h.psi())}, {"nu", h.nu()}};
}
json to_j(const GeneralizedT& t) {
    return {{"location", t.location()}, {"scale", t.scale()}, {"df", t.df()}};
}
json to_j(const OutcomeSummary& s) {
    return {{"p_obs", s.p_obs()}, {"sd_y", s.sd_y()}, {"n", s.n()}};
}
json to_j(const EvalueInterval& iv) {
    return {{"lower", iv.lower()},
            {"upper", iv.upper()},
            {"method", method_tag(iv.method())},
            {"level", iv.level()},
            {"singular_fallback", iv.singular_fallback()}};
}
json to_j(const EvalueDensityParams& p) {
    json j{{"variant", variant_tag(p.variant())}, {"validity_warning", p.validity_warning()}};
    if (p.is_gamma()) {
        j["alpha"] = p.alpha();
        j["beta_v"] = p.rate();
    } else {
        j["mu_rr"] = p.mu_rr();
        j["sigma_rr"] = p.sigma_rr();
    }
    return j;
}

// The JSON library writes doubles in shortest round-trip form; non-finite
// values have no JSON encoding.
template <class T>
std::string dump_checked(const T& value) {
    const std::string s = to_j(value).dump();
    if (s.find("null") != std::string::npos) throw Error("non-finite value cannot be serialized");
    return s;
}

template <class T>
T parse_checked(const std::string& text, T (*build)(const json&)) {
    try {
        return build(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed serialized value: ") + e.what());
    }
}

}  // namespace

std::vector<UnitRow> read_units_csv(std::istream& in, const std::string& source) {
    std::vector<UnitRow> rows;
    read_csv(in, source, {"event_name", "y", "r", "propensity"},
             [&](const std::vector<std::string>& f, std::size_t line) {
                 if (f[0].empty()) fail(source, line, "empty event_name");
                 int r = 0;
                 if (f[2] == "1") {
                     r = 1;
                 } else if (f[2] != "0") {
                     fail(source, line, "r must be 0 or 1, got '" + f[2] + "'");
                 }
                 const auto pi = parse_double(f[3]);
                 if (!pi) fail(source, line, "propensity is not a number: '" + f[3] + "'");
                 double y = std::numeric_limits<double>::quiet_NaN();
                 if (r == 1 || !(f[1].empty() || f[1] == "NA")) {
                     const auto yv = parse_double(f[1]);
                     if (!yv) fail(source, line, "y is not a number: '" + f[1] + "'");
                     y = *yv;
                 }
                 try {
                     rows.push_back({f[0], MissingDataSample(y, r == 1, *pi)});
                 } catch (const Error& e) {
                     fail(source, line, e.what());
                 }
             });
    return rows;
}

std::vector<BenchmarkPair> read_benchmarks_csv(std::istream& in, const std::string& source) {
    std::vector<BenchmarkPair> rows;
    read_csv(in, source, {"event_name", "mu_source1", "mu_source2"},
             [&](const std::vector<std::string>& f, std::size_t line) {
                 if (f[0].empty()) fail(source, line, "empty event_name");
                 const auto a = parse_double(f[1]);
                 const auto b = parse_double(f[2]);
                 if (!a || !std::isfinite(*a)) fail(source, line, "mu_source1 is not a finite number");
                 if (!b || !std::isfinite(*b)) fail(source, line, "mu_source2 is not a finite number");
                 rows.push_back({f[0], *a, *b});
             });
    return rows;
}

AnalysisReport analyze(const std::vector<UnitRow>& units,
                       const std::vector<BenchmarkPair>& benchmarks,
                       const AnalyzeOptions& options) {
    if (benchmarks.empty()) throw DataError("no benchmark groups");
    if (options.methods.empty()) throw Error("no interval methods selected");
    AnalysisReport report;
    report.options = options;

    std::map<std::string, std::vector<MissingDataSample>> by_event;
    std::vector<std::string> unit_order;
    for (const auto& u : units) {
        auto [it, inserted] = by_event.try_emplace(u.event_name);
        if (inserted) unit_order.push_back(u.event_name);
        it->second.push_back(u.sample);
    }

    std::vector<GroupMean> means;
    std::vector<BenchmarkPair> kept;
    std::map<std::string, double> mean_of;
    for (const auto& name : unit_order) {
        try {
            const double mu = ipw_mean(by_event.at(name));
            means.push_back({name, mu});
            mean_of[name] = mu;
        } catch (const Error& e) {
            report.warnings.push_back("skipping event '" + name + "': " + e.what());
        }
    }
    for (const auto& b : benchmarks) {
        if (by_event.contains(b.group_id) && !mean_of.contains(b.group_id)) continue;
        kept.push_back(b);
    }
    const SensitivityPairs pairs = sensitivity_pairs(means, kept);
    report.m = pairs.m();
    report.fit = fit_hyperparams(pairs, options.fit);
    report.subjective = subjective_posterior(pairs, report.fit.hyper);
    report.objective = objective_posterior(pairs);

    auto wants = [&](IntervalMethod m) {
        return std::find(options.methods.begin(), options.methods.end(), m) != options.methods.end();
    };
    std::vector<double> subj_draws;
    std::vector<double> obj_draws;
    if (wants(IntervalMethod::SubjectiveBayes)) {
        subj_draws = sample_delta(report.subjective, options.n_draws, derive_seed(options.seed, 0, 1));
    }
    if (wants(IntervalMethod::ObjectiveBayes)) {
        obj_draws = sample_delta(report.objective, options.n_draws, derive_seed(options.seed, 0, 2));
    }
    if ((wants(IntervalMethod::SubjectiveBayes) || wants(IntervalMethod::ObjectiveBayes)) &&
        options.n_draws < 1000) {
        report.warnings.push_back("fewer than 1000 posterior draws; credible bounds are noisy");
    }

    std::vector<std::optional<EventReport>> rows(kept.size());
    std::vector<std::string> row_warnings(kept.size());
    parallel_for(kept.size(), [&](std::size_t i) {
        const BenchmarkPair& b = kept[i];
        const auto& data = by_event.at(b.group_id);
        try {
            EventReport r;
            r.event_name = b.group_id;
            r.n = data.size();
            r.ipw_mean = mean_of.at(b.group_id);
            r.delta_hat = r.ipw_mean - 0.5 * (b.mu_source1 + b.mu_source2);
            r.summary = outcome_summary(data);
            for (IntervalMethod m : options.methods) {
                switch (m) {
                    case IntervalMethod::TaylorSeries:
                        r.intervals.push_back(
                            taylor_series_interval(data, r.summary, r.delta_hat, options.level));
                        break;
                    case IntervalMethod::PoissonSampling:
                        r.intervals.push_back(
                            poisson_sampling_interval(data, r.summary, r.delta_hat, options.level));
                        break;
                    case IntervalMethod::SubjectiveBayes:
                        r.intervals.push_back(credible_interval(
                            evalue_posterior_from_draws(subj_draws, r.summary, options.seed),
                            options.level, m));
                        break;
                    case IntervalMethod::ObjectiveBayes:
                        r.intervals.push_back(credible_interval(
                            evalue_posterior_from_draws(obj_draws, r.summary, options.seed),
                            options.level, m));
                        break;
                }
            }
            rows[i] = std::move(r);
        } catch (const Error& e) {
            row_warnings[i] = "no intervals for event '" + b.group_id + "': " + e.what();
        }
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) report.events.push_back(std::move(*rows[i]));
        if (!row_warnings[i].empty()) report.warnings.push_back(row_warnings[i]);
    }
    return report;
}

double round_significant(double x, int digits) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

std::string report_to_json(const AnalysisReport& r, int precision) {
    auto num = [precision](double x) { return round_significant(x, precision); };
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["level"] = r.options.level;
    j["n_draws"] = r.options.n_draws;
    j["seed"] = r.options.seed;
    j["m"] = r.m;
    const auto& h = r.fit.hyper;
    j["prior"] = {{"delta0", num(h.delta0())},
                  {"psi", {num(h.psi().xx), num(h.psi().xy), num(h.psi().yy)}},
                  {"nu", num(h.nu())},
                  {"objective", num(r.fit.objective)},
                  {"psi_convex_at_nu", r.fit.psi_convex_at_nu},
                  {"delta0_on_boundary", r.fit.delta0_on_boundary},
                  {"convexity_region_empty", r.fit.convexity_region_empty}};
    j["posteriors"] = {{"subjective", t_json(r.subjective, precision)},
                       {"objective", t_json(r.objective, precision)}};
    ordered_json events = ordered_json::array();
    for (const auto& e : r.events) {
        ordered_json ej;
        ej["event_name"] = e.event_name;
        ej["n"] = e.n;
        ej["p_obs"] = num(e.summary.p_obs());
        ej["sd_y"] = num(e.summary.sd_y());
        ej["ipw_mean"] = num(e.ipw_mean);
        ej["delta_hat"] = num(e.delta_hat);
        ordered_json ivs = ordered_json::array();
        for (const auto& iv : e.intervals) ivs.push_back(interval_json(iv, precision));
        ej["intervals"] = ivs;
        events.push_back(ej);
    }
    j["events"] = events;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const AnalysisReport& r, int precision) {
    std::ostringstream os;
    os << "event_name,n,p_obs,sd_y,ipw_mean,delta_hat";
    for (auto m : r.options.methods) os << ',' << method_tag(m) << "_lower," << method_tag(m) << "_upper";
    os << '\n';
    for (const auto& e : r.events) {
        os << csv_field(e.event_name) << ',' << e.n << ',' << format_number(e.summary.p_obs(), precision)
           << ',' << format_number(e.summary.sd_y(), precision) << ','
           << format_number(e.ipw_mean, precision) << ',' << format_number(e.delta_hat, precision);
        for (const auto& iv : e.intervals) {
            os << ',' << format_number(iv.lower(), precision) << ','
               << format_number(iv.upper(), precision);
        }
        os << '\n';
    }
    return os.str();
}

// Serialization.

#define SENSIVALUE_SERIALIZE(T)                              \
    template <>                                              \
    std::string serialize<T>(const T& value) {               \
        return dump_checked(value);                          \
    }
SENSIVALUE_SERIALIZE(Vec2)
SENSIVALUE_SERIALIZE(SymMat2)
SENSIVALUE_SERIALIZE(MissingDataSample)
SENSIVALUE_SERIALIZE(SensitivityPairs)
SENSIVALUE_SERIALIZE(NiwHyperparams)
SENSIVALUE_SERIALIZE(GeneralizedT)
SENSIVALUE_SERIALIZE(OutcomeSummary)
SENSIVALUE_SERIALIZE(EvalueInterval)
SENSIVALUE_SERIALIZE(EvalueDensityParams)
#undef SENSIVALUE_SERIALIZE

template <>
Vec2 deserialize<Vec2>(const std::string& t) {
    return parse_checked<Vec2>(t, [](const json& j) { return vec2_of(j); });
}
template <>
SymMat2 deserialize<SymMat2>(const std::string& t) {
    return parse_checked<SymMat2>(t, [](const json& j) { return sym_of(j); });
}
template <>
MissingDataSample deserialize<MissingDataSample>(const std::string& t) {
    return parse_checked<MissingDataSample>(t, [](const json& j) {
        return MissingDataSample(j.at("y").get<double>(), j.at("r").get<int>() == 1,
                                 j.at("propensity").get<double>());
    });
}
template <>
SensitivityPairs deserialize<SensitivityPairs>(const std::string& t) {
    return parse_checked<SensitivityPairs>(t, [](const json& j) {
        std::vector<Vec2> rows;
        for (const auto& r : j.at("rows")) rows.push_back(vec2_of(r));
        return SensitivityPairs(std::move(rows));
    });
}
template <>
NiwHyperparams deserialize<NiwHyperparams>(const std::string& t) {
    return parse_checked<NiwHyperparams>(t, [](const json& j) {
        return NiwHyperparams(j.at("delta0").get<double>(), sym_of(j.at("psi")),
                              j.at("nu").get<double>());
    });
}
template <>
GeneralizedT deserialize<GeneralizedT>(const std::string& t) {
    return parse_checked<GeneralizedT>(t, [](const json& j) {
        return GeneralizedT(j.at("location").get<double>(), j.at("scale").get<double>(),
                            j.at("df").get<double>());
    });
}
template <>
OutcomeSummary deserialize<OutcomeSummary>(const std::string& t) {
    return parse_checked<OutcomeSummary>(t, [](const json& j) {
        return OutcomeSummary(j.at("p_obs").get<double>(), j.at("sd_y").get<double>(),
                              j.at("n").get<std::size_t>());
    });
}
template <>
EvalueInterval deserialize<EvalueInterval>(const std::string& t) {
    return parse_checked<EvalueInterval>(t, [](const json& j) {
        return EvalueInterval(j.at("lower").get<double>(), j.at("upper").get<double>(),
                              method_from_tag(j.at("method").get<std::string>()),
                              j.at("level").get<double>(), j.at("singular_fallback").get<bool>());
    });
}
template <>
EvalueDensityParams deserialize<EvalueDensityParams>(const std::string& t) {
    return parse_checked<EvalueDensityParams>(t, [](const json& j) {
        const DensityVariant v = variant_from_tag(j.at("variant").get<std::string>());
        const bool warn = j.at("validity_warning").get<bool>();
        if (v == DensityVariant::Thm3) {
            return EvalueDensityParams::gamma(j.at("alpha").get<double>(),
                                              j.at("beta_v").get<double>(), warn);
        }
        return EvalueDensityParams::log_normal(v, j.at("mu_rr").get<double>(),
                                               j.at("sigma_rr").get<double>(), warn);
    });
}

StudyConfig parse_study_config(std::istream& in, const std::string& source) {
    StudyConfig c;
    std::string line;
    std::size_t lineno = 0;
    auto numbers = [&](const std::string& value, std::size_t count) {
        std::vector<double> out;
        for (const auto& f : split_csv(value)) {
            const auto d = parse_double(f);
            if (!d) fail(source, lineno, "not a number: '" + f + "'");
            out.push_back(*d);
        }
        if (count && out.size() != count) {
            fail(source, lineno, "expected " + std::to_string(count) + " values");
        }
        return out;
    };
    auto count = [&](const std::string& value) {
        const double d = numbers(value, 1)[0];
        if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) {
            fail(source, lineno, "expected a non-negative integer, got '" + value + "'");
        }
        return static_cast<std::size_t>(d);
    };
    auto real = [&](const std::string& value) { return numbers(value, 1)[0]; };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "n_units") {
            c.n_units = count(value);
        } else if (key == "k_multipliers") {
            c.k_multipliers.clear();
            for (double d : numbers(value, 0)) {
                if (!(d >= 1.0) || d != std::floor(d)) fail(source, lineno, "k must be a positive integer");
                c.k_multipliers.push_back(static_cast<std::size_t>(d));
            }
        } else if (key == "n_trials") {
            c.n_trials = count(value);
        } else if (key == "m_groups") {
            c.m_groups = count(value);
        } else if (key == "delta_mean") {
            const auto v = numbers(value, 2);
            c.delta_mean = {v[0], v[1]};
        } else if (key == "delta_cov") {
            const auto v = numbers(value, 3);
            c.delta_cov = {v[0], v[1], v[2]};
        } else if (key == "level") {
            c.level = real(value);
        } else if (key == "master_seed" || key == "seed") {
            std::uint64_t s = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
            if (ec != std::errc() || ptr != value.data() + value.size()) {
                fail(source, lineno, "seed must be an unsigned integer");
            }
            c.master_seed = s;
        } else if (key == "n_draws") {
            c.n_draws = count(value);
        } else if (key == "outcome_mean") {
            c.outcome_mean = real(value);
        } else if (key == "outcome_sd") {
            c.outcome_sd = real(value);
        } else if (key == "propensity_a") {
            c.propensity_a = real(value);
        } else if (key == "propensity_b") {
            c.propensity_b = real(value);
        } else if (key == "propensity_floor") {
            c.propensity_floor = real(value);
        } else if (key == "nu_grid_min") {
            c.fit.nu_grid_min = real(value);
        } else if (key == "nu_grid_max_per_group") {
            c.fit.nu_grid_max_per_group = real(value);
        } else if (key == "nu_grid_points") {
            c.fit.nu_grid_points = count(value);
        } else if (key == "max_iterations") {
            c.fit.max_iterations = count(value);
        } else {
            fail(source, lineno, "unknown key '" + key + "'");
        }
    }
    try {
        c.validate();
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(source + ": " + e.what());
    }
    return c;
}

}  // namespace sensivalue
