#pragma once

// CSV ingestion, the analyze pipeline, report emission, JSON serialization
// of the core types and the study config file parser.

#include "sensivalue/estimators.hpp"
#include "sensivalue/niw.hpp"
#include "sensivalue/simulation.hpp"
#include "sensivalue/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sensivalue {

inline constexpr int kReportSchemaVersion = 1;

/// Malformed input, reported with its source line. Maps to exit code 1.
class DataError : public Error {
public:
    using Error::Error;
};

struct UnitRow {
    std::string event_name;
    MissingDataSample sample;
};

/// Header `event_name,y,r,propensity`. y may be empty or NA when r = 0.
std::vector<UnitRow> read_units_csv(std::istream& in, const std::string& source = "units");

/// Header `event_name,mu_source1,mu_source2`; one row per event.
std::vector<BenchmarkPair> read_benchmarks_csv(std::istream& in,
                                               const std::string& source = "benchmarks");

struct AnalyzeOptions {
    double level = 0.95;
    std::size_t n_draws = 100000;
    std::uint64_t seed = 42;
    std::vector<IntervalMethod> methods{kAllMethods.begin(), kAllMethods.end()};
    FitConfig fit;
};

struct EventReport {
    std::string event_name;
    std::size_t n = 0;
    double ipw_mean = 0.0;
    double delta_hat = 0.0;
    OutcomeSummary summary{0.5, 1.0, 0};
    std::vector<EvalueInterval> intervals;  // in AnalyzeOptions::methods order
};

struct AnalysisReport {
    AnalyzeOptions options;
    std::size_t m = 0;
    FitResult fit;
    GeneralizedT subjective{0.0, 1.0, 1.0};
    GeneralizedT objective{0.0, 1.0, 1.0};
    std::vector<EventReport> events;  // benchmark file order
    std::vector<std::string> warnings;
};

/// Pools all events into one set of sensitivity pairs, fits the prior, builds
/// both posteriors once and reports per-event intervals with per-event
/// outcome summaries. Events whose IPW mean or summary cannot be formed are
/// skipped with a warning.
AnalysisReport analyze(const std::vector<UnitRow>& units,
                       const std::vector<BenchmarkPair>& benchmarks,
                       const AnalyzeOptions& options = {});

/// Round to the given number of significant digits.
double round_significant(double x, int digits);

std::string report_to_json(const AnalysisReport& report, int precision = 6);
std::string report_to_csv(const AnalysisReport& report, int precision = 6);

/// Lossless JSON for the core types (doubles round-trip bit-exactly).
template <class T>
std::string serialize(const T& value);
template <class T>
T deserialize(const std::string& text);

/// key = value lines; '#' starts a comment. Lists are comma separated:
/// k_multipliers = 1,3,6; delta_mean = 0,0; delta_cov = xx,xy,yy.
StudyConfig parse_study_config(std::istream& in, const std::string& source = "config");

}  // namespace sensivalue
