#include "sensivalue/density.hpp"
#include "sensivalue/estimators.hpp"
#include "sensivalue/evalue.hpp"
#include "sensivalue/niw.hpp"
#include "sensivalue/parallel.hpp"
#include "sensivalue/posterior.hpp"
#include "sensivalue/report.hpp"
#include "sensivalue/simulation.hpp"

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <tuple>

namespace py = pybind11;
using namespace sensivalue;

namespace {

using Mat = std::tuple<double, double, double>;  // (xx, xy, yy)

SymMat2 to_mat(const Mat& m) { return {std::get<0>(m), std::get<1>(m), std::get<2>(m)}; }
Mat from_mat(const SymMat2& m) { return {m.xx, m.xy, m.yy}; }

SensitivityPairs to_pairs(const std::vector<std::pair<double, double>>& rows) {
    std::vector<Vec2> v;
    v.reserve(rows.size());
    for (const auto& [x, y] : rows) v.push_back({x, y});
    return SensitivityPairs(std::move(v));
}

py::array_t<double> to_array(std::span<const double> xs) {
    py::array_t<double> out(static_cast<py::ssize_t>(xs.size()));
    std::copy(xs.begin(), xs.end(), out.mutable_data());
    return out;
}

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open file");
    return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "E-value sensitivity analysis for missing-not-at-random outcomes";

    static py::exception<Error> error(m, "Error", PyExc_ValueError);
    static py::exception<DataError> data_error(m, "DataError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::enum_<IntervalMethod>(m, "IntervalMethod")
        .value("TAYLOR", IntervalMethod::TaylorSeries)
        .value("POISSON", IntervalMethod::PoissonSampling)
        .value("SUBJECTIVE", IntervalMethod::SubjectiveBayes)
        .value("OBJECTIVE", IntervalMethod::ObjectiveBayes)
        .def_property_readonly("tag", [](IntervalMethod v) { return method_tag(v); });

    py::enum_<DensityVariant>(m, "DensityVariant")
        .value("THM1", DensityVariant::Thm1)
        .value("THM2", DensityVariant::Thm2)
        .value("THM3", DensityVariant::Thm3);

    py::enum_<Branch>(m, "Branch").value("RR_GT_1", Branch::RRgt1).value("RR_LT_1", Branch::RRlt1);

    py::enum_<Thm3Rate>(m, "Thm3Rate")
        .value("DERIVED", Thm3Rate::Derived)
        .value("AS_PRINTED", Thm3Rate::AsPrinted);

    py::class_<MissingDataSample>(m, "MissingDataSample")
        .def(py::init<double, bool, double>(), py::arg("y"), py::arg("observed"), py::arg("propensity"))
        .def_property_readonly("y", &MissingDataSample::y)
        .def_property_readonly("observed", &MissingDataSample::observed)
        .def_property_readonly("propensity", &MissingDataSample::propensity)
        .def(py::self == py::self);

    py::class_<OutcomeSummary>(m, "OutcomeSummary")
        .def(py::init<double, double, std::size_t>(), py::arg("p_obs"), py::arg("sd_y"), py::arg("n"))
        .def_property_readonly("p_obs", &OutcomeSummary::p_obs)
        .def_property_readonly("sd_y", &OutcomeSummary::sd_y)
        .def_property_readonly("n", &OutcomeSummary::n)
        .def("__repr__", [](const OutcomeSummary& s) {
            return "OutcomeSummary(p_obs=" + std::to_string(s.p_obs()) +
                   ", sd_y=" + std::to_string(s.sd_y()) + ", n=" + std::to_string(s.n()) + ")";
        });

    py::class_<GeneralizedT>(m, "GeneralizedT")
        .def(py::init<double, double, double>(), py::arg("location"), py::arg("scale"), py::arg("df"))
        .def_property_readonly("location", &GeneralizedT::location)
        .def_property_readonly("scale", &GeneralizedT::scale)
        .def_property_readonly("df", &GeneralizedT::df)
        .def("pdf", &GeneralizedT::pdf)
        .def("log_pdf", &GeneralizedT::log_pdf)
        .def("cdf", &GeneralizedT::cdf)
        .def("quantile", &GeneralizedT::quantile)
        .def("__repr__", [](const GeneralizedT& t) {
            return "GeneralizedT(location=" + std::to_string(t.location()) +
                   ", scale=" + std::to_string(t.scale()) + ", df=" + std::to_string(t.df()) + ")";
        });

    py::class_<NiwHyperparams>(m, "NiwHyperparams")
        .def(py::init([](double delta0, const Mat& psi, double nu) {
                 return NiwHyperparams(delta0, to_mat(psi), nu);
             }),
             py::arg("delta0"), py::arg("psi"), py::arg("nu"))
        .def_property_readonly("delta0", &NiwHyperparams::delta0)
        .def_property_readonly("psi", [](const NiwHyperparams& h) { return from_mat(h.psi()); })
        .def_property_readonly("nu", &NiwHyperparams::nu);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("hyper", &FitResult::hyper)
        .def_readonly("objective", &FitResult::objective)
        .def_readonly("psi_convex_at_nu", &FitResult::psi_convex_at_nu)
        .def_readonly("delta0_on_boundary", &FitResult::delta0_on_boundary)
        .def_readonly("convexity_region_empty", &FitResult::convexity_region_empty);

    py::class_<EvalueInterval>(m, "EvalueInterval")
        .def_property_readonly("lower", &EvalueInterval::lower)
        .def_property_readonly("upper", &EvalueInterval::upper)
        .def_property_readonly("width", &EvalueInterval::width)
        .def_property_readonly("method", &EvalueInterval::method)
        .def_property_readonly("level", &EvalueInterval::level)
        .def_property_readonly("singular_fallback", &EvalueInterval::singular_fallback)
        .def_property_readonly("contains_null", &EvalueInterval::contains_null)
        .def("__repr__", [](const EvalueInterval& i) {
            return "EvalueInterval(" + method_tag(i.method()) + ", lower=" + std::to_string(i.lower()) +
                   ", upper=" + std::to_string(i.upper()) + ")";
        });

    py::class_<EvalueDensityParams>(m, "EvalueDensityParams")
        .def_static("log_normal", &EvalueDensityParams::log_normal, py::arg("variant"), py::arg("mu_rr"),
                    py::arg("sigma_rr"), py::arg("validity_warning") = false)
        .def_static("gamma", &EvalueDensityParams::gamma, py::arg("alpha"), py::arg("rate"),
                    py::arg("validity_warning") = false)
        .def_property_readonly("variant", &EvalueDensityParams::variant)
        .def_property_readonly("is_gamma", &EvalueDensityParams::is_gamma)
        .def_property_readonly("mu_rr", &EvalueDensityParams::mu_rr)
        .def_property_readonly("sigma_rr", &EvalueDensityParams::sigma_rr)
        .def_property_readonly("alpha", &EvalueDensityParams::alpha)
        .def_property_readonly("rate", &EvalueDensityParams::rate)
        .def_property_readonly("validity_warning", &EvalueDensityParams::validity_warning);

    // Estimators
    m.def("ipw_mean", [](const std::vector<MissingDataSample>& s) { return ipw_mean(s); });
    m.def("outcome_summary", [](const std::vector<MissingDataSample>& s) { return outcome_summary(s); });
    m.def("taylor_variance", [](const std::vector<MissingDataSample>& s) { return taylor_variance(s); });
    m.def("poisson_variance", [](const std::vector<MissingDataSample>& s) { return poisson_variance(s); });
    m.def(
        "taylor_series_interval",
        [](const std::vector<MissingDataSample>& s, const OutcomeSummary& summary, double delta_hat,
           double level) { return taylor_series_interval(s, summary, delta_hat, level); },
        py::arg("samples"), py::arg("summary"), py::arg("delta_hat"), py::arg("level") = 0.95);
    m.def(
        "poisson_sampling_interval",
        [](const std::vector<MissingDataSample>& s, const OutcomeSummary& summary, double delta_hat,
           double level) { return poisson_sampling_interval(s, summary, delta_hat, level); },
        py::arg("samples"), py::arg("summary"), py::arg("delta_hat"), py::arg("level") = 0.95);

    // Prior fit and posteriors; pairs are sequences of (x, y) rows.
    m.def("fit_hyperparams", [](const std::vector<std::pair<double, double>>& rows) {
        return fit_hyperparams(to_pairs(rows));
    });
    m.def("select_nu", [](std::size_t groups) { return select_nu(groups, FitConfig{}); });
    m.def("subjective_posterior", [](const std::vector<std::pair<double, double>>& rows,
                                     const NiwHyperparams& hyper) {
        return subjective_posterior(to_pairs(rows), hyper);
    });
    m.def("objective_posterior", [](const std::vector<std::pair<double, double>>& rows) {
        return objective_posterior(to_pairs(rows));
    });
    m.def(
        "sample_delta",
        [](const GeneralizedT& post, std::size_t n, std::uint64_t seed) {
            return to_array(sample_delta(post, n, seed));
        },
        py::arg("posterior"), py::arg("n_draws"), py::arg("seed"));

    // E-values
    m.def("evalue_from_rr", &evalue_from_rr, py::arg("rr"));
    m.def("evalue_from_log_rr", &evalue_from_log_rr, py::arg("log_rr"));
    m.def("standardized_effect", &standardized_effect, py::arg("delta"), py::arg("summary"));
    m.def("rr_from_effect", &rr_from_effect, py::arg("mu_missing"));
    m.def(
        "posterior_evalues",
        [](const GeneralizedT& post, const OutcomeSummary& summary, std::size_t n, std::uint64_t seed) {
            const auto ep = posterior_evalue(post, summary, n, seed);
            return to_array(ep.samples());
        },
        py::arg("posterior"), py::arg("summary"), py::arg("n_draws"), py::arg("seed"));
    m.def(
        "credible_interval",
        [](const GeneralizedT& post, const OutcomeSummary& summary, std::size_t n, std::uint64_t seed,
           double level, IntervalMethod method) {
            return credible_interval(posterior_evalue(post, summary, n, seed), level, method);
        },
        py::arg("posterior"), py::arg("summary"), py::arg("n_draws"), py::arg("seed"),
        py::arg("level") = 0.95, py::arg("method") = IntervalMethod::SubjectiveBayes);

    // Closed-form densities
    m.def("params_thm1", &params_thm1, py::arg("eta"), py::arg("tau"), py::arg("p_obs"), py::arg("sd_y"));
    m.def("params_thm2", &params_thm2, py::arg("eta"), py::arg("tau"), py::arg("mu_q"), py::arg("sigma_q"),
          py::arg("sd_y"));
    m.def("params_thm3", &params_thm3, py::arg("eta"), py::arg("tau"), py::arg("mu_q"), py::arg("sigma_q"),
          py::arg("alpha"), py::arg("beta"), py::arg("rate") = kThm3DefaultRate);
    m.def("density", py::overload_cast<const EvalueDensityParams&, double>(&density), py::arg("params"),
          py::arg("v"));
    m.def("branch_density", py::overload_cast<const EvalueDensityParams&, double, Branch>(&density),
          py::arg("params"), py::arg("v"), py::arg("branch"));
    m.def("branch_mass", &branch_mass, py::arg("params"), py::arg("branch"));
    m.def("cdf", &cdf, py::arg("params"), py::arg("v"));
    m.def("quantile", &quantile, py::arg("params"), py::arg("prob"));

    // Simulation study
    py::class_<StudyConfig>(m, "StudyConfig")
        .def(py::init<>())
        .def_readwrite("n_units", &StudyConfig::n_units)
        .def_readwrite("k_multipliers", &StudyConfig::k_multipliers)
        .def_readwrite("n_trials", &StudyConfig::n_trials)
        .def_readwrite("m_groups", &StudyConfig::m_groups)
        .def_property(
            "delta_mean", [](const StudyConfig& c) { return std::make_pair(c.delta_mean.x, c.delta_mean.y); },
            [](StudyConfig& c, const std::pair<double, double>& v) { c.delta_mean = {v.first, v.second}; })
        .def_property(
            "delta_cov", [](const StudyConfig& c) { return from_mat(c.delta_cov); },
            [](StudyConfig& c, const Mat& v) { c.delta_cov = to_mat(v); })
        .def_readwrite("level", &StudyConfig::level)
        .def_readwrite("master_seed", &StudyConfig::master_seed)
        .def_readwrite("n_draws", &StudyConfig::n_draws)
        .def("validate", &StudyConfig::validate);

    py::class_<StudyCell>(m, "StudyCell")
        .def_readonly("method", &StudyCell::method)
        .def_readonly("k", &StudyCell::k)
        .def_readonly("coverage", &StudyCell::coverage)
        .def_readonly("mean_width", &StudyCell::mean_width)
        .def_readonly("n_ok", &StudyCell::n_ok)
        .def_readonly("n_failed", &StudyCell::n_failed);

    py::class_<StudyResult>(m, "StudyResult")
        .def_readonly("cells", &StudyResult::cells)
        .def("at", &StudyResult::at, py::return_value_policy::reference_internal)
        .def("to_csv", &StudyResult::to_csv, py::arg("precision") = 6);

    m.def(
        "run_study", [](const StudyConfig& c) { return run_study(c); },
        py::call_guard<py::gil_scoped_release>());
    m.def("set_thread_count", &set_thread_count, py::arg("n"));
    m.def("thread_count", &thread_count);

    // Report pipeline over CSV files
    m.def(
        "analyze_files",
        [](const std::string& units_path, const std::string& benchmarks_path, double level,
           std::size_t n_draws, std::uint64_t seed, const std::string& format) {
            auto u = open_file(units_path);
            auto b = open_file(benchmarks_path);
            AnalyzeOptions opt;
            opt.level = level;
            opt.n_draws = n_draws;
            opt.seed = seed;
            const auto report = analyze(read_units_csv(u, units_path),
                                        read_benchmarks_csv(b, benchmarks_path), opt);
            if (format == "csv") return report_to_csv(report);
            if (format == "json") return report_to_json(report);
            throw Error("unknown format '" + format + "'");
        },
        py::arg("units"), py::arg("benchmarks"), py::arg("level") = 0.95, py::arg("n_draws") = 100000,
        py::arg("seed") = 42, py::arg("format") = "json");
}
