// sensivalue: analyze | simulate | density

#include "sensivalue/density.hpp"
#include "sensivalue/parallel.hpp"
#include "sensivalue/report.hpp"
#include "sensivalue/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace sv = sensivalue;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sv::DataError("cannot open '" + path + "'");
    return in;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sv::DataError("cannot write '" + path + "'");
    out << text;
}

std::vector<sv::IntervalMethod> methods_from_flag(const std::string& flag) {
    if (flag == "all") return {sv::kAllMethods.begin(), sv::kAllMethods.end()};
    try {
        return {sv::method_from_tag(flag)};
    } catch (const sv::Error& e) {
        throw UsageError(e.what());
    }
}

void print_progress(std::size_t done, std::size_t total) {
    const std::size_t step = std::max<std::size_t>(1, total / 10);
    if (done % step == 0 || done == total) {
        std::cerr << "simulate: " << done << "/" << total << " trials\n";
    }
}

struct FitFlags {
    sv::FitConfig config;
    void add(CLI::App* app) {
        app->add_option("--nu-grid-min", config.nu_grid_min, "Lower end of the nu grid")
            ->capture_default_str();
        app->add_option("--nu-grid-max-per-group", config.nu_grid_max_per_group,
                        "Upper end of the nu grid divided by m")
            ->capture_default_str();
        app->add_option("--nu-grid-points", config.nu_grid_points, "Points in the nu grid")
            ->capture_default_str();
        app->add_option("--nu-tolerance", config.nu_tolerance, "Relative tolerance for nu")
            ->capture_default_str();
        app->add_option("--delta0-tolerance", config.delta0_tolerance,
                        "Relative tolerance for delta0")
            ->capture_default_str();
        app->add_option("--max-iterations", config.max_iterations,
                        "Iteration budget per 1-D search")
            ->capture_default_str();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian E-value sensitivity analysis for missing outcomes"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: SENSIVALUE_THREADS or hardware)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Fit the prior and report E-value intervals");
    std::string units_path;
    std::string bench_path;
    std::string output;
    std::string format = "json";
    std::string method = "all";
    int precision = 6;
    sv::AnalyzeOptions opts;
    FitFlags analyze_fit;
    analyze->add_option("--units", units_path, "Unit CSV: event_name,y,r,propensity")->required();
    analyze->add_option("--benchmarks", bench_path, "Benchmark CSV: event_name,mu_source1,mu_source2")
        ->required();
    analyze->add_option("--level", opts.level, "Interval level")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    analyze->add_option("--draws", opts.n_draws, "Posterior draws")->capture_default_str();
    analyze->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    analyze->add_option("--method", method, "all|subjective|objective|taylor|poisson")
        ->capture_default_str();
    analyze->add_option("--format", format, "json|csv")
        ->capture_default_str()
        ->check(CLI::IsMember({"json", "csv"}));
    analyze->add_option("--precision", precision, "Significant digits")
        ->capture_default_str()
        ->check(CLI::Range(1, 17));
    analyze->add_option("-o,--output", output, "Output file (default stdout)");
    analyze_fit.add(analyze);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the coverage and width study");
    std::string config_path;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::size_t> sim_trials;
    std::optional<std::size_t> sim_draws;
    std::optional<std::size_t> sim_units;
    std::string sim_output;
    int sim_precision = 6;
    bool quiet = false;
    simulate->add_option("config,--config", config_path, "key = value config file (optional)");
    simulate->add_option("--seed", sim_seed, "Master seed (overrides config)");
    simulate->add_option("--trials", sim_trials, "Trial count (overrides config)");
    simulate->add_option("--draws", sim_draws, "Posterior draws per trial (overrides config)");
    simulate->add_option("--units", sim_units, "Units per dataset at k = 1 (overrides config)");
    simulate->add_option("--precision", sim_precision, "Significant digits")
        ->capture_default_str()
        ->check(CLI::Range(1, 17));
    simulate->add_option("-o,--output", sim_output, "Output file (default stdout)");
    simulate->add_flag("-q,--quiet", quiet, "No progress on stderr");

    // density
    auto* dens = app.add_subcommand("density", "Evaluate a closed-form E-value density on a grid");
    std::string variant;
    std::optional<double> mu_rr, sigma_rr, eta, tau, p_obs, sd_y, mu_q, sigma_q, alpha, beta, beta_v;
    std::string rate_convention = "derived";
    double v_min = 1.01;
    double v_max = 10.0;
    std::size_t points = 50;
    bool log_grid = false;
    std::string dens_output;
    int dens_precision = 6;
    dens->add_option("--variant", variant, "thm1|thm2|thm3")
        ->required()
        ->check(CLI::IsMember({"thm1", "thm2", "thm3"}));
    dens->add_option("--mu-rr", mu_rr, "Mean of ln RR (thm1/thm2, direct)");
    dens->add_option("--sigma-rr", sigma_rr, "Sd of ln RR (thm1/thm2, direct)");
    dens->add_option("--eta", eta, "Mean of delta");
    dens->add_option("--tau", tau, "Sd of delta");
    dens->add_option("--p-obs", p_obs, "P(R = 1) (thm1)");
    dens->add_option("--sd-y", sd_y, "Outcome sd (thm1/thm2)");
    dens->add_option("--mu-q", mu_q, "Mean of q = 1 - P(R = 1) (thm2/thm3)");
    dens->add_option("--sigma-q", sigma_q, "Sd of q (thm2/thm3)");
    dens->add_option("--alpha", alpha, "Inverse-gamma shape of sigma_Y (thm3)");
    dens->add_option("--beta", beta, "Inverse-gamma scale of sigma_Y (thm3)");
    dens->add_option("--beta-v", beta_v, "Gamma rate of ln RR (thm3, direct)");
    dens->add_option("--rate-convention", rate_convention, "derived|printed (thm3)")
        ->capture_default_str()
        ->check(CLI::IsMember({"derived", "printed"}));
    dens->add_option("--v-min", v_min, "First grid point (> 1)")->capture_default_str();
    dens->add_option("--v-max", v_max, "Last grid point")->capture_default_str();
    dens->add_option("--points", points, "Grid size")->capture_default_str()->check(CLI::PositiveNumber);
    dens->add_flag("--log-grid", log_grid, "Log-spaced grid in v - 1");
    dens->add_option("--precision", dens_precision, "Significant digits")
        ->capture_default_str()
        ->check(CLI::Range(1, 17));
    dens->add_option("-o,--output", dens_output, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    if (threads > 0) sv::set_thread_count(threads);

    try {
        if (*analyze) {
            opts.methods = methods_from_flag(method);
            opts.fit = analyze_fit.config;
            auto uin = open_input(units_path);
            auto bin = open_input(bench_path);
            const auto units = sv::read_units_csv(uin, units_path);
            const auto bench = sv::read_benchmarks_csv(bin, bench_path);
            const auto report = sv::analyze(units, bench, opts);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            write_output(format == "csv" ? sv::report_to_csv(report, precision)
                                         : sv::report_to_json(report, precision),
                         output);
        } else if (*simulate) {
            sv::StudyConfig config;
            if (!config_path.empty()) {
                auto in = open_input(config_path);
                config = sv::parse_study_config(in, config_path);
            }
            if (sim_seed) config.master_seed = *sim_seed;
            if (sim_trials) config.n_trials = *sim_trials;
            if (sim_draws) config.n_draws = *sim_draws;
            if (sim_units) config.n_units = *sim_units;
            try {
                config.validate();
            } catch (const sv::Error& e) {
                throw UsageError(e.what());
            }
            const auto result = sv::run_study(config, quiet ? nullptr : print_progress);
            write_output(result.to_csv(sim_precision), sim_output);
        } else if (*dens) {
            sv::EvalueDensityParams params = sv::EvalueDensityParams::gamma(1.0, 1.0);
            try {
                auto need = [](const std::optional<double>& v, const char* name) {
                    if (!v) throw UsageError(std::string("missing --") + name);
                    return *v;
                };
                if (variant == "thm3") {
                    if (beta_v) {
                        params = sv::EvalueDensityParams::gamma(need(alpha, "alpha"), *beta_v);
                    } else {
                        params = sv::params_thm3(
                            need(eta, "eta"), tau.value_or(0.0), need(mu_q, "mu-q"),
                            sigma_q.value_or(0.0), need(alpha, "alpha"), need(beta, "beta"),
                            rate_convention == "printed" ? sv::Thm3Rate::AsPrinted
                                                         : sv::Thm3Rate::Derived);
                    }
                } else if (mu_rr || sigma_rr) {
                    params = sv::EvalueDensityParams::log_normal(
                        sv::variant_from_tag(variant), need(mu_rr, "mu-rr"),
                        need(sigma_rr, "sigma-rr"));
                } else if (variant == "thm1") {
                    params = sv::params_thm1(need(eta, "eta"), need(tau, "tau"),
                                             need(p_obs, "p-obs"), need(sd_y, "sd-y"));
                } else {
                    params = sv::params_thm2(need(eta, "eta"), need(tau, "tau"), need(mu_q, "mu-q"),
                                             need(sigma_q, "sigma-q"), need(sd_y, "sd-y"));
                }
                if (!(v_min > 1.0) || !(v_max >= v_min) || !std::isfinite(v_max)) {
                    throw UsageError("grid must satisfy 1 < v-min <= v-max");
                }
            } catch (const sv::Error& e) {
                throw UsageError(e.what());
            }
            if (params.validity_warning()) {
                std::cerr << "warning: coefficients of variation exceed "
                          << sv::kValidityThreshold << "; the approximation may be poor\n";
            }
            std::ostringstream os;
            os.precision(dens_precision);
            os << "v,pdf,cdf\n";
            for (std::size_t i = 0; i < points; ++i) {
                const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
                const double v = log_grid
                    ? 1.0 + (v_min - 1.0) * std::pow((v_max - 1.0) / (v_min - 1.0), t)
                    : v_min + t * (v_max - v_min);
                os << v << ',' << sv::density(params, v) << ',' << sv::cdf(params, v) << '\n';
            }
            write_output(os.str(), dens_output);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
