#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" SV_CLI_PATH "\" " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string fixture(const std::string& name) { return std::string(SV_FIXTURE_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> numeric_rows(const std::string& csv) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) row.push_back(std::stod(f));
        rows.push_back(row);
    }
    return rows;
}

const std::string kAnalyze = "analyze --units \"" SV_FIXTURE_DIR "/units.csv\" --benchmarks \"" SV_FIXTURE_DIR
                             "/benchmarks.csv\" --draws 20000 --seed 7";

}  // namespace

TEST_CASE("exit codes") {
    CHECK(run("--help").status == 0);
    CHECK(run("").status == 2);
    CHECK(run("frobnicate").status == 2);
    CHECK(run("analyze --units x.csv").status == 2);
    CHECK(run("analyze --units /nonexistent.csv --benchmarks /nonexistent.csv").status == 1);
    CHECK(run("analyze --units \"" + fixture("units.csv") + "\" --benchmarks \"" + fixture("units.csv") + "\"")
              .status == 1);
    CHECK(run("density --variant thm4 --mu-rr 0 --sigma-rr 1").status == 2);
    CHECK(run("density --variant thm1 --mu-rr 0 --sigma-rr -1").status == 2);
    CHECK(run("density --variant thm3 --eta -1 --tau 0.1 --mu-q 0.3 --sigma-q 0.01 --alpha 6 --beta 5").status == 2);
}

TEST_CASE("density subcommand") {
    const auto one = run("density --variant thm1 --mu-rr 0 --sigma-rr 1 --v-min 2 --v-max 2 --points 1");
    REQUIRE(one.status == 0);
    const auto rows1 = numeric_rows(one.out);
    REQUIRE(rows1.size() == 1);
    CHECK(rows1[0][0] == 2.0);
    // Both branches contribute 0.1276 at v = 2 when mu_rr = 0.
    CHECK(rows1[0][1] == doctest::Approx(2.0 * 0.1276).epsilon(1e-3));

    const auto grid = run("density --variant thm1 --mu-rr 0 --sigma-rr 1 --v-min 1.01 --v-max 10 --points 50");
    REQUIRE(grid.status == 0);
    CHECK(grid.out.rfind("v,pdf,cdf\n", 0) == 0);
    const auto rows = numeric_rows(grid.out);
    REQUIRE(rows.size() == 50);
    // Folded normal: P(|ln RR| <= ln(100/19)).
    CHECK(rows.back()[2] == doctest::Approx(std::erf(std::log(100.0 / 19.0) / std::sqrt(2.0))).epsilon(1e-5));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][2] >= rows[i - 1][2]);
        CHECK(rows[i][1] >= 0.0);
    }

    const auto thm3 = run("density --variant thm3 --eta 1 --tau 0.02 --mu-q 0.3 --sigma-q 0.01 --alpha 6 "
                          "--beta 5 --v-min 1.01 --v-max 3 --points 12");
    REQUIRE(thm3.status == 0);
    CHECK(thm3.out == slurp(fixture("golden_density_thm3.csv")));
}

TEST_CASE("simulate smoke test") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run("simulate --trials 10 --units 100 --draws 1000 -q");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(r.status == 0);
    CHECK(secs < 5.0);
    CHECK(r.out.rfind("method,k,coverage,mean_width,n_ok,n_failed\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1 + 4 * 7);
    CHECK(run("simulate --trials 10 --units 100 --draws 1000 -q --seed 9").out ==
          run("simulate --trials 10 --units 100 --draws 1000 -q --seed 9").out);
    CHECK(run("simulate /nonexistent.cfg -q").status == 1);
}

TEST_CASE("analyze matches the golden report") {
    const auto r = run(kAnalyze);
    REQUIRE(r.status == 0);
    CHECK(r.out == slurp(fixture("golden_analyze.json")));
    const auto csv = run(kAnalyze + " --format csv");
    REQUIRE(csv.status == 0);
    CHECK(csv.out == slurp(fixture("golden_analyze.csv")));
}

TEST_CASE("outputs do not depend on thread count") {
    const auto a = run(kAnalyze, "SENSIVALUE_THREADS=1");
    const auto b = run(kAnalyze, "SENSIVALUE_THREADS=6");
    const auto c = run("--threads 3 " + kAnalyze);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    const std::string sim = "simulate --trials 12 --units 150 --draws 1000 -q --seed 5";
    CHECK(run(sim, "SENSIVALUE_THREADS=1").out == run(sim, "SENSIVALUE_THREADS=7").out);
}
