#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hamcurv/scenario.hpp"

using namespace hamcurv;
using Catch::Approx;

namespace {

const char* kPendulumSweep = R"(
[system]
name = pendulum
family = natural
n = 1
potential = cos(q1)

[task]
type = sweep
p = 1.5
q_from = 0
q_to = 6.2831853071795862
count = 100

[output]
csv = sweep.csv
)";

std::string slurp(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("hamcurv-test-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("pendulum sweep: 100 rows matching -cos q") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    auto dir = fresh_dir("sweep-a");
    RunOptions opt;
    opt.out_dir = dir.string();
    RunResult res = run_scenario(sc, opt);
    CHECK(res.exit_code == 0);

    std::istringstream csv(slurp((dir / "sweep.csv").string()));
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "q,R,sign_class");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        std::istringstream row(line);
        std::string qs, rs, sign;
        REQUIRE(std::getline(row, qs, ','));
        REQUIRE(std::getline(row, rs, ','));
        REQUIRE(std::getline(row, sign, ','));
        double q = std::stod(qs), r = std::stod(rs);
        CHECK(r == Approx(-std::cos(q)).margin(1e-6));
        CHECK(sign == (r < 0 ? "negative" : (r > 0 ? "positive" : "degenerate")));
    }
    CHECK(rows == 100);
}

TEST_CASE("identical scenario runs are byte-identical") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    auto a = fresh_dir("det-a"), b = fresh_dir("det-b");
    RunOptions opt;
    opt.out_dir = a.string();
    run_scenario(sc, opt);
    opt.out_dir = b.string();
    run_scenario(sc, opt);
    CHECK(slurp((a / "sweep.csv").string()) == slurp((b / "sweep.csv").string()));
}

TEST_CASE("unknown keys are rejected with the key name and line") {
    std::string bad = kPendulumSweep;
    auto pos = bad.find("family");
    bad.replace(pos, 6, "familly");
    try {
        Scenario::parse_text(bad, "bad.cfg");
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        std::string msg = e.what();
        CHECK(msg.find("familly") != std::string::npos);
        CHECK(msg.find("bad.cfg:4") != std::string::npos);
    }
}

TEST_CASE("validate: reduced task with n = 1") {
    Scenario sc = Scenario::parse_text(R"(
[system]
family = natural
n = 1
potential = cos(q1)

[task]
type = reduced
p = 1
q = 0
)");
    auto diags = validate_scenario(sc);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("trivial for n=1") != std::string::npos);
}

TEST_CASE("validate: geodesic family without a metric") {
    Scenario sc = Scenario::parse_text(R"(
[system]
family = geodesic
n = 2

[task]
type = curvature
p = 0 1
q = 0 0
)");
    auto diags = validate_scenario(sc);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("metric") != std::string::npos);
}

TEST_CASE("validate: well-formed scenario is clean") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    CHECK(validate_scenario(sc).empty());
}

TEST_CASE("overrides apply after parse and are schema-checked") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    sc.apply_override("task.count=10");
    auto dir = fresh_dir("override");
    RunOptions opt;
    opt.out_dir = dir.string();
    run_scenario(sc, opt);
    std::istringstream csv(slurp((dir / "sweep.csv").string()));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 11);  // header + 10 rows

    CHECK_THROWS_AS(sc.apply_override("task.frobnicate=1"), ScenarioError);
    CHECK_THROWS_AS(sc.apply_override("no-equals-sign"), ScenarioError);
}

TEST_CASE("theorem2 scenario emits a certificate and exit 0") {
    Scenario sc = Scenario::parse_text(R"(
[system]
name = hyperboloid-waist
family = geodesic
n = 2
profile = sqrt(1 + z^2)

[task]
type = theorem2
p = 0 1
q = 0 0
period = 6.2831853
shift = 0 0 0 6.2831853071795862
)");
    auto dir = fresh_dir("thm2");
    RunOptions opt;
    opt.out_dir = dir.string();
    RunResult res = run_scenario(sc, opt);
    CHECK(res.exit_code == 0);
    auto j = nlohmann::json::parse(slurp((dir / "theorem2.json").string()));
    CHECK(j["schema"] == "hamcurv.certificate.v1");
    CHECK(j["hyperbolic"] == true);
    CHECK(j["certified"] == true);
    CHECK(j["hypotheses"]["reduced_curvature_negative"] == true);
    CHECK(std::abs(j["floquet_margin"].get<double>() - 2.0 * M_PI) < 1e-3);
}

TEST_CASE("theorem1 hypothesis failure exits 1 but still writes the certificate") {
    Scenario sc = Scenario::parse_text(R"(
[system]
name = harmonic
family = natural
n = 1
potential = q1^2/2

[task]
type = theorem1
p = 0.5
q = 0
horizon = 40
box_lo = -1 -1
box_hi = 1 1
)");
    auto dir = fresh_dir("thm1-fail");
    RunOptions opt;
    opt.out_dir = dir.string();
    RunResult res = run_scenario(sc, opt);
    CHECK(res.exit_code == 1);
    auto j = nlohmann::json::parse(slurp((dir / "theorem1.json").string()));
    CHECK(j["certified"] == false);
    CHECK(j["hypotheses"]["curvature_negative"] == false);
}

TEST_CASE("malformed numbers name the offending key") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    sc.apply_override("task.count=ten");
    auto dir = fresh_dir("badnum");
    RunOptions opt;
    opt.out_dir = dir.string();
    try {
        run_scenario(sc, opt);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        CHECK(std::string(e.what()).find("task.count") != std::string::npos);
    }
}

TEST_CASE("the seed is recorded in the run log") {
    Scenario sc = Scenario::parse_text(kPendulumSweep);
    auto dir = fresh_dir("seed");
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.seed = 12345;
    run_scenario(sc, opt);
    CHECK(slurp((dir / "run.log").string()).find("seed: 12345") != std::string::npos);
}
