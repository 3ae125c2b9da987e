/// @file test_suites.cpp
/// Suite layer: configuration validation, flow-name resolution, a few fast
/// end-to-end suite runs, the sweep plan, and byte-stable JSON/CSV reports.

#include <catch_amalgamated.hpp>

#include "rfl/suites.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace rfl;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("flow-name resolution", "[suites]") {
    SuiteConfig cfg;
    cfg.flow = "flat";
    cfg.n = 2;
    CHECK(cfg.resolved_flow() == "flat2");
    cfg.flow = "sphere2";
    cfg.n = 3;
    CHECK(cfg.resolved_flow() == "sphere2");  // explicit dimension wins
    cfg.flow = "flat1";
    cfg.n = 0;
    CHECK(cfg.resolved_flow() == "flat1");
}

TEST_CASE("configuration validation", "[suites]") {
    SuiteConfig cfg;
    cfg.suite = "gradient-identity";
    SECTION("unknown suite") {
        cfg.suite = "frobnicate";
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
    SECTION("N list must increase") {
        cfg.n_values = {1e3, 1e2};
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
    SECTION("N values must be positive") {
        cfg.n_values = {-1.0, 1.0};
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
    SECTION("slope suites need four N values") {
        cfg.suite = "shrinking-residual";
        cfg.n_values = {1e2, 1e3, 1e4};
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
    SECTION("transport grid must be even and large enough") {
        cfg.suite = "w1-duality";
        cfg.grid = 9;
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
    SECTION("unknown flow key") {
        cfg.flow = "moebius2";
        CHECK_THROWS_AS(run_suite(cfg), ConfigError);
    }
}

TEST_CASE("fast suites pass end to end", "[suites]") {
    SECTION("gradient identity on the flat flow") {
        SuiteConfig cfg;
        cfg.suite = "gradient-identity";
        cfg.flow = "flat2";
        cfg.points = 4;
        const SuiteReport rep = run_suite(cfg);
        CHECK(rep.pass);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].id == "max-residual");
        CHECK(rep.rows[0].value <= 1e-12);
    }
    SECTION("flat L-geodesic oracle instances") {
        SuiteConfig cfg;
        cfg.suite = "lgeodesic";
        const SuiteReport rep = run_suite(cfg);
        CHECK(rep.pass);
        // 10 instances, two gap rows each, plus the convergence flag.
        CHECK(rep.rows.size() == 21);
    }
    SECTION("transport suites force the circle testbed") {
        SuiteConfig cfg;
        cfg.suite = "w1-duality";
        cfg.flow = "flat2";  // ignored on purpose
        const SuiteReport rep = run_suite(cfg);
        CHECK(rep.pass);
        CHECK(rep.config.flow == "circle");
        bool found_dirac = false;
        for (const CheckRow& r : rep.rows) {
            if (r.id == "dirac-exact") {
                found_dirac = true;
                CHECK(r.value <= 1e-12);
            }
        }
        CHECK(found_dirac);
    }
    SECTION("flow consistency on a curved family") {
        SuiteConfig cfg;
        cfg.suite = "flow-consistency";
        cfg.flow = "hyp2";
        cfg.points = 6;
        const SuiteReport rep = run_suite(cfg);
        CHECK(rep.pass);
        CHECK(rep.rows.size() == 3);
        for (const CheckRow& r : rep.rows) CHECK(r.bound == 1e-7);
    }
}

TEST_CASE("the sweep plan covers every suite on its specified flows",
          "[suites]") {
    const std::vector<SuiteConfig> plan = sweep_plan(1);
    CHECK(plan.size() == 42);
    int transport = 0;
    for (const SuiteConfig& cfg : plan) {
        if (is_transport_suite(cfg.suite)) ++transport;
    }
    CHECK(transport == 4);
    // Every geometry entry names a resolvable flow.
    for (const SuiteConfig& cfg : plan) {
        if (!is_transport_suite(cfg.suite)) {
            CHECK_NOTHROW(flow_by_key(cfg.resolved_flow()));
        }
    }
}

TEST_CASE("reports serialize to parseable JSON and flat CSV", "[suites]") {
    SuiteConfig cfg;
    cfg.suite = "gradient-identity";
    cfg.flow = "flat2";
    cfg.points = 2;
    const SuiteReport rep = run_suite(cfg);

    const std::string json_text = reports_json_text({rep}, false);
    const nlohmann::json j = nlohmann::json::parse(json_text);
    CHECK(j["config"]["suite"] == "gradient-identity");
    CHECK(j["pass"] == true);
    CHECK(j["rows"].size() == rep.rows.size());
    CHECK(!j.contains("wall_ms"));

    const std::string csv = reports_csv_text({rep});
    size_t lines = 0;
    for (char ch : csv) {
        if (ch == '\n') ++lines;
    }
    CHECK(lines == rep.rows.size() + 1);  // header + one line per check
    CHECK(csv.rfind("suite,flow,check,value,bound,pass,note", 0) == 0);
}

TEST_CASE("written reports are byte-stable across reruns", "[suites]") {
    SuiteConfig cfg;
    cfg.suite = "w1-duality";
    auto run_to = [&cfg](const std::string& base) {
        const SuiteReport rep = run_suite(cfg);
        write_reports({rep}, base);
    };
    const std::string a = "suites_test_report_a";
    const std::string b = "suites_test_report_b";
    run_to(a);
    run_to(b);
    CHECK(slurp(a + ".json") == slurp(b + ".json"));
    CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
    CHECK(slurp(a + ".json").find("wall") == std::string::npos);
    for (const std::string& base : {a, b}) {
        std::remove((base + ".json").c_str());
        std::remove((base + ".csv").c_str());
    }
}

TEST_CASE("config files load and merge", "[suites]") {
    const std::string path = "suites_test_config.cfg";
    {
        std::ofstream f(path);
        f << "# comment line\n"
          << "suite = gradient-identity\n"
          << "flow = flat2\n"
          << "points = 3\n"
          << "seed = 7\n"
          << "N = 1e2,1e3\n";
    }
    SuiteConfig cfg;
    load_config_file(cfg, path);
    CHECK(cfg.suite == "gradient-identity");
    CHECK(cfg.flow == "flat2");
    CHECK(cfg.points == 3);
    CHECK(cfg.seed == 7);
    REQUIRE(cfg.n_values.size() == 2);
    CHECK(cfg.n_values[1] == 1e3);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config_file(cfg, "no_such_file.cfg"), ConfigError);
}
