/// riccilab: command-line front end for the verification suites.
///
/// verify <suite> [--flow KEY] [--n DIM] [--N LIST] [--points K] [--seed S]
///                [--grid M] [--steps K] [--out PATH] [--config FILE]
/// sweep          [--seed S] [--out PATH]
/// transport <suite> [--grid M] [--steps K] [--seed S] [--out PATH]
///
/// Flags override config-file values.  Exit codes: 0 all checks pass,
/// 1 any check fails, 2 configuration error.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfl/suites.hpp"

namespace {

struct CliValues {
    std::string config_path;
    std::string flow;
    int n = 0;
    std::string n_list;
    int points = 0;
    unsigned seed = 0;
    int grid = 0;
    int steps = 0;
    std::string out;
};

void add_common_options(CLI::App* sub, CliValues& v, bool with_geometry) {
    sub->add_option("--config", v.config_path, "flat key=value config file");
    if (with_geometry) {
        sub->add_option("--flow", v.flow, "flow key, e.g. flat2 or prod:sphere2+flat1");
        sub->add_option("--n", v.n, "dimension appended to a bare family name");
        sub->add_option("--N", v.n_list, "comma-separated N sweep values");
        sub->add_option("--points", v.points, "sample point count");
    }
    sub->add_option("--seed", v.seed, "sampling seed");
    sub->add_option("--grid", v.grid, "transport grid size M");
    sub->add_option("--steps", v.steps, "transport checkpoints / s-steps");
    sub->add_option("--out", v.out, "report basename (writes .json and .csv)");
}

rfl::SuiteConfig merge_config(const CLI::App* sub, const CliValues& v,
                              const std::string& suite) {
    rfl::SuiteConfig cfg;
    if (!v.config_path.empty()) rfl::load_config_file(cfg, v.config_path);
    // Not every subcommand registers every flag; flags that were passed
    // override whatever the config file set.
    const auto used = [sub](const char* name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (used("--flow")) cfg.flow = v.flow;
    if (used("--n")) cfg.n = v.n;
    if (used("--N")) cfg.n_values = rfl::parse_n_list(v.n_list);
    if (used("--points")) cfg.points = v.points;
    if (used("--seed")) cfg.seed = v.seed;
    if (used("--grid")) cfg.grid = v.grid;
    if (used("--steps")) cfg.steps = v.steps;
    if (used("--out")) cfg.out = v.out;
    if (!suite.empty()) cfg.suite = suite;
    if (cfg.suite.empty()) throw rfl::ConfigError("no suite selected");
    return cfg;
}

void print_report(const rfl::SuiteReport& rep) {
    std::printf("suite %s", rep.config.suite.c_str());
    if (!rep.config.flow.empty()) std::printf("  flow %s", rep.config.flow.c_str());
    std::printf("\n");
    for (const rfl::CheckRow& row : rep.rows) {
        std::printf("  [%s] %-34s value=%-14s bound=%s\n",
                    row.pass ? "PASS" : "FAIL", row.id.c_str(),
                    rfl::format_double(row.value).c_str(),
                    rfl::format_double(row.bound).c_str());
        if (!row.pass && !row.note.empty()) {
            std::printf("         note: %s\n", row.note.c_str());
        }
    }
    std::printf("  => %s (%zu checks, %.1f ms)\n", rep.pass ? "PASS" : "FAIL",
                rep.rows.size(), rep.wall_ms);
}

int run_and_write(const std::vector<rfl::SuiteConfig>& plan,
                  const std::string& out_base) {
    std::vector<rfl::SuiteReport> reports;
    bool pass = true;
    for (const rfl::SuiteConfig& cfg : plan) {
        rfl::SuiteReport rep = rfl::run_suite(cfg);
        print_report(rep);
        pass = pass && rep.pass;
        reports.push_back(std::move(rep));
    }
    rfl::write_reports(reports, out_base.empty() ? "report" : out_base);
    std::printf("%s: %zu suite run(s), reports at %s.{json,csv}\n",
                pass ? "PASS" : "FAIL", reports.size(),
                out_base.empty() ? "report" : out_base.c_str());
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification laboratory for Ricci-flow space-time solitons"};
    app.require_subcommand(1);

    std::string verify_suite;
    CliValues vv;
    CLI::App* verify = app.add_subcommand("verify", "run one suite");
    verify->add_option("suite", verify_suite, "suite name")->required();
    add_common_options(verify, vv, true);

    CliValues sv;
    CLI::App* sweep = app.add_subcommand("sweep", "run every suite, default config");
    sweep->add_option("--config", sv.config_path, "flat key=value config file");
    sweep->add_option("--seed", sv.seed, "sampling seed");
    sweep->add_option("--out", sv.out, "report basename");

    std::string transport_suite;
    CliValues tv;
    CLI::App* transport =
        app.add_subcommand("transport", "run one optimal-transport suite");
    transport->add_option("suite", transport_suite, "transport suite name")
        ->required();
    add_common_options(transport, tv, false);

    try {
        app.parse(argc, argv);
        if (verify->parsed()) {
            const rfl::SuiteConfig cfg = merge_config(verify, vv, verify_suite);
            return run_and_write({cfg}, cfg.out);
        }
        if (transport->parsed()) {
            if (!rfl::is_transport_suite(transport_suite)) {
                throw rfl::ConfigError("not a transport suite: " + transport_suite);
            }
            const rfl::SuiteConfig cfg = merge_config(transport, tv, transport_suite);
            return run_and_write({cfg}, cfg.out);
        }
        // sweep
        unsigned seed = sv.seed;
        std::string out = sv.out;
        if (!sv.config_path.empty()) {
            rfl::SuiteConfig base;
            rfl::load_config_file(base, sv.config_path);
            if (!sweep->count("--seed")) seed = base.seed;
            if (!sweep->count("--out")) out = base.out;
        }
        if (!sweep->count("--seed") && sv.config_path.empty()) seed = 1;
        return run_and_write(rfl::sweep_plan(seed == 0 ? 1 : seed), out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const rfl::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const rfl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
