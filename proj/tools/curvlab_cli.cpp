#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "curvlab/scenarios.hpp"

namespace {

const char* kind_name(curvlab::ParamKind k) {
    switch (k) {
        case curvlab::ParamKind::number: return "number";
        case curvlab::ParamKind::integer: return "integer";
        case curvlab::ParamKind::numbers: return "list";
        case curvlab::ParamKind::text: return "text";
        case curvlab::ParamKind::flag: return "flag";
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvlab: singular-metric scalar curvature experiments"};
    app.require_subcommand(1);
    std::string out;
    int threads = 1;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run the scenario named in a config file");
    std::string config_path;
    run->add_option("config", config_path, "config file (key = value sections, or JSON)")->required();
    auto* out_opt = run->add_option("--out", out, "output directory (overrides output.dir)");
    run->add_option("--threads", threads, "worker threads for sweep points")->check(CLI::PositiveNumber);
    auto* seed_opt = run->add_option("--seed", seed, "seed for randomized property checks");

    auto* list = app.add_subcommand("list", "list the scenario catalogue");
    std::string query;
    list->add_option("scenario", query, "print one scenario and its config keys");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        if (!query.empty()) {
            const auto* s = curvlab::find_scenario(query);
            if (!s) {
                std::fprintf(stderr, "unknown scenario '%s'\n", query.c_str());
                return 2;
            }
            std::printf("%s: %s\n", s->name.c_str(), s->summary.c_str());
            for (const auto& p : s->schema)
                std::printf("  %-28s %-8s default %-22s %s\n", p.key.c_str(), kind_name(p.kind), p.fallback.c_str(), p.help.c_str());
            return 0;
        }
        for (const auto& s : curvlab::catalog()) {
            std::string ids;
            for (const auto& c : s.criteria) ids += (ids.empty() ? "" : ",") + c;
            std::printf("%-16s %-28s %s\n", s.name.c_str(), ids.empty() ? "-" : ids.c_str(), s.summary.c_str());
        }
        return 0;
    }

    try {
        curvlab::RunOptions opt;
        if (*out_opt) opt.out = out;
        opt.threads = threads;
        if (*seed_opt) opt.seed = seed;
        auto m = curvlab::run_scenario(curvlab::Config::load(config_path), opt);
        for (const auto& c : m.criteria)
            std::printf("%-10s %s  %s\n", c.id.c_str(), c.pass ? "PASS" : "FAIL", c.detail.c_str());
        std::printf("%s: %s in %.2f s\n", m.scenario.c_str(), m.passed ? "passed" : "failed", m.run_seconds);
        return m.passed ? 0 : 1;
    } catch (const curvlab::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
