#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "curvlab/scenarios.hpp"

using namespace curvlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("curvlab_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(ConfigText, SectionsCommentsAndLists) {
    auto c = Config::parse_text("# header\nscenario = genus\n\n[genus]\nmin = 2   # smallest\nmax=5\n[jump]\nradii = 0.5, 1 ,2\n");
    EXPECT_EQ(c.scenario(), "genus");
    EXPECT_EQ(c.raw("genus.min"), "2");
    EXPECT_EQ(c.raw("genus.max"), "5");
    EXPECT_EQ(c.raw("jump.radii"), "0.5, 1 ,2");
}

TEST(ConfigText, SyntaxErrorsCarryLineNumbers) {
    try {
        Config::parse_text("scenario = genus\n[genus\nmin 2\n[genus]\nmax = 3\nmax = 4\n", "x.cfg");
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        ASSERT_EQ(e.problems().size(), 3u);
        EXPECT_NE(e.problems()[0].find("x.cfg:2"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("x.cfg:3"), std::string::npos);
        EXPECT_NE(e.problems()[2].find("duplicate"), std::string::npos);
    }
}

TEST(ConfigJson, SameSchemaAsText) {
    auto a = Config::parse_text("scenario = jump\n[jump]\nradii = 0.5, 1\nn_theta = 3\n");
    auto b = Config::parse_json(R"({"scenario": "jump", "jump": {"radii": [0.5, 1], "n_theta": 3}})");
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_THROW(Config::parse_json(R"({"jump": {"radii": {"x": 1}}})"), ConfigError);
    EXPECT_THROW(Config::parse_json("[1, 2]"), ConfigError);
    EXPECT_THROW(Config::parse_json("{bad"), ConfigError);
}

TEST(Settings, UnknownKeysAndBadValuesAreReported) {
    const auto* s = find_scenario("genus");
    ASSERT_NE(s, nullptr);
    auto c = Config::parse_text("scenario = genus\n[genus]\nmin = two\nmaximum = 5\n", "g.cfg");
    try {
        Settings settings(c, s->schema);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        ASSERT_EQ(e.problems().size(), 2u);
        EXPECT_NE(e.problems()[0].find("unknown key 'genus.maximum'"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("field genus.min"), std::string::npos);
    }
}

TEST(Settings, DefaultsAndTypedAccess) {
    const auto* s = find_scenario("jump");
    Settings settings(Config::parse_text("scenario = jump\n[jump]\nn_phi = 6\n"), s->schema);
    EXPECT_EQ(settings.integer("jump.n_phi"), 6);
    EXPECT_EQ(settings.integer("jump.n_theta"), 5);
    EXPECT_EQ(settings.numbers("jump.radii"), (std::vector<double>{0.5, 1.0, 2.0}));
    EXPECT_THROW(Settings(Config::parse_text("[jump]\nn_phi = 2.5\n"), s->schema), ConfigError);
    EXPECT_THROW(Settings(Config::parse_text("[jump]\nradii = 1,,2\n"), s->schema), ConfigError);
}

TEST(Catalog, ThirteenScenariosEachCriterionOnce) {
    const auto& c = catalog();
    ASSERT_EQ(c.size(), 13u);
    std::map<std::string, int> owners;
    for (const auto& s : c)
        for (const auto& id : s.criteria) ++owners[id];
    for (const char* id : {"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "C12-genus", "C12-jump", "C12-cube"})
        EXPECT_EQ(owners[id], 1) << id;
    EXPECT_EQ(find_scenario("no-such-scenario"), nullptr);
}

TEST(Catalog, ShippedConfigsValidate) {
    for (const auto& s : catalog()) {
        fs::path p = fs::path(CURVLAB_SOURCE_DIR) / "configs" / (s.name + ".cfg");
        ASSERT_TRUE(fs::exists(p)) << p;
        auto c = Config::load(p.string());
        EXPECT_EQ(c.scenario(), s.name);
        EXPECT_NO_THROW(Settings(c, s.schema)) << s.name;
    }
}

TEST(Artifacts, SeventeenDigitCsvAndGnuplotTwin) {
    Table t("t", {"a", "b"});
    t.add({0.1, 1.0 / 3.0});
    EXPECT_EQ(t.csv(), "a,b\n0.10000000000000001,0.33333333333333331\n");
    EXPECT_EQ(t.dat(), "# a b\n0.10000000000000001 0.33333333333333331\n");
    EXPECT_THROW(t.add({1.0}), std::logic_error);
    Table n("n", {"x"});
    n.add({std::nan("")});
    EXPECT_EQ(n.csv(), "x\nnan\n");
}

TEST(Run, WritesManifestLastAndIsDeterministic) {
    auto dir1 = scratch("run1"), dir2 = scratch("run2");
    auto cfg = Config::parse_text("scenario = jump\n[jump]\nradii = 0.5, 1\n");
    auto m1 = run_scenario(cfg, {dir1, 1, {}});
    auto m2 = run_scenario(cfg, {dir2, 2, {}});
    EXPECT_TRUE(m1.passed);
    EXPECT_TRUE(fs::exists(dir1 / "manifest.json"));
    EXPECT_FALSE(fs::exists(dir1 / "manifest.json.tmp"));
    for (const auto& a : m1.artifacts) EXPECT_EQ(slurp(dir1 / a), slurp(dir2 / a)) << a;
    auto j = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
    EXPECT_EQ(j["config_hash"], cfg.hash());
    EXPECT_EQ(j["criteria"][0]["id"], "C12-jump");
    EXPECT_TRUE(j["passed"].get<bool>());
}

TEST(Run, SeedChangesOnlyRandomizedScenarios) {
    auto cfg = Config::parse_text("scenario = eigen\n[eigen]\npairs = 3\nsamples = 6\n");
    auto a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
    run_scenario(cfg, {a, 1, 7});
    run_scenario(cfg, {b, 1, 7});
    run_scenario(cfg, {c, 1, 8});
    EXPECT_EQ(slurp(a / "monotone_pairs.csv"), slurp(b / "monotone_pairs.csv"));
    EXPECT_NE(slurp(a / "monotone_pairs.csv"), slurp(c / "monotone_pairs.csv"));
    EXPECT_EQ(slurp(a / "constant_potential.csv"), slurp(c / "constant_potential.csv"));

    auto g = Config::parse_text("scenario = genus\n");
    auto d = scratch("seed_d"), e = scratch("seed_e");
    run_scenario(g, {d, 1, 1});
    run_scenario(g, {e, 1, 99});
    EXPECT_EQ(slurp(d / "flat_cone_surfaces.csv"), slurp(e / "flat_cone_surfaces.csv"));
}

TEST(Run, ThreadCountDoesNotChangeOutputs) {
    auto cfg = Config::parse_text("scenario = eigen\n[eigen]\npairs = 4\nsamples = 6\n");
    auto a = scratch("thr_a"), b = scratch("thr_b");
    run_scenario(cfg, {a, 1, {}});
    run_scenario(cfg, {b, 3, {}});
    EXPECT_EQ(slurp(a / "monotone_pairs.csv"), slurp(b / "monotone_pairs.csv"));
}

TEST(Run, RejectsUnknownScenarioBeforeComputing) {
    auto out = scratch("unknown");
    EXPECT_THROW(run_scenario(Config::parse_text("scenario = cosmic\n"), {out, 1, {}}), ConfigError);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_THROW(run_scenario(Config::parse_text("scenario = genus\n[genus]\nmin = 2\nfoo = 1\n"), {out, 1, {}}), ConfigError);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Run, NumericalFailureIsRecordedInTheManifest) {
    auto out = scratch("failure");
    auto m = run_scenario(Config::parse_text("scenario = genus\n[genus]\nmin = 1\n"), {out, 1, {}});
    EXPECT_FALSE(m.passed);
    ASSERT_EQ(m.criteria.size(), 1u);
    EXPECT_EQ(m.criteria[0].id, "C12-genus");
    EXPECT_FALSE(m.criteria[0].pass);
    auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_TRUE(j.contains("error"));
}
