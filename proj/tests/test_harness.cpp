#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hyperlab/harness.hpp"

using namespace hyperlab;
using hyperlab::config::Config;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
    std::istringstream in(text);
    return Config::parse(in, "t.ini");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.exit_code(), 2);
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("hyperlab_test_" + name);
    fs::remove_all(p);
    return p;
}

int exec(const std::string& sub, const Config& cfg, const fs::path& dir, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int rc = harness::execute(sub, cfg, dir.string(), o, e);
    if (out) *out = o.str();
    return rc;
}

}  // namespace

TEST(Config, SectionsCommentsAndLists) {
    const auto c = parse("# top\n[lab]\nrate = linear 1   # inline\nwindow = 8 11\n\n[group]\nT=10\n");
    EXPECT_EQ(c.str("lab.rate", ""), "linear 1");
    EXPECT_EQ(c.list("lab.window", {}), (std::vector<double>{8.0, 11.0}));
    EXPECT_DOUBLE_EQ(c.num("group.T", 0.0), 10.0);
    EXPECT_DOUBLE_EQ(c.num("group.missing", 3.5), 3.5);
    EXPECT_EQ(c.canonical(), "group.T=10\nlab.rate=linear 1\nlab.window=8 11\n");
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(error_of("[lab]\nrate = linear 1\nbroken line\n").find("t.ini:3"), std::string::npos);
    EXPECT_NE(error_of("rate = 1\n").find("t.ini:1"), std::string::npos);
    EXPECT_NE(error_of("[lab]\nseed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(error_of("[lab\n").find("section"), std::string::npos);
    const auto c = parse("[group]\nT = ten\n");
    EXPECT_THROW(c.num("group.T", 0.0), Error);
}

TEST(Config, UnknownKeyIsRejectedWithItsLine) {
    const auto c = parse("[formulas]\ntheorem = thm1.1\n\n[lab]\nspeed = 3\n");
    try {
        harness::run("formulas", c);
        FAIL();
    } catch (const Error& e) {
        const std::string w = e.what();
        EXPECT_NE(w.find("lab.speed"), std::string::npos);
        EXPECT_NE(w.find("5"), std::string::npos);
        EXPECT_EQ(e.exit_code(), 2);
    }
}

TEST(Harness, FormulasReferenceValue) {
    Config c;
    c.set("formulas.theorem", "thm1.1");
    c.set("formulas.n", "2");
    c.set("formulas.s", "0");
    c.set("formulas.tau", "1");
    std::string out;
    EXPECT_EQ(exec("formulas", c, scratch("formulas"), &out), 0);
    EXPECT_EQ(out, "0.5\n");
    c.set("formulas.theorem", "thm1.2");
    EXPECT_EQ(exec("formulas", c, scratch("formulas2")), 2);
}

TEST(Harness, UnknownSubcommand) {
    EXPECT_EQ(exec("frobnicate", Config{}, scratch("unknown")), 2);
}

TEST(Harness, DyadicCheckPassesAndWritesManifest) {
    Config c;
    c.set("group.T", "9");
    const auto dir = scratch("dyadic");
    EXPECT_EQ(exec("dyadic-check", c, dir), 0);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m.at("subcommand"), "dyadic-check");
    EXPECT_EQ(m.at("config_hash"), harness::config_hash("dyadic-check", c));
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    for (const auto& p : m.at("outputs")) EXPECT_TRUE(fs::exists(p.get<std::string>()));
}

TEST(Harness, ResourceGuards) {
    Config c;
    c.set("group.T", "31");
    EXPECT_EQ(exec("orbit", c, scratch("deep")), 4);
    Config s;
    s.set("lab.samples", "2000000");
    EXPECT_EQ(exec("zero-one", s, scratch("samples")), 4);
    Config t;
    t.set("group.presentation", "free(2)");
    t.set("tree.depth", "40");
    EXPECT_EQ(exec("dyadic-check", t, scratch("treedeep")), 4);
}

TEST(Harness, RunsAreReproducibleAcrossWorkerCounts) {
    Config c;
    c.set("lab.rate", "log 0.5");
    c.set("lab.horizon", "8");
    c.set("lab.samples", "3000");
    c.set("lab.seed", "5");
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    setenv("HYPERLAB_WORKERS", "1", 1);
    ASSERT_EQ(exec("zero-one", c, a), 0);
    setenv("HYPERLAB_WORKERS", "3", 1);
    ASSERT_EQ(exec("zero-one", c, b), 0);
    unsetenv("HYPERLAB_WORKERS");
    for (const char* f : {"zero_one.csv", "zero_one_new.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    c.set("run.workers", "2");
    EXPECT_EQ(harness::config_hash("zero-one", c), nlohmann::json::parse(slurp(a / "manifest.json")).at("config_hash"));
}

TEST(Harness, JbBoundsRationalOutput) {
    Config c;
    c.set("jb.system", "all");
    c.set("jb.tau", "1");
    c.set("jb.s", "1/2");
    const auto o = harness::run("jb-bounds", c);
    EXPECT_EQ(o.status, 0);
    std::map<std::string, std::pair<std::string, std::string>> got;
    for (const auto& s : o.record.at("systems")) {
        EXPECT_TRUE(s.at("match").get<bool>()) << s.dump();
        got[s.at("system")] = {s.at("lower").get<std::string>(), s.at("upper").get<std::string>()};
        const auto lo = harness::detail::parse_rational("lower", got[s.at("system")].first);
        const auto hi = harness::detail::parse_rational("upper", got[s.at("system")].second);
        EXPECT_FALSE(hi < lo);
    }
    EXPECT_EQ(got.size(), 3u);
    EXPECT_EQ(got.at("point"), (std::pair<std::string, std::string>{"1/2", "1/2"}));
    c.set("jb.s", "3/2");
    EXPECT_THROW(harness::run("jb-bounds", c), Error);
}

TEST(Harness, ShippedConfigsUseKnownKeys) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(HYPERLAB_CONFIG_DIR)) {
        if (e.path().extension() != ".ini") continue;
        const auto c = Config::load(e.path().string());
        EXPECT_NO_THROW(c.check_known(harness::known_keys())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 10u);
}
