#include <gtest/gtest.h>

#include "evcoord/pipeline.hpp"
#include "evcoord/toml.hpp"

using namespace evcoord;

namespace {

const char* kSample = R"(# run config
[mdp]
s_max = 12
n_max = 10    # stations
slot_hours = 2.0

[experiment]
out_dir = "artifacts/run # one"
ntraj = [50, 1000]
months = [1, 3]
seed = 42
enabled = true
)";

}  // namespace

TEST(Toml, ParsesSectionsAndTypes) {
    const Toml t = Toml::parse(kSample);
    EXPECT_EQ(t.get_int("mdp.s_max"), 12);
    EXPECT_EQ(t.get_int("mdp.n_max"), 10);
    EXPECT_DOUBLE_EQ(t.get_double("mdp.slot_hours"), 2.0);
    EXPECT_EQ(t.get_string("experiment.out_dir"), "artifacts/run # one");
    EXPECT_EQ(t.get_int_array("experiment.ntraj"), (std::vector<long long>{50, 1000}));
    EXPECT_EQ(t.get_int_array("experiment.months"), (std::vector<long long>{1, 3}));
    EXPECT_TRUE(t.get_bool("experiment.enabled", false));
}

TEST(Toml, FallbacksAndPresence) {
    const Toml t = Toml::parse(kSample);
    EXPECT_TRUE(t.has("mdp.s_max"));
    EXPECT_FALSE(t.has("mdp.missing"));
    EXPECT_EQ(t.get_int("mdp.missing", 7), 7);
    EXPECT_DOUBLE_EQ(t.get_double("mdp.s_max"), 12.0);  // integer promotes
    EXPECT_EQ(t.get_string("experiment.name", "default"), "default");
}

TEST(Toml, TypeMismatchThrows) {
    const Toml t = Toml::parse(kSample);
    EXPECT_THROW(t.get_string("mdp.s_max"), std::runtime_error);
    EXPECT_THROW(t.get_int("experiment.out_dir"), std::runtime_error);
    EXPECT_THROW(t.get_int("mdp.slot_hours"), std::runtime_error);
    EXPECT_THROW(t.get_int("nope.nothing"), std::runtime_error);
}

TEST(Toml, MalformedInputThrowsWithLineNumber) {
    EXPECT_THROW(Toml::parse("[unclosed\nk = 1\n"), std::runtime_error);
    EXPECT_THROW(Toml::parse("just a bare line\n"), std::runtime_error);
    EXPECT_THROW(Toml::parse("k =\n"), std::runtime_error);
    EXPECT_THROW(Toml::parse("k = 1x\n"), std::runtime_error);
    try {
        Toml::parse("ok = 1\nbroken\n");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Toml, CanonicalDumpIsSorted) {
    const Toml t = Toml::parse("b = 2\na = 1\n");
    EXPECT_EQ(t.canonical(), "a=1\nb=2\n");
}

TEST(RunConfig, DefaultsFromEmptyConfig) {
    const RunConfig c = RunConfig::from_toml(Toml::parse(""));
    EXPECT_EQ(c.mdp.s_max, 12);
    EXPECT_EQ(c.mdp.n_max, 10);
    EXPECT_DOUBLE_EQ(c.mdp.penalty_weight, 13.0);
    EXPECT_EQ(c.year_days, 365);
    EXPECT_EQ(c.test_days, 92);
    EXPECT_EQ(c.train_pool_days(), 273);
    EXPECT_EQ(c.test_first_day(), 274);
    EXPECT_EQ(c.ntraj_axis, (std::vector<int>{1000}));
    EXPECT_EQ(c.months_axis, (std::vector<int>{1}));
}

TEST(RunConfig, OverridesApply) {
    const RunConfig c = RunConfig::from_toml(Toml::parse(R"(
[mdp]
s_max = 4
n_max = 3
penalty_weight = 9.0
[experiment]
test_days = 10
year_days = 100
months = [1, 3]
train_seeds = [1, 2, 3]
)"));
    EXPECT_EQ(c.mdp.s_max, 4);
    EXPECT_DOUBLE_EQ(c.mdp.penalty_weight, 9.0);
    EXPECT_EQ(c.train_pool_days(), 90);
    EXPECT_EQ(c.months_axis, (std::vector<int>{1, 3}));
    EXPECT_EQ(c.train_seeds, (std::vector<std::uint64_t>{1, 2, 3}));
}

TEST(RunConfig, RejectsTrainingThatOverlapsTestWindow) {
    // 10 months of training cannot fit in a 273-day train pool
    EXPECT_THROW(RunConfig::from_toml(Toml::parse("[experiment]\nmonths = [10]\n")),
                 std::invalid_argument);
    EXPECT_THROW(RunConfig::from_toml(Toml::parse("[experiment]\ntest_days = 365\n")),
                 std::invalid_argument);
    EXPECT_THROW(RunConfig::from_toml(Toml::parse("[experiment]\nntraj = [0]\n")),
                 std::invalid_argument);
    EXPECT_THROW(RunConfig::from_toml(Toml::parse("[mdp]\npenalty_weight = 2.0\n")),
                 std::invalid_argument);
}

TEST(RunConfig, HashTracksContent) {
    const RunConfig a = RunConfig::from_toml(Toml::parse("[experiment]\nseed = 1\n"));
    const RunConfig b = RunConfig::from_toml(Toml::parse("[experiment]\nseed = 1\n"));
    const RunConfig c = RunConfig::from_toml(Toml::parse("[experiment]\nseed = 2\n"));
    EXPECT_EQ(a.config_hash(), b.config_hash());
    EXPECT_NE(a.config_hash(), c.config_hash());
}

TEST(RunConfig, TrainingPeriodStaysInsidePool) {
    const RunConfig c = RunConfig::from_toml(Toml::parse(""));
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const int start = training_period_start(c, 3, seed);
        EXPECT_GE(start, 1);
        EXPECT_LE(start + 3 * 30 - 1, c.train_pool_days());
    }
}
