#include <gtest/gtest.h>

#include <fstream>

#include "synsim/trial_io.hpp"
#include "test_support.hpp"

namespace {

using namespace synsim;

TrialRecord short_trial() {
    TrialConfig cfg;
    cfg.duration = 1.0;
    cfg.steady_window = {0.5, 1.0};
    cfg.transient_window = {0.0, 0.5};
    cfg.record_stride = 50;
    return run_trial(cfg, 1);
}

TEST(FormatDouble, RoundTripsExactly) {
    RngStream rng(41, 0);
    for (int k = 0; k < 1000; ++k) {
        const double v = rng.normal() * std::pow(10.0, 20 * rng.normal());
        EXPECT_EQ(*parse_double(format_double(v)), v);
    }
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double(""));
}

TEST(TrialFile, SaveThenLoadGivesEqualRecord) {
    const TrialRecord r = short_trial();
    const auto path = synsim::testing::scratch_dir("roundtrip") / "t.txt";
    save_trial(r, path);
    const TrialRecord back = load_trial(path);
    EXPECT_EQ(back.trial_index, r.trial_index);
    EXPECT_EQ(back.seed, r.seed);
    EXPECT_EQ(back.s, r.s);
    EXPECT_EQ(back.time, r.time);
    EXPECT_EQ(back.y, r.y);
    EXPECT_EQ(back.y_hat, r.y_hat);
    EXPECT_EQ(back.ydot_hat, r.ydot_hat);
    EXPECT_EQ(back.u, r.u);
    EXPECT_EQ(back.ybar_hat, r.ybar_hat);
    EXPECT_EQ(back.z_d, r.z_d);
    EXPECT_EQ(back.certificates.task_max_increase, r.certificates.task_max_increase);
    EXPECT_EQ(serialize_trial(back), serialize_trial(r));
}

TEST(TrialFile, TruncatedIsParseError) {
    const std::string text = serialize_trial(short_trial());
    const std::string cut = text.substr(0, text.size() * 2 / 3);
    EXPECT_THROW(parse_trial(cut.substr(0, cut.rfind('\n') + 1)), ParseError);
    EXPECT_THROW(parse_trial(cut), ParseError);
    EXPECT_THROW(parse_trial(text.substr(0, 40)), ParseError);
    EXPECT_THROW(parse_trial(""), ParseError);
}

TEST(TrialFile, VersionMismatch) {
    std::string text = serialize_trial(short_trial());
    text.replace(text.find("# version: 1"), 12, "# version: 9");
    EXPECT_THROW(parse_trial(text), UnsupportedVersion);
}

TEST(TrialFile, BadFieldReportsPosition) {
    std::string text = serialize_trial(short_trial());
    const std::size_t header_end = text.find("\ntime,");
    const std::size_t row = text.find('\n', header_end + 1) + 1;
    text.insert(text.find(',', row) + 1, "abc");
    try {
        parse_trial(text, "bad.txt");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 10);
        EXPECT_GT(e.column(), 1);
        EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
    }
}

TEST(Config, JsonRoundTrip) {
    TrialConfig cfg;
    cfg.zeta = 0.8;
    cfg.omega_n = 7.86;
    cfg.s = synsim::testing::four_decimal_shares();
    cfg.edges = std::vector<Graph::Edge>{{0, 1}, {1, 2}, {2, 3}};
    cfg.seed = 99;
    const std::string json = config_to_json(cfg);
    EXPECT_EQ(config_to_json(config_from_json(json)), json);
}

TEST(Config, OverridesAndRejections) {
    TrialConfig cfg = apply_override(TrialConfig{}, "eta=6");
    EXPECT_EQ(cfg.eta, 6.0);
    cfg = apply_override(cfg, "s=[0.1,0.2,0.3,0.4]");
    EXPECT_EQ(cfg.s->size(), 4);
    EXPECT_THROW(apply_override(cfg, "nonsense=1"), std::invalid_argument);
    EXPECT_THROW(apply_override(cfg, "eta"), std::invalid_argument);
    EXPECT_THROW(config_from_json("{\"Q_noise\": [[1, 0]]}"), std::invalid_argument);
    EXPECT_THROW(config_from_json("{not json"), std::invalid_argument);
}

TEST(Config, FileLoading) {
    const auto dir = synsim::testing::scratch_dir("config");
    std::ofstream(dir / "c.json") << "{\"duration\": 12, \"steady_window\": [8, 12], \"transient_window\": [1, 8]}";
    const TrialConfig cfg = load_config_file(dir / "c.json");
    EXPECT_EQ(cfg.duration, 12.0);
    EXPECT_EQ(cfg.steady_window.begin, 8.0);
    EXPECT_ANY_THROW(load_config_file(dir / "missing.json"));
}

}  // namespace
