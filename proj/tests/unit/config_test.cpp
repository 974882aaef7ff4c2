#include <gtest/gtest.h>

#include "isal/config.hpp"
#include "isal/scenarios.hpp"

using namespace isal;

namespace {

const char* kMinimal = R"({
  "schema": 1,
  "nodes": [
    {"kind": "anchor", "id": "a1", "position": [0, 90]},
    {"kind": "anchor", "id": "a2", "position": [90, 0]},
    {"kind": "radar", "id": "r1", "position": [10, 10]},
    {"kind": "radar", "id": "r2", "position": [60, 20]},
    {"kind": "target", "id": "t1", "position": [40, 80]}
  ],
  "channel": {}
})";

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string replaced(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

TEST(Config, EmptyChannelGivesDefaults) {
    const auto cfg = parse_config_text(kMinimal);
    const auto p = cfg.params();
    const auto t = ChannelParams::defaults();
    EXPECT_EQ(p.carrier_frequency, 77e9);
    EXPECT_EQ(p.bandwidth, 500e6);
    EXPECT_EQ(p.antenna_gain, 10.0);
    EXPECT_DOUBLE_EQ(p.noise_psd, t.noise_psd);
    EXPECT_DOUBLE_EQ(p.system_loss, t.system_loss);
    EXPECT_EQ(p.radar_cross_section, 10.0);
    EXPECT_EQ(p.anchor_power_cap, 1.0);
    EXPECT_EQ(p.radar_power_cap, 1.0);
    EXPECT_EQ(p.total_energy, 10.0);
    EXPECT_EQ(p.velocity_variance, 0.01);
    EXPECT_EQ(p.drift_rate_variance, 1e-10);
    EXPECT_EQ(cfg.mode, SyncMode::Synchronous);
    EXPECT_EQ(cfg.slots, 1u);
    EXPECT_EQ(cfg.scheme, SchemeSelection::Both);
    const auto scene = cfg.scene();
    EXPECT_EQ(scene.radar_count(), 2u);
    EXPECT_EQ(scene.anchor_count(), 2u);
    EXPECT_EQ(scene.slot(0).targets[0], (Position2D{40, 80}));
}

TEST(Config, NegativeBandwidthNamesField) {
    const auto msg = error_of(replaced(kMinimal, "\"channel\": {}", "\"channel\": {\"B\": -1}"));
    EXPECT_NE(msg.find("channel.B"), std::string::npos) << msg;
}

TEST(Config, DuplicateId) {
    const auto msg = error_of(replaced(kMinimal, "\"id\": \"a2\"", "\"id\": \"a1\""));
    EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
    EXPECT_NE(msg.find("nodes[1].id"), std::string::npos) << msg;
}

TEST(Config, UnknownFieldNamed) {
    EXPECT_NE(error_of(replaced(kMinimal, "\"channel\": {}", "\"channel\": {\"bogus\": 1}")).find("channel.bogus"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"extra\": 0")).find("extra"),
              std::string::npos);
}

TEST(Config, StructuralErrors) {
    EXPECT_NE(error_of("{"), "");
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1,", "")).find("schema"), std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"mode\": \"later\"")).find("mode"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"slots\": 3")).find("slots"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"slots\": 2")).find("nodes[2]"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "[40, 80]", "[40]")).find("nodes[4].position"), std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"kind\": \"radar\"", "\"kind\": \"drone\"")).find("nodes[2].kind"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"solver\": {\"temporal_offdiag_sign\": 0}"))
                  .find("solver.temporal_offdiag_sign"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"schema\": 1", "\"schema\": 1, \"scheme\": \"fast\"")).find("scheme"),
              std::string::npos);
}

TEST(Config, SceneValidationSurfaces) {
    // Target outside nothing in particular, but coincident with a radar.
    EXPECT_THROW(parse_config_text(replaced(kMinimal, "[40, 80]", "[10, 10]")), Error);
    // No target at all.
    EXPECT_THROW(parse_config_text(replaced(kMinimal, ",\n    {\"kind\": \"target\", \"id\": \"t1\", \"position\": [40, 80]}", "")),
                 Error);
}

TEST(Config, ClockSection) {
    const auto cfg = parse_config_text(replaced(
        kMinimal, "\"channel\": {}",
        "\"clock\": {\"offset\": 1e-4, \"drift_rate\": 2e-5, \"stamp_noise_sd\": 1e-9, \"first_seed\": 5}"));
    ASSERT_TRUE(cfg.clock.has_value());
    EXPECT_EQ(cfg.clock->clock.offset, 1e-4);
    EXPECT_EQ(cfg.clock->clock.drift_rate, 2e-5);
    EXPECT_EQ(cfg.clock->exchange.stamp_noise_sd, 1e-9);
    EXPECT_EQ(cfg.clock->first_seed, 5u);
    EXPECT_NE(error_of(replaced(kMinimal, "\"channel\": {}", "\"clock\": {\"drift_rate\": 0.01}")).find("drift_rate"),
              std::string::npos);
    EXPECT_NE(error_of(replaced(kMinimal, "\"channel\": {}", "\"clock\": {\"forward_delay\": -1}")).find("forward_delay"),
              std::string::npos);
}

TEST(Config, RoundTripThroughExport) {
    for (const auto& f : builtin_fixtures()) {
        for (auto mode : {SyncMode::Synchronous, SyncMode::Asynchronous}) {
            const auto cfg = config_from_scene(f.scene.with_mode(mode), f.name);
            const auto back = parse_config_json(export_config_json(cfg));
            EXPECT_EQ(back.name, f.name);
            EXPECT_EQ(back.mode, mode);
            const auto s = back.scene();
            ASSERT_EQ(s.slot_count(), f.scene.slot_count());
            EXPECT_EQ(s.anchors(), f.scene.anchors());
            for (std::size_t k = 0; k < s.slot_count(); ++k) {
                EXPECT_EQ(s.slot(k).radars, f.scene.slot(k).radars);
                EXPECT_EQ(s.slot(k).targets, f.scene.slot(k).targets);
            }
            EXPECT_EQ(export_config_json(back), export_config_json(cfg));
        }
    }
}

TEST(Output, NumberFormat) {
    EXPECT_EQ(fmt_number(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt_number(2.0), "2");
    EXPECT_EQ(fmt_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Output, DriftCsv) {
    DriftStudy s;
    s.seeds = {1, 2};
    s.estimates = {DriftEstimate{0.5, 0.6, 0.01, 1, 11}, DriftEstimate{0.5, 0.7, 0.02, 1, 11}};
    s.mean = 0.015;
    s.variance = 5e-5;
    s.analytic_variance = 4e-5;
    EXPECT_EQ(drift_csv(s), "seed,tau_a,tau_b,k_tau\n1,0.5,0.59999999999999998,0.01\n2,0.5,0.69999999999999996,0.02\n");
    EXPECT_EQ(drift_summary_csv(s).substr(0, 45), "seeds,mean_k_tau,variance_k_tau,analytic_rho2");
}
