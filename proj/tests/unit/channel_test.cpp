#include <gtest/gtest.h>

#include <random>

#include "isal/channel.hpp"
#include "oracles.hpp"

using namespace isal;

// 30-digit scalar evaluation at 77 GHz, 500 MHz, 10 dB, -174 dBm/Hz, 3 dB, 10 m^2, 1 W.
constexpr double kGoldenLocalization100m = 53083.378807310137056;
constexpr double kGoldenSensing100m100m = 4.2242410666014838829;

TEST(Rii, LocalizationGolden) {
    const auto p = ChannelParams::defaults();
    EXPECT_NEAR(rii_localization(p, 1.0, 100.0).value / kGoldenLocalization100m, 1.0, 1e-13);
}

TEST(Rii, SensingGolden) {
    const auto p = ChannelParams::defaults();
    EXPECT_NEAR(rii_sensing(p, 1.0, 100.0, 100.0).value / kGoldenSensing100m100m, 1.0, 1e-13);
}

TEST(Rii, CoefficientMatchesRawConstants) {
    EXPECT_NEAR(ChannelParams::defaults().localization_coefficient() / oracle::default_xi(), 1.0, 1e-14);
}

TEST(Rii, ZeroPowerGivesZero) {
    const auto p = ChannelParams::defaults();
    EXPECT_EQ(rii_localization(p, 0.0, 37.0).value, 0.0);
    EXPECT_EQ(rii_sensing(p, 0.0, 37.0, 12.0).value, 0.0);
}

TEST(Rii, InverseSquare) {
    const auto p = ChannelParams::defaults();
    EXPECT_NEAR(rii_localization(p, 0.7, 80.0).value / rii_localization(p, 0.7, 40.0).value, 0.25, 1e-15);
}

TEST(Rii, SensingOverLocalizationRatio) {
    const auto p = ChannelParams::defaults();
    for (double d : {1.0, 10.0, 55.5, 200.0}) {
        const double ratio = rii_sensing(p, 1.0, d, d).value / rii_localization(p, 1.0, d).value;
        EXPECT_NEAR(ratio / (p.radar_cross_section / (4 * M_PI * d * d)), 1.0, 1e-14);
    }
}

TEST(Rii, Errors) {
    const auto p = ChannelParams::defaults();
    EXPECT_THROW(rii_localization(p, 1.0, 0.0), DegenerateGeometryError);
    EXPECT_THROW(rii_sensing(p, 1.0, 0.0, 3.0), DegenerateGeometryError);
    EXPECT_THROW(rii_sensing(p, 1.0, 3.0, 0.0), DegenerateGeometryError);
    EXPECT_THROW(rii_localization(p, -1.0, 3.0), ValidationError);
}

TEST(RiiProperty, HomogeneousInPower) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 300.0), k(0.0, 5.0);
    const auto p = ChannelParams::defaults();
    for (int i = 0; i < 300; ++i) {
        const double d1 = u(rng), d2 = u(rng), s = k(rng), P = k(rng);
        EXPECT_NEAR(rii_localization(p, s * P, d1).value, s * rii_localization(p, P, d1).value,
                    1e-13 * rii_localization(p, s * P + 1e-300, d1).value + 1e-300);
        EXPECT_NEAR(rii_sensing(p, s * P, d1, d2).value, s * rii_sensing(p, P, d1, d2).value,
                    1e-13 * rii_sensing(p, s * P, d1, d2).value + 1e-300);
    }
}

TEST(RiiProperty, SensingBelowLocalizationAtComparableLength) {
    // sigma/(4 pi) <= d_tar_n^2 implies sensing <= localization over d_m_tar.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 300.0);
    const auto p = ChannelParams::defaults();
    const double floor = std::sqrt(p.radar_cross_section / (4 * M_PI));
    for (int i = 0; i < 500; ++i) {
        const double d1 = 0.1 + u(rng);
        const double d2 = floor + u(rng);
        EXPECT_LE(rii_sensing(p, 1.0, d1, d2).value, rii_localization(p, 1.0, d1).value * (1 + 1e-14));
    }
}

TEST(RiiProperty, UnitScaling) {
    auto p = ChannelParams::defaults();
    const double base = rii_localization(p, 1.0, 50.0).value;
    p.carrier_frequency *= 2.0;
    EXPECT_NEAR(rii_localization(p, 1.0, 50.0).value / base, 0.25, 1e-14);
    p = ChannelParams::defaults();
    p.bandwidth *= 3.0;
    EXPECT_NEAR(rii_localization(p, 1.0, 50.0).value / base, 3.0, 1e-14);
}

TEST(Channel, DefaultChannel) {
    const auto p = ChannelParams::defaults();
    EXPECT_EQ(p.carrier_frequency, 77e9);
    EXPECT_EQ(p.bandwidth, 500e6);
    EXPECT_NEAR(p.antenna_gain, 10.0, 1e-14);
    EXPECT_NEAR(p.system_loss, 1.9952623149688795, 1e-15);
    EXPECT_NEAR(p.noise_psd / 3.9810717055349565e-21, 1.0, 1e-14);
    EXPECT_EQ(p.radar_cross_section, 10.0);
    EXPECT_EQ(p.total_energy, 10.0);
    EXPECT_EQ(p.velocity_variance, 0.01);
    EXPECT_EQ(p.drift_rate_variance, 1e-10);
    EXPECT_NO_THROW(p.validate());
}

TEST(Channel, ValidateNamesField) {
    auto p = ChannelParams::defaults();
    p.bandwidth = -1.0;
    try {
        p.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("channel.B"), std::string::npos);
    }
}
