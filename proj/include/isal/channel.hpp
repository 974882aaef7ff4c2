#pragma once

#include <cmath>
#include <string>

#include "isal/errors.hpp"

namespace isal {

inline constexpr double kSpeedOfLight = 299792458.0;

// Transmit power doubles as per-slot energy: the slot lasts one second.
inline constexpr double kSlotDuration = 1.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double dbm_per_hz_to_watts_per_hz(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

// All quantities linear SI. dB values are converted once, at config parse.
struct ChannelParams {
    double carrier_frequency = 77e9;      // Hz
    double bandwidth = 500e6;             // Hz
    double antenna_gain = db_to_linear(10.0);
    double noise_psd = dbm_per_hz_to_watts_per_hz(-174.0);  // W/Hz
    double system_loss = db_to_linear(3.0);
    double radar_cross_section = 10.0;    // m^2
    double anchor_power_cap = 1.0;        // W
    double radar_power_cap = 1.0;         // W
    double total_energy = 10.0;           // J
    double velocity_variance = 0.01;      // m^2/s^2
    double drift_rate_variance = 1e-10;

    static ChannelParams defaults() { return {}; }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ValidationError(std::string("channel.") + name + " must be finite and > 0");
            }
        };
        positive(carrier_frequency, "f_c");
        positive(bandwidth, "B");
        positive(antenna_gain, "G_dB");
        positive(noise_psd, "N0_dBm_per_Hz");
        positive(system_loss, "L_dB");
        positive(radar_cross_section, "sigma");
        positive(anchor_power_cap, "P_a_max");
        positive(radar_power_cap, "P_r_max");
        positive(total_energy, "E_total");
        positive(velocity_variance, "eta2");
        positive(drift_rate_variance, "rho2");
    }

    // xi of the localization RII: lambda = xi * P / d^2, units 1/(W m^0).
    double localization_coefficient() const {
        const double c = kSpeedOfLight;
        const double four_pi = 4.0 * M_PI;
        return (8.0 * M_PI * M_PI * bandwidth * bandwidth / (c * c)) *
               (antenna_gain * antenna_gain * c * c) /
               (four_pi * four_pi * noise_psd * bandwidth * system_loss * carrier_frequency * carrier_frequency);
    }
};

// Range information intensity, 1/m^2. The FIM diagonal entry is c^2 times this.
struct Rii {
    double value = 0.0;
};

inline Rii rii_localization(const ChannelParams& params, double power, double d) {
    if (!(d > 0.0)) throw DegenerateGeometryError("localization link with zero length");
    if (power < 0.0) throw ValidationError("negative transmit power");
    return {params.localization_coefficient() * power / (d * d)};
}

inline Rii rii_sensing(const ChannelParams& params, double power, double d_tx_target, double d_target_rx) {
    if (!(d_tx_target > 0.0) || !(d_target_rx > 0.0)) {
        throw DegenerateGeometryError("sensing link with a zero-length leg");
    }
    if (power < 0.0) throw ValidationError("negative transmit power");
    const double legs = d_tx_target * d_tx_target * d_target_rx * d_target_rx;
    return {params.localization_coefficient() * power / legs * params.radar_cross_section / (4.0 * M_PI)};
}

}  // namespace isal
