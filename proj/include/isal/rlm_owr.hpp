#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "isal/errors.hpp"

namespace isal {

// Offset of clock 2 against the reference clock 1: c2(t) = t - tau(t).
struct ClockModel {
    double offset = 0.0;      // tau_0, s
    double drift_rate = 0.0;  // k

    double tau(double t) const { return offset + drift_rate * t; }
    double local_time(double t) const { return t - tau(t); }

    void validate(double drift_bound = 1e-3) const {
        if (!std::isfinite(offset) || !std::isfinite(drift_rate)) throw ValidationError("clock model must be finite");
        if (!(std::abs(drift_rate) < drift_bound)) throw ValidationError("clock drift rate exceeds the sanity bound");
    }
};

struct ExchangeRecord {
    double c_1a = 0.0;        // node 1 sends, slot 1
    double c_1a_prime = 0.0;  // node 1 receives the reply, slot 1
    double c_2a = 0.0;        // node 2 receives, slot 1 (its own clock)
    double c_1b = 0.0;
    double c_1b_prime = 0.0;
    double c_2b = 0.0;
};

struct DriftEstimate {
    double tau_a = 0.0;
    double tau_b = 0.0;
    double drift_rate = 0.0;
    double midpoint_a = 0.0;
    double midpoint_b = 0.0;
};

struct ExchangeConfig {
    double slot1_send = 0.0;
    double slot2_send = 10.0;
    double forward_delay = 1e-6;   // node 1 -> node 2, s
    double reverse_delay = -1.0;   // < 0: same as forward
    double processing_delay = 0.0; // reply turnaround at node 2, s
    double stamp_noise_sd = 0.0;

    double reverse() const { return reverse_delay < 0.0 ? forward_delay : reverse_delay; }

    void validate() const {
        if (!(forward_delay >= 0.0) || !(reverse() >= 0.0) || !(processing_delay >= 0.0)) {
            throw ValidationError("exchange delays must be >= 0");
        }
        if (!(stamp_noise_sd >= 0.0)) throw ValidationError("stamp noise sd must be >= 0");
        if (!(slot2_send >= slot1_send)) throw ValidationError("slot-2 send must not precede slot-1 send");
        if (!std::isfinite(slot1_send) || !std::isfinite(slot2_send)) throw ValidationError("send times must be finite");
    }
};

/// One reverse-link-modified one-way ranging exchange per slot. Each stamp
/// carries independent N(0, sd^2) noise.
inline ExchangeRecord simulate_exchange(const ClockModel& clock2, const ExchangeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sd = cfg.stamp_noise_sd;
    auto jitter = [&] { return sd > 0.0 ? sd * noise(rng) : 0.0; };
    auto slot = [&](double send, double& c1, double& c1p, double& c2) {
        const double arrival = send + cfg.forward_delay;
        c1 = send + jitter();
        c2 = clock2.local_time(arrival) + jitter();
        c1p = arrival + cfg.processing_delay + cfg.reverse() + jitter();
    };
    ExchangeRecord rec;
    slot(cfg.slot1_send, rec.c_1a, rec.c_1a_prime, rec.c_2a);
    slot(cfg.slot2_send, rec.c_1b, rec.c_1b_prime, rec.c_2b);
    return rec;
}

inline ExchangeRecord simulate_exchange(const ClockModel& clock2, double slot1_send, double slot2_send,
                                        double one_way_delay, double stamp_noise_sd, std::uint64_t seed) {
    ExchangeConfig cfg;
    cfg.slot1_send = slot1_send;
    cfg.slot2_send = slot2_send;
    cfg.forward_delay = one_way_delay;
    cfg.stamp_noise_sd = stamp_noise_sd;
    return simulate_exchange(clock2, cfg, seed);
}

inline DriftEstimate estimate_drift(const ExchangeRecord& rec) {
    DriftEstimate est;
    est.midpoint_a = 0.5 * (rec.c_1a + rec.c_1a_prime);
    est.midpoint_b = 0.5 * (rec.c_1b + rec.c_1b_prime);
    est.tau_a = est.midpoint_a - rec.c_2a;
    est.tau_b = est.midpoint_b - rec.c_2b;
    const double span = est.midpoint_b - est.midpoint_a;
    if (span == 0.0) throw NumericError("exchange midpoints coincide; drift rate undefined");
    est.drift_rate = (est.tau_b - est.tau_a) / span;
    return est;
}

/// First-order variance of the drift estimate: midpoints carry sd^2/2 each,
/// node-2 stamps sd^2 each.
inline double drift_variance_estimate(double noise_sd, const ExchangeRecord& rec, double drift_rate = 0.0) {
    if (!(noise_sd >= 0.0)) throw ValidationError("noise sd must be >= 0");
    if (noise_sd == 0.0) return 0.0;
    const double span = 0.5 * (rec.c_1b + rec.c_1b_prime) - 0.5 * (rec.c_1a + rec.c_1a_prime);
    if (span == 0.0) throw NumericError("exchange midpoints coincide; drift rate undefined");
    const double s2 = noise_sd * noise_sd;
    const double one_minus_k = 1.0 - drift_rate;
    return (one_minus_k * one_minus_k * s2 + 2.0 * s2) / (span * span);
}

// rho^2 as consumed by the clock temporal prior; zero would make it infinite.
inline double clamp_drift_variance(double rho2, double floor = 1e-30) { return rho2 < floor ? floor : rho2; }

inline void write_exchange_csv(std::ostream& os, const ExchangeRecord& rec) {
    os.precision(17);
    os << "stamp,value\n";
    os << "c_1a," << rec.c_1a << "\n";
    os << "c_1a_prime," << rec.c_1a_prime << "\n";
    os << "c_2a," << rec.c_2a << "\n";
    os << "c_1b," << rec.c_1b << "\n";
    os << "c_1b_prime," << rec.c_1b_prime << "\n";
    os << "c_2b," << rec.c_2b << "\n";
}

struct DriftStudy {
    std::vector<std::uint64_t> seeds;
    std::vector<DriftEstimate> estimates;
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    double analytic_variance = 0.0;
};

inline DriftStudy run_drift_study(const ClockModel& clock2, const ExchangeConfig& cfg, std::size_t seeds,
                                  std::uint64_t first_seed = 1, double drift_bound = 1e-3) {
    clock2.validate(drift_bound);
    DriftStudy study;
    for (std::size_t i = 0; i < seeds; ++i) {
        const std::uint64_t seed = first_seed + i;
        study.seeds.push_back(seed);
        study.estimates.push_back(estimate_drift(simulate_exchange(clock2, cfg, seed)));
    }
    double sum = 0.0;
    for (const auto& e : study.estimates) sum += e.drift_rate;
    study.mean = seeds ? sum / static_cast<double>(seeds) : 0.0;
    double ss = 0.0;
    for (const auto& e : study.estimates) ss += (e.drift_rate - study.mean) * (e.drift_rate - study.mean);
    study.variance = seeds > 1 ? ss / static_cast<double>(seeds - 1) : 0.0;
    ExchangeConfig quiet = cfg;
    quiet.stamp_noise_sd = 0.0;
    study.analytic_variance =
        drift_variance_estimate(cfg.stamp_noise_sd, simulate_exchange(clock2, quiet, 0), clock2.drift_rate);
    return study;
}

}  // namespace isal
