#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "isal/channel.hpp"
#include "isal/core_model.hpp"
#include "isal/fim.hpp"

namespace isal {

enum class Regime { SensingAbundant, SensingDeficient, Mixed };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::SensingAbundant: return "sensing-abundant";
        case Regime::SensingDeficient: return "sensing-deficient";
        case Regime::Mixed: return "mixed";
    }
    return "?";
}

inline constexpr double kAbundantRatio = 1e-2;
inline constexpr double kDeficientRatio = 1e-4;

struct ScenarioFixture {
    std::string name;
    NetworkScene scene;
    Regime regime;
    std::string note;
};

/// Sensing-to-localization RII ratio of one slot at unit power.
///
/// Takes the two active nodes nearest the target: the weakest of the four
/// sensing links among them over the localization link joining them.
inline double regime_ratio(const NetworkScene& scene, std::size_t slot, const ChannelParams& params) {
    const auto& target = scene.slot(slot).targets.at(0);
    std::vector<Position2D> actives;
    for (std::size_t j = 0; j < scene.active_count(); ++j) {
        actives.push_back(scene.position(active_node(scene.radar_count(), static_cast<int>(j) + 1), slot));
    }
    if (actives.size() < 2) throw ValidationError("regime ratio needs two active nodes");
    std::vector<std::size_t> order = iota_indices(actives.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return distance(actives[a], target) < distance(actives[b], target);
    });
    const Position2D& u = actives[order[0]];
    const Position2D& v = actives[order[1]];
    const double loc = rii_localization(params, 1.0, distance(u, v)).value;
    double sense = std::numeric_limits<double>::infinity();
    for (const Position2D* tx : {&u, &v}) {
        for (const Position2D* rx : {&u, &v}) {
            sense = std::min(sense, rii_sensing(params, 1.0, distance(*tx, target), distance(target, *rx)).value);
        }
    }
    return sense / loc;
}

inline Regime classify_ratio(double ratio) {
    if (ratio >= kAbundantRatio) return Regime::SensingAbundant;
    if (ratio <= kDeficientRatio) return Regime::SensingDeficient;
    return Regime::Mixed;
}

inline Regime classify_slot(const NetworkScene& scene, std::size_t slot, const ChannelParams& params) {
    return classify_ratio(regime_ratio(scene, slot, params));
}

/// Single-slot scenes by ratio; dual-slot scenes whose slots disagree are Mixed.
inline Regime classify_regime(const NetworkScene& scene, const ChannelParams& params) {
    const Regime first = classify_slot(scene, 0, params);
    for (std::size_t s = 1; s < scene.slot_count(); ++s) {
        if (classify_slot(scene, s, params) != first) return Regime::Mixed;
    }
    return first;
}

namespace fixtures {

inline NetworkScene single(std::vector<Position2D> anchors, std::vector<Position2D> radars, Position2D target) {
    return NetworkScene(std::move(anchors), {SlotState{std::move(radars), {target}}}, SyncMode::Synchronous);
}

inline NetworkScene dual(std::vector<Position2D> anchors, SlotState s1, SlotState s2) {
    return NetworkScene(std::move(anchors), {std::move(s1), std::move(s2)}, SyncMode::Synchronous);
}

inline NetworkScene abundant_a() {
    return single({{20, 20}, {110, 100}}, {{90, 100}, {180, 170}}, {100, 104});
}

inline NetworkScene abundant_b() {
    return single({{150, 20}, {20, 180}}, {{60, 60}, {75, 60}}, {67.5, 66});
}

inline NetworkScene deficient_c() {
    return single({{140, 190}, {190, 140}}, {{150, 150}, {185, 185}}, {15, 20});
}

inline NetworkScene uniform_d() {
    return single({{20, 40}, {180, 40}}, {{70, 100}, {130, 100}}, {100, 190});
}

}  // namespace fixtures

/// Frozen fixtures, all synchronous; switch with NetworkScene::with_mode.
/// Coordinates in meters inside a 200 m x 200 m area, 2 anchors, 2 radars, 1 target.
inline std::vector<ScenarioFixture> builtin_fixtures() {
    using namespace fixtures;
    std::vector<ScenarioFixture> out;
    out.push_back({"abundant-a", abundant_a(), Regime::SensingAbundant,
                   "target within 11 m of one radar and one anchor; the others far away"});
    out.push_back({"abundant-b", abundant_b(), Regime::SensingAbundant,
                   "two radars 15 m apart with the target between them; anchors at the edges"});
    out.push_back({"deficient-c", deficient_c(), Regime::SensingDeficient,
                   "actives clustered in one corner, target in the opposite corner"});
    out.push_back({"uniform-d", uniform_d(), Regime::SensingDeficient,
                   "nodes spread over the area, target at the far edge"});

    const auto a = abundant_a();
    const SlotState a1 = a.slot(0);
    const SlotState far{{{95, 103}, {184, 173}}, {{190, 20}}};
    const SlotState near{{{95, 103}, {184, 173}}, {{100, 104}}};
    out.push_back({"dual-symmetric", dual(a.anchors(), a1, a1), Regime::SensingAbundant,
                   "abundant-a geometry repeated in both slots"});
    out.push_back({"dual-abundant-deficient", dual(a.anchors(), a1, far), Regime::Mixed,
                   "abundant slot 1; target leaves the cluster in slot 2, radars move 5 m"});
    const SlotState first_far{a1.radars, {{190, 20}}};
    out.push_back({"dual-deficient-abundant", dual(a.anchors(), first_far, near), Regime::Mixed,
                   "target far from all actives in slot 1, next to a radar and an anchor in slot 2"});
    const auto u = uniform_d();
    out.push_back({"dual-uniform", dual(u.anchors(), u.slot(0), u.slot(0)), Regime::SensingDeficient,
                   "uniform-d geometry repeated in both slots"});
    return out;
}

inline const ScenarioFixture& find_fixture(const std::vector<ScenarioFixture>& all, const std::string& name) {
    for (const auto& f : all) {
        if (f.name == name) return f;
    }
    throw ValidationError("unknown fixture: " + name);
}

}  // namespace isal
