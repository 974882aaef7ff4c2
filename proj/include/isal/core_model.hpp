#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "isal/errors.hpp"

namespace isal {

enum class NodeKind { Anchor, Radar, Target };

enum class SyncMode { Synchronous, Asynchronous };

inline const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Anchor: return "anchor";
        case NodeKind::Radar: return "radar";
        case NodeKind::Target: return "target";
    }
    return "?";
}

inline const char* to_string(SyncMode mode) {
    return mode == SyncMode::Synchronous ? "sync" : "async";
}

// Node label; index is 1-based within its kind.
struct NodeId {
    NodeKind kind = NodeKind::Anchor;
    int index = 1;

    auto operator<=>(const NodeId&) const = default;
};

inline std::string to_string(const NodeId& id) {
    return std::string(to_string(id.kind)) + std::to_string(id.index);
}

struct Position2D {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Position2D&) const = default;
};

/// Euclidean distance in meters.
inline double distance(const Position2D& a, const Position2D& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Direction of the vector from `from` to `to`, in (-pi, pi].
///
/// Quadrant-aware, so cos/sin of the result are the components of the unit
/// vector pointing from `from` to `to`.
inline double angle(const Position2D& from, const Position2D& to) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    if (dx == 0.0 && dy == 0.0) {
        throw DegenerateGeometryError("angle between coincident points is undefined");
    }
    const double phi = std::atan2(dy, dx);
    // atan2 returns -pi for (negative x, -0.0); fold onto +pi.
    return phi == -M_PI ? M_PI : phi;
}

// (cos, sin) of angle(from, to), computed from the components so that axis
// aligned geometry gives exact zeros.
inline std::pair<double, double> direction(const Position2D& from, const Position2D& to) {
    const double d = distance(from, to);
    return {(to.x - from.x) / d, (to.y - from.y) / d};
}

struct SlotState {
    std::vector<Position2D> radars;
    std::vector<Position2D> targets;
};

// Anchors fixed across slots, radars and a single target per slot.
class NetworkScene {
public:
    NetworkScene(std::vector<Position2D> anchors, std::vector<SlotState> slots, SyncMode mode)
        : anchors_(std::move(anchors)), slots_(std::move(slots)), mode_(mode) {
        validate();
    }

    const std::vector<Position2D>& anchors() const { return anchors_; }
    const std::vector<SlotState>& slots() const { return slots_; }
    const SlotState& slot(std::size_t s) const { return slots_.at(s); }
    SyncMode mode() const { return mode_; }

    std::size_t slot_count() const { return slots_.size(); }
    std::size_t anchor_count() const { return anchors_.size(); }
    std::size_t radar_count() const { return slots_.front().radars.size(); }
    std::size_t target_count() const { return slots_.front().targets.size(); }
    std::size_t active_count() const { return anchor_count() + radar_count(); }

    const Position2D& position(const NodeId& id, std::size_t s) const {
        const auto i = static_cast<std::size_t>(id.index - 1);
        switch (id.kind) {
            case NodeKind::Anchor: return anchors_.at(i);
            case NodeKind::Radar: return slots_.at(s).radars.at(i);
            case NodeKind::Target: return slots_.at(s).targets.at(i);
        }
        throw ValidationError("unknown node kind");
    }

    NetworkScene with_mode(SyncMode mode) const { return NetworkScene(anchors_, slots_, mode); }

    // Scene holding only slot `s`, same anchors and mode.
    NetworkScene single_slot(std::size_t s) const {
        return NetworkScene(anchors_, {slots_.at(s)}, mode_);
    }

private:
    void validate() const {
        if (anchors_.empty()) throw ValidationError("scene needs at least one anchor");
        if (slots_.empty() || slots_.size() > 2) {
            throw ValidationError("scene must have 1 or 2 slots, got " + std::to_string(slots_.size()));
        }
        auto check_finite = [](const Position2D& p, const std::string& what) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw ValidationError(what + ": non-finite coordinate");
            }
        };
        for (std::size_t a = 0; a < anchors_.size(); ++a) {
            check_finite(anchors_[a], "anchor" + std::to_string(a + 1));
        }
        const std::size_t radars = slots_.front().radars.size();
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            const auto& slot = slots_[s];
            const std::string tag = "slot " + std::to_string(s + 1);
            if (slot.radars.empty()) throw ValidationError(tag + ": needs at least one radar");
            if (slot.targets.size() != 1) {
                throw ValidationError(tag + ": exactly one target is supported, got " +
                                      std::to_string(slot.targets.size()));
            }
            if (slot.radars.size() != radars) {
                throw ValidationError(tag + ": radar count differs from slot 1");
            }
            std::vector<std::pair<std::string, Position2D>> nodes;
            for (std::size_t a = 0; a < anchors_.size(); ++a) {
                nodes.emplace_back("anchor" + std::to_string(a + 1), anchors_[a]);
            }
            for (std::size_t r = 0; r < slot.radars.size(); ++r) {
                check_finite(slot.radars[r], tag + " radar" + std::to_string(r + 1));
                nodes.emplace_back("radar" + std::to_string(r + 1), slot.radars[r]);
            }
            check_finite(slot.targets[0], tag + " target1");
            nodes.emplace_back("target1", slot.targets[0]);
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                    if (nodes[i].second == nodes[j].second) {
                        throw ValidationError(tag + ": " + nodes[i].first + " and " + nodes[j].first +
                                              " share a position");
                    }
                }
            }
        }
    }

    std::vector<Position2D> anchors_;
    std::vector<SlotState> slots_;
    SyncMode mode_;
};

enum class ParamRole { RadarX, RadarY, ClockOffset, TargetX, TargetY };

enum class ParamGroup { RadarPositions, ClockOffsets, TargetPositions };

inline const char* to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::RadarPositions: return "radar-positions";
        case ParamGroup::ClockOffsets: return "clock-offsets";
        case ParamGroup::TargetPositions: return "target-positions";
    }
    return "?";
}

struct LayoutEntry {
    ParamRole role;
    NodeId node;
    std::size_t slot;  // 0-based

    bool operator==(const LayoutEntry&) const = default;
};

inline std::string to_string(const LayoutEntry& e) {
    std::string suffix;
    switch (e.role) {
        case ParamRole::RadarX:
        case ParamRole::TargetX: suffix = "x"; break;
        case ParamRole::RadarY:
        case ParamRole::TargetY: suffix = "y"; break;
        case ParamRole::ClockOffset: suffix = "tau"; break;
    }
    return "s" + std::to_string(e.slot + 1) + "." + to_string(e.node) + "." + suffix;
}

// Ordered parameter vector: per slot [p_r, (tau,) p_t], slot blocks concatenated.
class ParameterLayout {
public:
    ParameterLayout() = default;
    explicit ParameterLayout(std::vector<LayoutEntry> entries) : entries_(std::move(entries)) {}

    std::size_t size() const { return entries_.size(); }
    const LayoutEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<LayoutEntry>& entries() const { return entries_; }

    std::vector<std::size_t> indices(ParamGroup group, std::size_t slot) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.slot != slot) continue;
            const bool match = (group == ParamGroup::RadarPositions &&
                                (e.role == ParamRole::RadarX || e.role == ParamRole::RadarY)) ||
                               (group == ParamGroup::ClockOffsets && e.role == ParamRole::ClockOffset) ||
                               (group == ParamGroup::TargetPositions &&
                                (e.role == ParamRole::TargetX || e.role == ParamRole::TargetY));
            if (match) out.push_back(i);
        }
        return out;
    }

    std::vector<std::size_t> slot_indices(std::size_t slot) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].slot == slot) out.push_back(i);
        }
        return out;
    }

    bool operator==(const ParameterLayout&) const = default;

private:
    std::vector<LayoutEntry> entries_;
};

inline std::size_t slot_block_size(std::size_t radars, SyncMode mode) {
    return 2 * (radars + 1) + (mode == SyncMode::Asynchronous ? radars : 0);
}

inline ParameterLayout build_layout(const NetworkScene& scene) {
    std::vector<LayoutEntry> entries;
    const int radars = static_cast<int>(scene.radar_count());
    for (std::size_t s = 0; s < scene.slot_count(); ++s) {
        for (int r = 1; r <= radars; ++r) {
            entries.push_back({ParamRole::RadarX, {NodeKind::Radar, r}, s});
            entries.push_back({ParamRole::RadarY, {NodeKind::Radar, r}, s});
        }
        if (scene.mode() == SyncMode::Asynchronous) {
            for (int r = 1; r <= radars; ++r) {
                entries.push_back({ParamRole::ClockOffset, {NodeKind::Radar, r}, s});
            }
        }
        entries.push_back({ParamRole::TargetX, {NodeKind::Target, 1}, s});
        entries.push_back({ParamRole::TargetY, {NodeKind::Target, 1}, s});
    }
    return ParameterLayout(std::move(entries));
}

}  // namespace isal
