#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "isal/channel.hpp"
#include "isal/core_model.hpp"
#include "isal/errors.hpp"
#include "isal/linalg.hpp"

namespace isal {

// Active nodes are numbered radars first (1..Nr) then anchors (Nr+1..Nr+Na),
// which is the numbering used by the link index sets.
inline NodeId active_node(std::size_t radars, int active_index) {
    if (active_index <= static_cast<int>(radars)) return {NodeKind::Radar, active_index};
    return {NodeKind::Anchor, active_index - static_cast<int>(radars)};
}

// Per-node transmit power for one slot, ordered anchors then radars.
struct PowerAllocation {
    std::vector<double> watts;

    std::size_t size() const { return watts.size(); }
    double total() const {
        double s = 0.0;
        for (double w : watts) s += w;
        return s;
    }
};

inline std::size_t power_index(const NetworkScene& scene, const NodeId& id) {
    const auto i = static_cast<std::size_t>(id.index - 1);
    if (id.kind == NodeKind::Anchor) return i;
    if (id.kind == NodeKind::Radar) return scene.anchor_count() + i;
    throw ValidationError("targets do not transmit");
}

inline NodeId power_node(const NetworkScene& scene, std::size_t j) {
    if (j < scene.anchor_count()) return {NodeKind::Anchor, static_cast<int>(j + 1)};
    return {NodeKind::Radar, static_cast<int>(j - scene.anchor_count() + 1)};
}

struct SensingLink {
    NodeId transmitter;
    NodeId target;
    NodeId receiver;
};

struct RangingLink {
    NodeId transmitter;
    NodeId receiver;
};

// Sensing links first, then ranging links; both in transmitter-major order.
struct LinkSet {
    std::vector<SensingLink> sensing;
    std::vector<RangingLink> ranging;

    std::size_t size() const { return sensing.size() + ranging.size(); }
};

inline LinkSet enumerate_links(std::size_t radars, std::size_t anchors) {
    LinkSet links;
    const int active = static_cast<int>(radars + anchors);
    for (int m = 1; m <= active; ++m) {
        for (int n = 1; n <= active; ++n) {
            links.sensing.push_back({active_node(radars, m), {NodeKind::Target, 1}, active_node(radars, n)});
        }
    }
    for (int m = 1; m <= active; ++m) {
        for (int n = 1; n <= active; ++n) {
            const NodeId tx = active_node(radars, m);
            const NodeId rx = active_node(radars, n);
            if (m == n) continue;
            if (tx.kind != NodeKind::Radar && rx.kind != NodeKind::Radar) continue;
            links.ranging.push_back({tx, rx});
        }
    }
    return links;
}

inline LinkSet enumerate_links(const NetworkScene& scene, std::size_t slot) {
    if (slot >= scene.slot_count()) throw ValidationError("slot index out of range");
    return enumerate_links(scene.radar_count(), scene.anchor_count());
}

/// Delay derivatives with respect to radar and target positions.
///
/// Columns are [x_r1, y_r1, ..., x_rN, y_rN, x_t, y_t]. Row l is the gradient
/// of the link's propagation delay (seconds): cos/sin of the direction from
/// the far end of each leg towards the moving node, divided by c.
inline Matrix jacobian_positions(const NetworkScene& scene, std::size_t slot, const LinkSet& links) {
    const auto radars = static_cast<Index>(scene.radar_count());
    const Index cols = 2 * radars + 2;
    Matrix J = Matrix::Zero(static_cast<Index>(links.size()), cols);
    const double c = kSpeedOfLight;
    const NodeId tar{NodeKind::Target, 1};
    const Position2D& pt = scene.position(tar, slot);

    auto radar_col = [](const NodeId& id) { return 2 * static_cast<Index>(id.index - 1); };

    Index row = 0;
    for (const auto& link : links.sensing) {
        for (const NodeId& end : {link.transmitter, link.receiver}) {
            const Position2D& p = scene.position(end, slot);
            if (end.kind == NodeKind::Radar) {
                const auto [cx, sy] = direction(pt, p);
                J(row, radar_col(end)) += cx / c;
                J(row, radar_col(end) + 1) += sy / c;
            }
            const auto [cx, sy] = direction(p, pt);
            J(row, cols - 2) += cx / c;
            J(row, cols - 1) += sy / c;
        }
        ++row;
    }
    for (const auto& link : links.ranging) {
        const Position2D& pm = scene.position(link.transmitter, slot);
        const Position2D& pn = scene.position(link.receiver, slot);
        if (link.transmitter.kind == NodeKind::Radar) {
            const auto [cx, sy] = direction(pn, pm);
            J(row, radar_col(link.transmitter)) += cx / c;
            J(row, radar_col(link.transmitter) + 1) += sy / c;
        }
        if (link.receiver.kind == NodeKind::Radar) {
            const auto [cx, sy] = direction(pm, pn);
            J(row, radar_col(link.receiver)) += cx / c;
            J(row, radar_col(link.receiver) + 1) += sy / c;
        }
        ++row;
    }
    return J;
}

/// Delay derivatives with respect to the radar clock offsets.
///
/// Anchors share the reference clock; radar r carries offset tau_r. The
/// offset seen on link m->n is theta_n - theta_m with theta_anchor = 0, so a
/// row has +1 at the receiving radar, -1 at the transmitting radar.
inline Matrix jacobian_clocks(const NetworkScene& scene, std::size_t slot, const LinkSet& links) {
    if (scene.mode() != SyncMode::Asynchronous) {
        throw ModeError("clock-offset Jacobian requested for a synchronous scene");
    }
    if (slot >= scene.slot_count()) throw ValidationError("slot index out of range");
    const auto radars = static_cast<Index>(scene.radar_count());
    Matrix J = Matrix::Zero(static_cast<Index>(links.size()), radars);
    auto put = [&](Index row, const NodeId& tx, const NodeId& rx) {
        if (tx == rx) return;
        if (rx.kind == NodeKind::Radar) J(row, rx.index - 1) += 1.0;
        if (tx.kind == NodeKind::Radar) J(row, tx.index - 1) -= 1.0;
    };
    Index row = 0;
    for (const auto& link : links.sensing) put(row++, link.transmitter, link.receiver);
    for (const auto& link : links.ranging) put(row++, link.transmitter, link.receiver);
    return J;
}

/// Re-expresses clock columns in offsets relative to radar 1:
/// [tau_{1,2}, ..., tau_{1,Nr}, tau_{1,anchor}].
inline Matrix clock_jacobian_first_radar_reference(const Matrix& clock_jacobian) {
    const Index radars = clock_jacobian.cols();
    Matrix out(clock_jacobian.rows(), radars);
    for (Index k = 1; k < radars; ++k) out.col(k - 1) = clock_jacobian.col(k);
    out.col(radars - 1) = -clock_jacobian.rowwise().sum();
    return out;
}

// Full single-slot Jacobian in layout order [p_r, (tau,) p_t].
inline Matrix jacobian(const NetworkScene& scene, std::size_t slot, const LinkSet& links) {
    const Matrix Jp = jacobian_positions(scene, slot, links);
    if (scene.mode() == SyncMode::Synchronous) return Jp;
    const Matrix Jc = jacobian_clocks(scene, slot, links);
    const Index radar_cols = Jp.cols() - 2;
    Matrix J(Jp.rows(), Jp.cols() + Jc.cols());
    J << Jp.leftCols(radar_cols), Jc, Jp.rightCols(2);
    return J;
}

// RII of every link for the given powers (sensing first, then ranging).
inline Vector link_rii(const NetworkScene& scene, std::size_t slot, const LinkSet& links,
                       const PowerAllocation& powers, const ChannelParams& params) {
    if (powers.size() != scene.active_count()) {
        throw DimensionError("power vector has " + std::to_string(powers.size()) + " entries, scene has " +
                             std::to_string(scene.active_count()) + " active nodes");
    }
    Vector out(static_cast<Index>(links.size()));
    const Position2D& pt = scene.position({NodeKind::Target, 1}, slot);
    Index row = 0;
    for (const auto& link : links.sensing) {
        const double p = powers.watts[power_index(scene, link.transmitter)];
        out(row++) = rii_sensing(params, p, distance(scene.position(link.transmitter, slot), pt),
                                 distance(pt, scene.position(link.receiver, slot)))
                         .value;
    }
    for (const auto& link : links.ranging) {
        const double p = powers.watts[power_index(scene, link.transmitter)];
        out(row++) = rii_localization(params, p,
                                      distance(scene.position(link.transmitter, slot),
                                               scene.position(link.receiver, slot)))
                         .value;
    }
    return out;
}

inline Matrix symmetrized(const Matrix& F) { return 0.5 * (F + F.transpose()); }

/// Single-slot FIM J^T diag(c^2 lambda) J over the slot's own layout.
inline Matrix assemble_single_slot_fim(const NetworkScene& scene, std::size_t slot, const PowerAllocation& powers,
                                       const ChannelParams& params) {
    const LinkSet links = enumerate_links(scene, slot);
    const Matrix J = jacobian(scene, slot, links);
    const Vector w = kSpeedOfLight * kSpeedOfLight * link_rii(scene, slot, links, powers, params);
    return symmetrized(J.transpose() * w.asDiagonal() * J);
}

/// Unit-power FIM contribution of every active node (power order).
/// F(P) = sum_j P_j * F_j.
inline std::vector<Matrix> node_unit_fims(const NetworkScene& scene, std::size_t slot, const ChannelParams& params) {
    std::vector<Matrix> out;
    const LinkSet links = enumerate_links(scene, slot);
    const Matrix J = jacobian(scene, slot, links);
    for (std::size_t j = 0; j < scene.active_count(); ++j) {
        PowerAllocation unit{std::vector<double>(scene.active_count(), 0.0)};
        unit.watts[j] = 1.0;
        const Vector w = kSpeedOfLight * kSpeedOfLight * link_rii(scene, slot, links, unit, params);
        out.push_back(symmetrized(J.transpose() * w.asDiagonal() * J));
    }
    return out;
}

struct TemporalOptions {
    bool localization = true;  // T_Loc blocks
    bool clock = true;         // T_tau blocks (asynchronous only)
    double offdiag_sign = 1.0;
};

/// Cross-slot prior information for a dual-slot layout.
///
/// T_Loc = I/eta^2 on both radar-position diagonal blocks and on the
/// radar-radar cross-slot blocks (scaled by offdiag_sign); T_tau = I/rho^2
/// placed the same way on the clock blocks.
inline Matrix temporal_cooperation(const ParameterLayout& layout, const ChannelParams& params,
                                   const TemporalOptions& opts = {}) {
    const auto n = static_cast<Index>(layout.size());
    Matrix T = Matrix::Zero(n, n);
    auto place = [&](ParamGroup group, double info) {
        const auto a = layout.indices(group, 0);
        const auto b = layout.indices(group, 1);
        if (a.size() != b.size()) throw DimensionError("slot blocks differ in size");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto ai = static_cast<Index>(a[i]);
            const auto bi = static_cast<Index>(b[i]);
            T(ai, ai) += info;
            T(bi, bi) += info;
            T(ai, bi) += opts.offdiag_sign * info;
            T(bi, ai) += opts.offdiag_sign * info;
        }
    };
    if (opts.localization) place(ParamGroup::RadarPositions, 1.0 / params.velocity_variance);
    if (opts.clock) place(ParamGroup::ClockOffsets, 1.0 / params.drift_rate_variance);
    return T;
}

// Block-diagonal placement of per-slot information plus temporal cooperation.
inline Matrix compose_dual_slot_fim(const NetworkScene& scene, const Matrix& slot1_info, const Matrix& slot2_info,
                                    const ChannelParams& params, const TemporalOptions& opts = {}) {
    if (scene.slot_count() != 2) throw ValidationError("dual-slot FIM needs a 2-slot scene");
    const ParameterLayout layout = build_layout(scene);
    const Index block = static_cast<Index>(slot_block_size(scene.radar_count(), scene.mode()));
    if (slot1_info.rows() != block || slot2_info.rows() != block) {
        throw DimensionError("per-slot information block has wrong size");
    }
    Matrix F = temporal_cooperation(layout, params, opts);
    F.topLeftCorner(block, block) += slot1_info;
    F.bottomRightCorner(block, block) += slot2_info;
    return F;
}

inline Matrix assemble_dual_slot_fim(const NetworkScene& scene, const std::array<PowerAllocation, 2>& powers,
                                     const ChannelParams& params, const TemporalOptions& opts = {}) {
    if (scene.slot_count() != 2) {
        throw ValidationError("dual-slot FIM needs exactly 2 slots, scene has " +
                              std::to_string(scene.slot_count()));
    }
    return compose_dual_slot_fim(scene, assemble_single_slot_fim(scene, 0, powers[0], params),
                                 assemble_single_slot_fim(scene, 1, powers[1], params), params, opts);
}

inline std::string describe_indices(const std::vector<std::size_t>& idx, const ParameterLayout* layout) {
    std::string out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (k) out += ", ";
        if (layout && idx[k] < layout->size()) {
            out += to_string((*layout)[idx[k]]);
        } else {
            out += "#" + std::to_string(idx[k]);
        }
    }
    return out;
}

/// Schur complement of F onto `keep`: F_aa - F_ab F_bb^-1 F_ba.
inline Matrix efim(const Matrix& F, const std::vector<std::size_t>& keep, const ParameterLayout* layout = nullptr) {
    const auto drop = complement(static_cast<std::size_t>(F.rows()), keep);
    const Matrix Faa = principal_block(F, keep);
    if (drop.empty()) return Faa;
    const SymmetricFactor fb(principal_block(F, drop));
    if (!fb.ok()) {
        std::vector<std::size_t> names;
        for (auto i : fb.weak_indices()) names.push_back(drop[i]);
        throw NonIdentifiableError("nuisance block is rank deficient; non-identifiable: " +
                                   describe_indices(names, layout));
    }
    const Matrix Fab = select_rows_cols(F, keep, drop);
    return symmetrized(Faa - Fab * fb.solve(Fab.transpose()));
}

/// tr((F^-1)_gg): squared error bound of the parameters in `group`.
inline double speb(const Matrix& F, const std::vector<std::size_t>& group, const ParameterLayout* layout = nullptr) {
    const SymmetricFactor fac(F);
    if (!fac.ok()) {
        throw NonIdentifiableError("information matrix is singular; non-identifiable: " +
                                   describe_indices(fac.weak_indices(), layout));
    }
    Matrix sel = Matrix::Zero(F.rows(), static_cast<Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) sel(static_cast<Index>(group[k]), static_cast<Index>(k)) = 1.0;
    const Matrix cols = fac.solve(sel);
    double tr = 0.0;
    for (std::size_t k = 0; k < group.size(); ++k) tr += cols(static_cast<Index>(group[k]), static_cast<Index>(k));
    return tr;
}

inline double speb(const Matrix& F, const ParameterLayout& layout, ParamGroup group, std::size_t slot) {
    const auto idx = layout.indices(group, slot);
    if (idx.empty()) throw ValidationError(std::string("parameter group ") + to_string(group) + " absent from layout");
    return speb(F, idx, &layout);
}

// Header line of layout entry names, then one row per line.
inline void write_fim_dump(std::ostream& os, const Matrix& F, const ParameterLayout& layout) {
    for (std::size_t i = 0; i < layout.size(); ++i) {
        os << (i ? " " : "") << to_string(layout[i]);
    }
    os << '\n';
    char buf[40];
    for (Index r = 0; r < F.rows(); ++r) {
        for (Index c = 0; c < F.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", F(r, c));
            os << (c ? " " : "") << buf;
        }
        os << '\n';
    }
}

}  // namespace isal
