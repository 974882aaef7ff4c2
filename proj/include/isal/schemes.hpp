#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "isal/channel.hpp"
#include "isal/core_model.hpp"
#include "isal/fim.hpp"
#include "isal/optimizer.hpp"

namespace isal {

enum class Scheme { Integrated, Stepwise };

enum class StepKind { Localization, Clock, Sensing };

inline const char* to_string(Scheme s) { return s == Scheme::Integrated ? "integrated" : "stepwise"; }

inline const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::Localization: return "localization";
        case StepKind::Clock: return "clock";
        case StepKind::Sensing: return "sensing";
    }
    return "?";
}

// Per-step or per-slot energies (J), summing to the total.
struct EnergySplit {
    std::vector<double> parts;

    double total() const {
        double s = 0.0;
        for (double p : parts) s += p;
        return s;
    }
};

struct StageResult {
    std::size_t slot = 0;
    StepKind step = StepKind::Sensing;
    double budget = 0.0;
    bool solved = false;  // false when the budget was zero or the group was not identifiable
    AllocationSolution solution;
};

struct TraceRow {
    std::size_t lattice_index = 0;
    EnergySplit split;
    // Single-slot stepwise: objective of each step. Dual-slot: sensing SPEB of each slot.
    std::vector<double> stage_objectives;
    double objective = std::numeric_limits<double>::infinity();  // +inf: not identifiable
};

struct AllocationReport {
    Scheme scheme = Scheme::Integrated;
    SyncMode mode = SyncMode::Synchronous;
    std::size_t slot_count = 1;
    std::vector<StepKind> steps;  // step order of the per-slot procedure
    EnergySplit best_split;
    std::size_t best_index = 0;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<StageResult> stages;  // of the best lattice point
    std::vector<double> final_speb;   // sensing SPEB per slot at the best point
    std::vector<TraceRow> trace;
    ParameterLayout layout;
    Matrix final_fim;
};

struct SchemeOptions {
    double grid_step = 0.0;  // <= 0: total energy / 20
    SolverOptions solver;
    TemporalOptions temporal;
    bool pruned = false;     // asynchronous stepwise: keep only E_clock <= E_loc <= E_sense
    unsigned threads = 0;    // 0: ISAL_THREADS or hardware concurrency
};

inline double default_grid_step(const ChannelParams& params) { return params.total_energy / 20.0; }

/// Splits of `total` into `parts` non-negative shares; all but the last are
/// multiples of `step`, the last takes the remainder. Lexicographic order.
inline std::vector<EnergySplit> energy_lattice(double total, double step, std::size_t parts) {
    if (!(step > 0.0) || step > total * (1.0 + 1e-12)) {
        throw ValidationError("grid step must lie in (0, E_total]");
    }
    const int units = static_cast<int>(std::floor(total / step + 1e-9));
    std::vector<EnergySplit> out;
    std::vector<int> k(parts, 0);
    auto emit = [&] {
        EnergySplit s;
        double used = 0.0;
        for (std::size_t i = 0; i + 1 < parts; ++i) {
            s.parts.push_back(k[i] * step);
            used += k[i] * step;
        }
        s.parts.push_back(std::max(0.0, total - used));
        out.push_back(std::move(s));
    };
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == parts) {
            k[i] = left;
            emit();
            return;
        }
        for (int v = 0; v <= left; ++v) {
            k[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, units);
    return out;
}

namespace detail {

inline unsigned thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ISAL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count); results are written by index so the
// outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline std::vector<double> power_caps(const NetworkScene& scene, const ChannelParams& params) {
    std::vector<double> caps(scene.anchor_count(), params.anchor_power_cap);
    caps.insert(caps.end(), scene.radar_count(), params.radar_power_cap);
    return caps;
}

inline Matrix embed(const Matrix& block, std::size_t offset, Index n) {
    Matrix out = Matrix::Zero(n, n);
    out.block(static_cast<Index>(offset), static_cast<Index>(offset), block.rows(), block.cols()) = block;
    return out;
}

inline std::vector<std::size_t> shifted(const std::vector<std::size_t>& idx, std::size_t offset) {
    std::vector<std::size_t> out;
    for (auto i : idx) out.push_back(i + offset);
    return out;
}

inline std::vector<std::size_t> merged(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

inline std::vector<std::size_t> positions_in(const std::vector<std::size_t>& subset,
                                             const std::vector<std::size_t>& within) {
    std::vector<std::size_t> out;
    for (auto s : subset) {
        const auto it = std::find(within.begin(), within.end(), s);
        if (it == within.end()) throw ValidationError("objective index outside the step view");
        out.push_back(static_cast<std::size_t>(it - within.begin()));
    }
    return out;
}

struct StepSpec {
    StepKind kind;
    std::vector<std::size_t> view;       // parameters entering this step's information matrix
    std::vector<std::size_t> objective;  // subset of view
};

// Step order and views of the per-slot stepwise procedure, over a layout
// where the slot block starts at `offset`.
inline std::vector<StepSpec> slot_steps(const ParameterLayout& slot_layout, SyncMode mode, std::size_t offset) {
    const auto radar = shifted(slot_layout.indices(ParamGroup::RadarPositions, 0), offset);
    const auto target = shifted(slot_layout.indices(ParamGroup::TargetPositions, 0), offset);
    const auto all = shifted(iota_indices(slot_layout.size()), offset);
    std::vector<StepSpec> steps;
    steps.push_back({StepKind::Localization, radar, radar});
    if (mode == SyncMode::Asynchronous) {
        const auto clock = shifted(slot_layout.indices(ParamGroup::ClockOffsets, 0), offset);
        steps.push_back({StepKind::Clock, merged(radar, clock), clock});
    }
    steps.push_back({StepKind::Sensing, all, target});
    return steps;
}

struct StepsOutcome {
    std::vector<StageResult> stages;
    std::vector<double> objectives;
    Matrix signal;  // information gathered by all steps, full dimension
    Matrix final_information;  // base + signal
    double final_objective = std::numeric_limits<double>::infinity();
};

/// Runs the steps in order with the given budgets. Each step sees
/// base + info of earlier steps, restricted to (context ∪ view), as prior;
/// its optimal signal information is then added for the next step.
inline StepsOutcome run_steps(const Matrix& base, const std::vector<Matrix>& unit_fims,
                              const std::vector<std::size_t>& context, const std::vector<StepSpec>& steps,
                              const std::vector<double>& budgets, const std::vector<double>& caps, std::size_t slot,
                              const SolverOptions& solver) {
    StepsOutcome out;
    const Index n = base.rows();
    out.signal = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto idx = merged(context, steps[k].view);
        AllocationProblem problem;
        problem.prior = principal_block(base + out.signal, idx);
        for (const auto& F : unit_fims) problem.unit_fims.push_back(principal_block(F, idx));
        problem.objective = positions_in(steps[k].objective, idx);
        problem.bounds = {caps, budgets[k]};

        StageResult stage;
        stage.slot = slot;
        stage.step = steps[k].kind;
        stage.budget = budgets[k];
        stage.solution.powers.watts.assign(caps.size(), 0.0);
        stage.solution.objective = std::numeric_limits<double>::infinity();
        if (budgets[k] > 0.0) {
            try {
                stage.solution = solve_allocation(problem, solver);
                stage.solved = true;
            } catch (const NonIdentifiableError&) {
                stage.solved = false;
            }
        } else {
            stage.solution.objective = objective_value(problem, stage.solution.powers.watts);
        }
        const Matrix sig = problem.signal_information(stage.solution.powers.watts);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < idx.size(); ++j) {
                out.signal(static_cast<Index>(idx[i]), static_cast<Index>(idx[j])) +=
                    sig(static_cast<Index>(i), static_cast<Index>(j));
            }
        }
        out.objectives.push_back(stage.solution.objective);
        out.stages.push_back(std::move(stage));
    }
    out.final_objective = out.objectives.back();
    out.final_information = base + out.signal;
    return out;
}

inline double speb_or_inf(const Matrix& F, const std::vector<std::size_t>& group) {
    try {
        const double v = speb(F, group);
        return std::isfinite(v) && v > 0.0 ? v : std::numeric_limits<double>::infinity();
    } catch (const NonIdentifiableError&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline std::size_t argmin_trace(const std::vector<TraceRow>& trace) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].objective < trace[best].objective) best = i;
    }
    return best;
}

inline std::vector<StepKind> step_kinds(const std::vector<StepSpec>& steps) {
    std::vector<StepKind> out;
    for (const auto& s : steps) out.push_back(s.kind);
    return out;
}

// One slot of a scene as its own single-slot problem space.
struct SlotSpace {
    NetworkScene scene;
    ParameterLayout layout;
    std::vector<Matrix> unit_fims;
    std::vector<double> caps;

    SlotSpace(const NetworkScene& full, std::size_t slot, const ChannelParams& params)
        : scene(full.single_slot(slot)),
          layout(build_layout(scene)),
          unit_fims(node_unit_fims(scene, 0, params)),
          caps(power_caps(scene, params)) {}
};

}  // namespace detail

/// Minimizes the target SPEB over the full single-slot FIM in one program.
inline AllocationReport run_integrated_single_slot(const NetworkScene& scene, const ChannelParams& params,
                                                   const SchemeOptions& opts = {}) {
    if (scene.slot_count() != 1) throw ValidationError("integrated single-slot scheme needs a 1-slot scene");
    params.validate();
    const detail::SlotSpace space(scene, 0, params);
    AllocationProblem problem;
    problem.prior = Matrix::Zero(static_cast<Index>(space.layout.size()), static_cast<Index>(space.layout.size()));
    problem.unit_fims = space.unit_fims;
    problem.objective = space.layout.indices(ParamGroup::TargetPositions, 0);
    problem.bounds = {space.caps, params.total_energy / kSlotDuration};
    problem.names = space.layout;

    AllocationReport report;
    report.scheme = Scheme::Integrated;
    report.mode = scene.mode();
    report.slot_count = 1;
    report.steps = {StepKind::Sensing};
    report.layout = space.layout;

    StageResult stage;
    stage.step = StepKind::Sensing;
    stage.budget = params.total_energy;
    stage.solution = solve_allocation(problem, opts.solver);
    stage.solved = true;

    report.final_fim = assemble_single_slot_fim(scene, 0, stage.solution.powers, params);
    const double s = speb(report.final_fim, report.layout, ParamGroup::TargetPositions, 0);
    report.final_speb = {s};
    report.best_split.parts = {params.total_energy};
    report.best_objective = s;
    report.trace.push_back({0, report.best_split, {s}, s});
    report.stages.push_back(std::move(stage));
    return report;
}

/// Traverses the per-step energy split; each step's optimum becomes prior
/// information for the next.
inline AllocationReport run_stepwise_single_slot(const NetworkScene& scene, const ChannelParams& params,
                                                 const SchemeOptions& opts = {}) {
    if (scene.slot_count() != 1) throw ValidationError("stepwise single-slot scheme needs a 1-slot scene");
    params.validate();
    const detail::SlotSpace space(scene, 0, params);
    const auto steps = detail::slot_steps(space.layout, scene.mode(), 0);
    const double step = opts.grid_step > 0.0 ? opts.grid_step : default_grid_step(params);
    auto lattice = energy_lattice(params.total_energy, step, steps.size());
    if (opts.pruned && scene.mode() == SyncMode::Asynchronous) {
        std::vector<EnergySplit> kept;
        const double eps = 1e-9 * params.total_energy;
        for (auto& s : lattice) {
            const double loc = s.parts[0], clock = s.parts[1], sense = s.parts[2];
            if (clock <= loc + eps && loc <= sense + eps) kept.push_back(s);
        }
        lattice = std::move(kept);
    }
    if (lattice.empty()) throw ValidationError("energy lattice is empty");

    const Index n = static_cast<Index>(space.layout.size());
    const Matrix base = Matrix::Zero(n, n);
    std::vector<detail::StepsOutcome> outcomes(lattice.size());
    detail::parallel_for(lattice.size(), detail::thread_count(opts.threads), [&](std::size_t i) {
        outcomes[i] = detail::run_steps(base, space.unit_fims, {}, steps, lattice[i].parts, space.caps, 0, opts.solver);
    });

    AllocationReport report;
    report.scheme = Scheme::Stepwise;
    report.mode = scene.mode();
    report.slot_count = 1;
    report.steps = detail::step_kinds(steps);
    report.layout = space.layout;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        report.trace.push_back({i, lattice[i], outcomes[i].objectives, outcomes[i].final_objective});
    }
    const std::size_t best = detail::argmin_trace(report.trace);
    if (!std::isfinite(report.trace[best].objective)) {
        throw NonIdentifiableError("target is not identifiable for any energy split");
    }
    report.best_index = best;
    report.best_split = lattice[best];
    report.best_objective = report.trace[best].objective;
    report.stages = outcomes[best].stages;
    report.final_fim = outcomes[best].final_information;
    report.final_speb = {report.best_objective};
    return report;
}

namespace detail {

struct DualSpace {
    NetworkScene scene;
    ParameterLayout layout;
    std::size_t block;
    std::vector<Matrix> slot2_units;  // slot-2 node contributions embedded in the dual layout
    std::vector<std::size_t> slot1_indices;
    std::vector<std::size_t> target1;
    std::vector<std::size_t> target2;

    DualSpace(const NetworkScene& s, const ChannelParams& params)
        : scene(s), layout(build_layout(s)), block(slot_block_size(s.radar_count(), s.mode())) {
        const Index n = static_cast<Index>(layout.size());
        for (const auto& F : node_unit_fims(s, 1, params)) slot2_units.push_back(embed(F, block, n));
        slot1_indices = layout.slot_indices(0);
        target1 = layout.indices(ParamGroup::TargetPositions, 0);
        target2 = layout.indices(ParamGroup::TargetPositions, 1);
    }

    Matrix base(const Matrix& slot1_info, const ChannelParams& params, const TemporalOptions& t) const {
        const Index b = static_cast<Index>(block);
        return compose_dual_slot_fim(scene, slot1_info, Matrix::Zero(b, b), params, t);
    }
};

struct DualPoint {
    std::vector<StageResult> stages;
    Matrix final_information;
    double speb1 = std::numeric_limits<double>::infinity();
    double speb2 = std::numeric_limits<double>::infinity();
    double objective = std::numeric_limits<double>::infinity();
    EnergySplit inner1;
    EnergySplit inner2;
};

inline AllocationReport finish_dual(Scheme scheme, const NetworkScene& scene, const DualSpace& space,
                                    const std::vector<EnergySplit>& lattice, std::vector<DualPoint>& points,
                                    std::vector<StepKind> steps) {
    AllocationReport report;
    report.scheme = scheme;
    report.mode = scene.mode();
    report.slot_count = 2;
    report.steps = std::move(steps);
    report.layout = space.layout;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        report.trace.push_back({i, lattice[i], {points[i].speb1, points[i].speb2}, points[i].objective});
    }
    const std::size_t best = argmin_trace(report.trace);
    if (!std::isfinite(report.trace[best].objective)) {
        throw NonIdentifiableError("targets are not identifiable in both slots for any energy split");
    }
    report.best_index = best;
    report.best_split = lattice[best];
    report.best_objective = report.trace[best].objective;
    report.stages = points[best].stages;
    report.final_fim = points[best].final_information;
    report.final_speb = {points[best].speb1, points[best].speb2};
    return report;
}

}  // namespace detail

/// Traverses E_slot1 + E_slot2 = E_total. Slot 1 is optimized on its own;
/// slot 2 is optimized on the dual-slot FIM with slot-1 powers frozen. The
/// traversal objective is the sum of both slots' sensing SPEBs.
inline AllocationReport run_integrated_dual_slot(const NetworkScene& scene, const ChannelParams& params,
                                                 const SchemeOptions& opts = {}) {
    if (scene.slot_count() != 2) throw ValidationError("dual-slot scheme needs a 2-slot scene");
    params.validate();
    const double step = opts.grid_step > 0.0 ? opts.grid_step : default_grid_step(params);
    const auto lattice = energy_lattice(params.total_energy, step, 2);
    const detail::SlotSpace slot1(scene, 0, params);
    const detail::DualSpace space(scene, params);
    const auto target1_local = slot1.layout.indices(ParamGroup::TargetPositions, 0);
    const Index b = static_cast<Index>(space.block);

    std::vector<detail::DualPoint> points(lattice.size());
    detail::parallel_for(lattice.size(), detail::thread_count(opts.threads), [&](std::size_t i) {
        auto& pt = points[i];
        const auto& split = lattice[i];

        AllocationProblem p1;
        p1.prior = Matrix::Zero(b, b);
        p1.unit_fims = slot1.unit_fims;
        p1.objective = target1_local;
        p1.bounds = {slot1.caps, split.parts[0]};
        StageResult s1;
        s1.slot = 0;
        s1.budget = split.parts[0];
        s1.solution.powers.watts.assign(slot1.caps.size(), 0.0);
        s1.solution.objective = std::numeric_limits<double>::infinity();
        if (split.parts[0] > 0.0) {
            try {
                s1.solution = solve_allocation(p1, opts.solver);
                s1.solved = true;
            } catch (const NonIdentifiableError&) {
            }
        }
        const Matrix info1 = p1.signal_information(s1.solution.powers.watts);

        AllocationProblem p2;
        p2.prior = space.base(info1, params, opts.temporal);
        p2.unit_fims = space.slot2_units;
        p2.objective = space.target2;
        p2.bounds = {slot1.caps, split.parts[1]};
        StageResult s2;
        s2.slot = 1;
        s2.budget = split.parts[1];
        s2.solution.powers.watts.assign(slot1.caps.size(), 0.0);
        s2.solution.objective = std::numeric_limits<double>::infinity();
        if (split.parts[1] > 0.0) {
            try {
                s2.solution = solve_allocation(p2, opts.solver);
                s2.solved = true;
            } catch (const NonIdentifiableError&) {
            }
        }
        pt.final_information = p2.information(s2.solution.powers.watts);
        pt.speb1 = detail::speb_or_inf(pt.final_information, space.target1);
        pt.speb2 = detail::speb_or_inf(pt.final_information, space.target2);
        pt.objective = pt.speb1 + pt.speb2;
        pt.stages = {std::move(s1), std::move(s2)};
    });
    return detail::finish_dual(Scheme::Integrated, scene, space, lattice, points, {StepKind::Sensing});
}

/// Outer traversal over slot energies; inside each slot the stepwise
/// procedure with its own split traversal. Slot-1 information reaches slot 2
/// through the dual-slot FIM's temporal cooperation blocks.
inline AllocationReport run_stepwise_dual_slot(const NetworkScene& scene, const ChannelParams& params,
                                               const SchemeOptions& opts = {}) {
    if (scene.slot_count() != 2) throw ValidationError("dual-slot scheme needs a 2-slot scene");
    params.validate();
    const double step = opts.grid_step > 0.0 ? opts.grid_step : default_grid_step(params);
    const auto lattice = energy_lattice(params.total_energy, step, 2);
    const detail::SlotSpace slot1(scene, 0, params);
    const detail::DualSpace space(scene, params);
    const auto steps1 = detail::slot_steps(slot1.layout, scene.mode(), 0);
    const auto steps2 = detail::slot_steps(slot1.layout, scene.mode(), space.block);
    const Index b = static_cast<Index>(space.block);
    const double eps = 1e-12 * params.total_energy;

    auto inner_lattice = [&](double energy) {
        if (energy <= eps) return std::vector<EnergySplit>{EnergySplit{std::vector<double>(steps1.size(), 0.0)}};
        return energy_lattice(energy, std::min(step, energy), steps1.size());
    };

    std::vector<detail::DualPoint> points(lattice.size());
    detail::parallel_for(lattice.size(), detail::thread_count(opts.threads), [&](std::size_t i) {
        auto& pt = points[i];
        const auto& split = lattice[i];

        // Slot 1 alone: best stepwise split by its own sensing SPEB.
        const Matrix zero1 = Matrix::Zero(b, b);
        detail::StepsOutcome best1;
        best1.signal = zero1;
        bool have1 = false;
        for (const auto& inner : inner_lattice(split.parts[0])) {
            auto o = detail::run_steps(zero1, slot1.unit_fims, {}, steps1, inner.parts, slot1.caps, 0, opts.solver);
            if (!have1 || o.final_objective < best1.final_objective) {
                best1 = std::move(o);
                pt.inner1 = inner;
                have1 = true;
            }
        }

        const Matrix base = space.base(best1.signal, params, opts.temporal);
        detail::StepsOutcome best2;
        bool have2 = false;
        for (const auto& inner : inner_lattice(split.parts[1])) {
            auto o = detail::run_steps(base, space.slot2_units, space.slot1_indices, steps2, inner.parts, slot1.caps,
                                       1, opts.solver);
            const double s1 = detail::speb_or_inf(o.final_information, space.target1);
            const double s2 = detail::speb_or_inf(o.final_information, space.target2);
            if (!have2 || s1 + s2 < pt.objective) {
                pt.speb1 = s1;
                pt.speb2 = s2;
                pt.objective = s1 + s2;
                best2 = std::move(o);
                pt.inner2 = inner;
                have2 = true;
            }
        }
        pt.final_information = best2.final_information;
        pt.stages = best1.stages;
        pt.stages.insert(pt.stages.end(), best2.stages.begin(), best2.stages.end());
    });
    return detail::finish_dual(Scheme::Stepwise, scene, space, lattice, points, detail::step_kinds(steps1));
}

/// Steps ordered by their energy in the best split, ascending; ties keep step order.
inline std::vector<StepKind> ordering_heuristic(const AllocationReport& report) {
    if (report.scheme != Scheme::Stepwise || report.slot_count != 1) {
        throw ValidationError("ordering heuristic needs a single-slot stepwise report");
    }
    std::vector<std::size_t> order = iota_indices(report.steps.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.best_split.parts[a] < report.best_split.parts[b];
    });
    std::vector<StepKind> out;
    for (auto i : order) out.push_back(report.steps[i]);
    return out;
}

}  // namespace isal
