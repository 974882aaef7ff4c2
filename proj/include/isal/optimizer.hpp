#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isal/errors.hpp"
#include "isal/fim.hpp"
#include "isal/linalg.hpp"

namespace isal {

// Powers feasible iff 0 <= P_j <= caps[j] and sum P_j <= budget.
struct PowerBounds {
    std::vector<double> caps;
    double budget = 0.0;

    void validate() const {
        if (caps.empty()) throw InfeasibleError("no active nodes to allocate power to");
        for (double c : caps) {
            if (!(c >= 0.0) || !std::isfinite(c)) throw InfeasibleError("power caps must be finite and >= 0");
        }
        if (!(budget >= 0.0) || !std::isfinite(budget)) throw InfeasibleError("energy budget must be finite and >= 0");
    }

    bool feasible(const std::vector<double>& p, double tol = 1e-9) const {
        if (p.size() != caps.size()) return false;
        double sum = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (p[j] < -tol || p[j] > caps[j] + tol) return false;
            sum += p[j];
        }
        return sum <= budget + tol;
    }
};

/// Euclidean projection onto {0 <= x <= caps, sum x <= budget}.
///
/// x = clamp(y - mu, 0, caps); mu >= 0 is found by bisection and the upper
/// bracket is returned so the sum never exceeds the budget.
inline std::vector<double> project_capped_simplex(const std::vector<double>& y, const PowerBounds& bounds) {
    const std::size_t n = y.size();
    auto clamped = [&](double mu) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = std::clamp(y[j] - mu, 0.0, bounds.caps[j]);
        return x;
    };
    auto total = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    };
    std::vector<double> x = clamped(0.0);
    if (total(x) <= bounds.budget) return x;
    double lo = 0.0;
    double hi = *std::max_element(y.begin(), y.end());
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (total(clamped(mid)) > bounds.budget) lo = mid; else hi = mid;
    }
    return clamped(hi);
}

// Minimize tr((F(P)^-1)_gg) with F(P) = prior + sum_j P_j unit[j].
struct AllocationProblem {
    Matrix prior;
    std::vector<Matrix> unit_fims;
    std::vector<std::size_t> objective;
    PowerBounds bounds;
    ParameterLayout names;  // optional, for error messages; may be empty

    std::size_t dimension() const { return static_cast<std::size_t>(prior.rows()); }
    std::size_t node_count() const { return unit_fims.size(); }

    void validate() const {
        bounds.validate();
        if (bounds.caps.size() != unit_fims.size()) throw DimensionError("caps and node contributions differ in count");
        if (objective.empty()) throw ValidationError("objective group is empty");
        for (const auto& F : unit_fims) {
            if (F.rows() != prior.rows() || F.cols() != prior.cols()) {
                throw DimensionError("node contribution dimension differs from prior");
            }
        }
        for (auto i : objective) {
            if (i >= dimension()) throw ValidationError("objective index outside the parameter layout");
        }
    }

    Matrix information(const std::vector<double>& p) const {
        Matrix F = prior;
        for (std::size_t j = 0; j < unit_fims.size(); ++j) {
            if (p[j] != 0.0) F += p[j] * unit_fims[j];
        }
        return F;
    }

    Matrix signal_information(const std::vector<double>& p) const {
        Matrix F = Matrix::Zero(prior.rows(), prior.cols());
        for (std::size_t j = 0; j < unit_fims.size(); ++j) F += p[j] * unit_fims[j];
        return F;
    }
};

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Objective and its exact gradient, dvalue/dP_j = -tr(W^T F_j W), W = F^-1 S^T.
///
/// Throws NonIdentifiableError when F(P) is singular.
inline ObjectiveValue objective_and_gradient(const AllocationProblem& problem, const std::vector<double>& p) {
    if (p.size() != problem.node_count()) throw DimensionError("power vector size mismatch");
    const Matrix F = problem.information(p);
    const SymmetricFactor fac(F);
    if (!fac.ok()) {
        throw NonIdentifiableError("information matrix singular at this allocation; non-identifiable: " +
                                   describe_indices(fac.weak_indices(), problem.names.size() ? &problem.names : nullptr));
    }
    const auto k = static_cast<Index>(problem.objective.size());
    Matrix sel = Matrix::Zero(F.rows(), k);
    for (Index i = 0; i < k; ++i) sel(static_cast<Index>(problem.objective[static_cast<std::size_t>(i)]), i) = 1.0;
    const Matrix W = fac.solve(sel);
    ObjectiveValue out;
    for (Index i = 0; i < k; ++i) out.value += W(static_cast<Index>(problem.objective[static_cast<std::size_t>(i)]), i);
    out.gradient.resize(problem.node_count());
    for (std::size_t j = 0; j < problem.node_count(); ++j) {
        out.gradient[j] = -(W.transpose() * problem.unit_fims[j] * W).trace();
    }
    return out;
}

// Objective only; +inf where the group is not identifiable.
inline double objective_value(const AllocationProblem& problem, const std::vector<double>& p) {
    const Matrix F = problem.information(p);
    const SymmetricFactor fac(F);
    if (!fac.ok()) return std::numeric_limits<double>::infinity();
    const auto k = static_cast<Index>(problem.objective.size());
    Matrix sel = Matrix::Zero(F.rows(), k);
    for (Index i = 0; i < k; ++i) sel(static_cast<Index>(problem.objective[static_cast<std::size_t>(i)]), i) = 1.0;
    const Matrix W = fac.solve(sel);
    double v = 0.0;
    for (Index i = 0; i < k; ++i) v += W(static_cast<Index>(problem.objective[static_cast<std::size_t>(i)]), i);
    return std::isfinite(v) && v > 0.0 ? v : std::numeric_limits<double>::infinity();
}

struct SolverOptions {
    double tolerance = 1e-7;
    int max_iterations = 10000;
};

struct SolverDiagnostics {
    int iterations = 0;
    double projected_gradient_norm = 0.0;  // on the normalized objective
    bool converged = false;
    bool hit_iteration_cap = false;
    bool line_search_stalled = false;
    bool budget_active = false;
    std::vector<std::size_t> at_cap;
    std::vector<std::size_t> at_zero;
};

struct AllocationSolution {
    PowerAllocation powers;
    double objective = 0.0;
    SolverDiagnostics diagnostics;
};

namespace detail {

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void fill_active_set(const AllocationProblem& problem, const std::vector<double>& p, SolverDiagnostics& d) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        sum += p[j];
        if (p[j] <= 1e-12) d.at_zero.push_back(j);
        if (p[j] >= problem.bounds.caps[j] - 1e-12) d.at_cap.push_back(j);
    }
    d.budget_active = sum >= problem.bounds.budget - 1e-9;
}

}  // namespace detail

/// Projected gradient descent with Armijo backtracking.
///
/// The objective is normalized by its value at the uniform starting point so
/// the stopping rule ||P - proj(P - grad)|| <= tol (1 + |f|) is scale-free
/// (clock-offset bounds are ~1e-20 s^2, position bounds ~1e-4 m^2). Trial
/// steps are Barzilai-Borwein lengths; steps into a singular region count as
/// Armijo failures.
inline AllocationSolution solve_allocation(const AllocationProblem& problem, const SolverOptions& opts = {}) {
    problem.validate();
    const std::size_t n = problem.node_count();

    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = std::min(problem.bounds.caps[j], problem.bounds.budget / static_cast<double>(n));
    }
    const double f0 = objective_value(problem, p);
    if (!std::isfinite(f0)) {
        // range(F(P)) is contained in range(F(P0)) for every feasible P, since P0 > 0 wherever caps > 0.
        objective_and_gradient(problem, p);  // throws with the parameter names
        throw NonIdentifiableError("objective group is not identifiable for any feasible allocation");
    }

    auto eval = [&](const std::vector<double>& x) {
        ObjectiveValue v = objective_and_gradient(problem, x);
        v.value /= f0;
        for (double& g : v.gradient) g /= f0;
        return v;
    };
    auto pg_residual = [&](const std::vector<double>& x, const std::vector<double>& g) {
        std::vector<double> y(n);
        for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - g[j];
        const auto proj = project_capped_simplex(y, problem.bounds);
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = x[j] - proj[j];
        return detail::norm(r);
    };

    ObjectiveValue cur = eval(p);
    double max_cap = *std::max_element(problem.bounds.caps.begin(), problem.bounds.caps.end());
    double step = 0.0;
    {
        double gmax = 0.0;
        for (double g : cur.gradient) gmax = std::max(gmax, std::abs(g));
        step = gmax > 0.0 ? max_cap / gmax : 1.0;
    }

    AllocationSolution sol;
    auto& diag = sol.diagnostics;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        diag.projected_gradient_norm = pg_residual(p, cur.gradient);
        if (diag.projected_gradient_norm <= opts.tolerance * (1.0 + std::abs(cur.value))) {
            diag.converged = true;
            break;
        }
        bool accepted = false;
        std::vector<double> trial;
        ObjectiveValue next;
        double alpha = step;
        for (int ls = 0; ls < 80; ++ls) {
            std::vector<double> y(n);
            for (std::size_t j = 0; j < n; ++j) y[j] = p[j] - alpha * cur.gradient[j];
            trial = project_capped_simplex(y, problem.bounds);
            double decrease = 0.0;
            for (std::size_t j = 0; j < n; ++j) decrease += cur.gradient[j] * (trial[j] - p[j]);
            if (decrease >= 0.0) {
                // Projection returned the current point: nothing to gain along this direction.
                alpha *= 0.5;
                continue;
            }
            const double fv = objective_value(problem, trial) / f0;
            if (std::isfinite(fv) && fv <= cur.value + 1e-4 * decrease) {
                next = eval(trial);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            diag.line_search_stalled = true;
            break;
        }
        // Barzilai-Borwein length for the next trial step.
        double ss = 0.0;
        double sy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = trial[j] - p[j];
            const double yv = next.gradient[j] - cur.gradient[j];
            ss += s * s;
            sy += s * yv;
        }
        step = (sy > 0.0) ? ss / sy : 2.0 * alpha;
        p = std::move(trial);
        cur = std::move(next);
    }
    diag.iterations = it;
    diag.hit_iteration_cap = !diag.converged && it >= opts.max_iterations;
    if (!diag.converged && !diag.hit_iteration_cap && !diag.line_search_stalled) {
        diag.projected_gradient_norm = pg_residual(p, cur.gradient);
    }
    sol.powers.watts = p;
    sol.objective = cur.value * f0;
    detail::fill_active_set(problem, p, diag);
    return sol;
}

/// Exhaustive search over the lattice {k * step} inside the feasible set.
inline AllocationSolution grid_oracle(const AllocationProblem& problem, double step) {
    problem.validate();
    const std::size_t n = problem.node_count();
    if (n > 5) throw ValidationError("grid oracle limited to 5 active nodes, got " + std::to_string(n));
    if (!(step > 0.0)) throw ValidationError("grid step must be > 0");

    std::vector<int> levels(n);
    for (std::size_t j = 0; j < n; ++j) {
        levels[j] = static_cast<int>(std::floor(problem.bounds.caps[j] / step + 1e-9));
    }
    std::vector<int> k(n, 0);
    std::vector<double> p(n, 0.0);
    std::vector<double> best_p;
    double best = std::numeric_limits<double>::infinity();
    const double budget = problem.bounds.budget + 1e-9;
    while (true) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            p[j] = k[j] * step;
            sum += p[j];
        }
        if (sum <= budget) {
            const double v = objective_value(problem, p);
            if (v < best) {
                best = v;
                best_p = p;
            }
        }
        std::size_t j = 0;
        while (j < n && k[j] == levels[j]) k[j++] = 0;
        if (j == n) break;
        ++k[j];
    }
    if (!std::isfinite(best)) throw NonIdentifiableError("no lattice point makes the objective group identifiable");
    AllocationSolution sol;
    sol.powers.watts = best_p;
    sol.objective = best;
    sol.diagnostics.converged = true;
    detail::fill_active_set(problem, best_p, sol.diagnostics);
    return sol;
}

}  // namespace isal
