#include <gtest/gtest.h>

#include <random>

#include "isal/optimizer.hpp"
#include "isal/scenarios.hpp"
#include "oracles.hpp"

using namespace isal;

namespace {

AllocationProblem scene_problem(const NetworkScene& s, double budget, ParamGroup group = ParamGroup::TargetPositions) {
    const auto params = ChannelParams::defaults();
    const auto L = build_layout(s);
    AllocationProblem p;
    p.prior = Matrix::Zero(static_cast<Index>(L.size()), static_cast<Index>(L.size()));
    p.unit_fims = node_unit_fims(s, 0, params);
    p.objective = L.indices(group, 0);
    p.bounds = {std::vector<double>(s.active_count(), 1.0), budget};
    p.names = L;
    return p;
}

NetworkScene canonical() {
    return NetworkScene({{0, 90}, {90, 0}}, {SlotState{{{10, 10}, {60, 20}}, {{40, 80}}}}, SyncMode::Synchronous);
}

// Projection oracle: minimize |x - y|^2 over the feasible set by dense sampling of mu.
double projection_distance(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return s;
}

}  // namespace

TEST(Projection, InsidePointIsFixed) {
    const PowerBounds b{{1, 1, 1}, 2.0};
    const std::vector<double> y = {0.2, 0.5, 0.9};
    EXPECT_EQ(project_capped_simplex(y, b), y);
}

TEST(Projection, ClampsToBox) {
    const PowerBounds b{{1, 2}, 10.0};
    EXPECT_EQ(project_capped_simplex({-1.0, 5.0}, b), (std::vector<double>{0.0, 2.0}));
}

TEST(ProjectionProperty, FeasibleAndOptimal) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 3.0), cap(0.1, 2.0), bud(0.0, 4.0);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + i % 5;
        PowerBounds b;
        std::vector<double> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            b.caps.push_back(cap(rng));
            y[j] = u(rng);
        }
        b.budget = bud(rng);
        const auto x = project_capped_simplex(y, b);
        ASSERT_TRUE(b.feasible(x, 1e-12));
        // Variational inequality: (y - x) . (z - x) <= 0 for feasible z.
        for (int k = 0; k < 50; ++k) {
            std::vector<double> z(n);
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                z[j] = std::uniform_real_distribution<double>(0.0, b.caps[j])(rng);
                sum += z[j];
            }
            if (sum > b.budget) {
                for (auto& v : z) v *= b.budget / sum;
            }
            double ip = 0.0;
            for (std::size_t j = 0; j < n; ++j) ip += (y[j] - x[j]) * (z[j] - x[j]);
            EXPECT_LE(ip, 1e-9);
            EXPECT_LE(projection_distance(x, y), projection_distance(z, y) + 1e-9);
        }
    }
}

TEST(Bounds, Validation) {
    EXPECT_THROW((PowerBounds{{}, 1.0}).validate(), InfeasibleError);
    EXPECT_THROW((PowerBounds{{1.0}, -1.0}).validate(), InfeasibleError);
    EXPECT_THROW((PowerBounds{{-1.0}, 1.0}).validate(), InfeasibleError);
}

TEST(Gradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(32);
    for (auto mode : {SyncMode::Synchronous, SyncMode::Asynchronous}) {
        const auto s = oracle::random_scene(rng, 2, 2, 1, mode);
        const auto prob = scene_problem(s, 10.0);
        for (int i = 0; i < 20; ++i) {
            const auto p = oracle::random_powers(rng, 4, 0.1, 0.9);
            const auto g = objective_and_gradient(prob, p);
            for (std::size_t j = 0; j < 4; ++j) {
                const double h = 1e-4 * p[j];
                auto up = p, dn = p;
                up[j] += h;
                dn[j] -= h;
                const double fd = (objective_value(prob, up) - objective_value(prob, dn)) / (2 * h);
                EXPECT_LE(std::abs(fd - g.gradient[j]), 1e-5 * std::abs(g.gradient[j]) + 1e-300)
                    << "node " << j;
                EXPECT_LE(g.gradient[j], 0.0);
            }
        }
    }
}

TEST(Gradient, ScalesInversely) {
    const auto prob = scene_problem(canonical(), 10.0);
    auto scaled = prob;
    for (auto& F : scaled.unit_fims) F *= 3.0;
    const std::vector<double> p = {0.4, 0.6, 0.5, 0.7};
    const auto a = objective_and_gradient(prob, p);
    const auto b = objective_and_gradient(scaled, p);
    EXPECT_NEAR(b.value, a.value / 3.0, 1e-14 * a.value);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(b.gradient[j], a.gradient[j] / 3.0, 1e-12 * std::abs(a.gradient[j]));
}

TEST(Gradient, ZeroContributionNode) {
    AllocationProblem p;
    p.prior = Matrix::Identity(2, 2);
    p.unit_fims = {Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
    p.objective = {0, 1};
    p.bounds = {{1.0, 1.0}, 2.0};
    const auto g = objective_and_gradient(p, {0.5, 0.5});
    EXPECT_EQ(g.gradient[1], 0.0);
    EXPECT_LT(g.gradient[0], 0.0);
}

TEST(Gradient, SingularThrows) {
    const auto prob = scene_problem(canonical(), 10.0);
    EXPECT_THROW(objective_and_gradient(prob, {0, 0, 0, 0}), NonIdentifiableError);
    EXPECT_TRUE(std::isinf(objective_value(prob, {0, 0, 0, 0})));
}

TEST(Solver, SingleNodeTakesBudget) {
    AllocationProblem p;
    p.prior = Matrix::Identity(1, 1);
    p.unit_fims = {Matrix::Identity(1, 1)};
    p.objective = {0};
    p.bounds = {{1.0}, 0.6};
    const auto sol = solve_allocation(p);
    EXPECT_NEAR(sol.powers.watts[0], 0.6, 1e-12);
    EXPECT_TRUE(sol.diagnostics.budget_active);
}

TEST(Solver, LargeBudgetSaturatesCaps) {
    const auto sol = solve_allocation(scene_problem(canonical(), 10.0));
    for (double w : sol.powers.watts) EXPECT_NEAR(w, 1.0, 1e-12);
    EXPECT_TRUE(sol.diagnostics.converged);
}

TEST(Solver, ZeroBudgetIsNotIdentifiable) {
    EXPECT_THROW(solve_allocation(scene_problem(canonical(), 0.0)), NonIdentifiableError);
}

TEST(Solver, MatchesGridOracle) {
    for (double budget : {10.0, 2.0, 1.0}) {
        for (auto mode : {SyncMode::Synchronous, SyncMode::Asynchronous}) {
            const auto prob = scene_problem(canonical().with_mode(mode), budget);
            const auto sol = solve_allocation(prob);
            const auto grid = grid_oracle(prob, 0.05);
            ASSERT_TRUE(prob.bounds.feasible(sol.powers.watts));
            EXPECT_LE(sol.objective, grid.objective * (1 + 1e-9));
            EXPECT_LE(oracle::rel_diff(sol.objective, grid.objective), 0.01);
        }
    }
}

TEST(Solver, KktResidualAtOptimum) {
    const auto prob = scene_problem(canonical(), 1.5);
    const auto sol = solve_allocation(prob);
    EXPECT_TRUE(sol.diagnostics.converged);
    EXPECT_LE(sol.diagnostics.projected_gradient_norm, 1e-7 * (1 + 1.0));
}

TEST(SolverProperty, MonotoneInBudget) {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 15; ++i) {
        const auto s = oracle::random_scene(rng, 2, 2, 1, i % 2 ? SyncMode::Asynchronous : SyncMode::Synchronous);
        double prev = std::numeric_limits<double>::infinity();
        for (double b : {0.5, 1.0, 2.0, 3.0, 4.0}) {
            const auto sol = solve_allocation(scene_problem(s, b));
            EXPECT_TRUE(scene_problem(s, b).bounds.feasible(sol.powers.watts, 1e-9));
            EXPECT_LE(sol.objective, prev * (1 + 1e-9));
            prev = sol.objective;
        }
    }
}

TEST(SolverProperty, NoWorseThanOracle) {
    std::mt19937_64 rng(34);
    for (int i = 0; i < 8; ++i) {
        const auto s = oracle::random_scene(rng, 1 + i % 2, 2, 1, i % 2 ? SyncMode::Asynchronous : SyncMode::Synchronous);
        const auto prob = scene_problem(s, 1.2);
        const auto sol = solve_allocation(prob);
        const auto grid = grid_oracle(prob, 0.1);
        EXPECT_LE(sol.objective, grid.objective * (1 + 1e-9));
    }
}

TEST(Solver, Deterministic) {
    const auto prob = scene_problem(canonical().with_mode(SyncMode::Asynchronous), 1.3);
    const auto a = solve_allocation(prob);
    const auto b = solve_allocation(prob);
    EXPECT_EQ(a.powers.watts, b.powers.watts);
    EXPECT_EQ(a.objective, b.objective);
}

TEST(Solver, PriorAddsInformation) {
    auto prob = scene_problem(canonical(), 1.0);
    const double bare = solve_allocation(prob).objective;
    prob.prior = 1e-3 * prob.unit_fims[0];
    EXPECT_LE(solve_allocation(prob).objective, bare);
}

TEST(GridOracle, Examples) {
    AllocationProblem p;
    p.prior = Matrix::Identity(1, 1);
    p.unit_fims = {Matrix::Identity(1, 1)};
    p.objective = {0};
    p.bounds = {{1.0}, 10.0};
    const auto g = grid_oracle(p, 0.5);
    EXPECT_EQ(g.powers.watts[0], 1.0);

    // step = cap: only corners.
    auto q = scene_problem(canonical(), 10.0);
    const auto corner = grid_oracle(q, 1.0);
    for (double w : corner.powers.watts) EXPECT_TRUE(w == 0.0 || w == 1.0);
}

TEST(GridOracle, CostGuard) {
    AllocationProblem p;
    p.prior = Matrix::Identity(1, 1);
    p.unit_fims.assign(6, Matrix::Identity(1, 1));
    p.objective = {0};
    p.bounds = {std::vector<double>(6, 1.0), 1.0};
    EXPECT_THROW(grid_oracle(p, 0.5), ValidationError);
}

TEST(Solver, FixtureOracleAgreementAtDefaults) {
    for (const auto& f : builtin_fixtures()) {
        if (f.scene.slot_count() != 1) continue;
        const auto prob = scene_problem(f.scene, 10.0);
        const auto sol = solve_allocation(prob);
        const auto grid = grid_oracle(prob, 0.05);
        EXPECT_LE(oracle::rel_diff(sol.objective, grid.objective), 0.01) << f.name;
    }
}
