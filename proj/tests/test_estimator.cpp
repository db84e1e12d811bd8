#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qtomo/estimator.hpp"
#include "qtomo/harness.hpp"
#include "qtomo/metrics.hpp"
#include "test_support.hpp"

using namespace qtomo;
namespace tq = qtomo::test_support;

namespace {

/// T^dagger T / Tr computed with the test-local matrix helpers.
tq::Mat reference_density(const CholeskyParams& p)
{
    const auto& t = p.t;
    tq::Mat T{};
    T[0][0] = t[0];
    T[1][0] = {t[3], t[4]};
    T[1][1] = t[1];
    T[2][0] = {t[7], t[8]};
    T[2][1] = {t[5], t[6]};
    T[2][2] = t[2];
    auto g = tq::matmul(tq::dagger(T), T);
    const double tr = (g[0][0] + g[1][1] + g[2][2]).real();
    for (auto& row : g)
        for (auto& z : row) z /= tr;
    return g;
}

CholeskyParams random_params(std::mt19937_64& g)
{
    std::normal_distribution<double> n(0.0, 1.0);
    CholeskyParams p;
    for (auto& x : p.t) x = n(g);
    return p;
}

} // namespace

TEST(CholeskyToDensity, Examples)
{
    EXPECT_LT(cholesky_to_density(CholeskyParams{{1, 0, 0, 0, 0, 0, 0, 0, 0}}).max_abs_diff(
                  HermitianMatrix3::diagonal(1, 0, 0)),
              1e-15);
    EXPECT_LT(cholesky_to_density(CholeskyParams{{1, 1, 1, 0, 0, 0, 0, 0, 0}}).max_abs_diff(
                  (1.0 / 3.0) * HermitianMatrix3::identity()),
              1e-15);

    // T = [[1,0,0],[1,1,0],[0,0,0]] -> T^dagger T = [[2,1,0],[1,1,0],[0,0,0]], trace 3.
    const CholeskyParams p{{1, 1, 0, 1, 0, 0, 0, 0, 0}};
    CMatrix3 want;
    want(0, 0) = 2.0 / 3.0;
    want(0, 1) = 1.0 / 3.0;
    want(1, 0) = 1.0 / 3.0;
    want(1, 1) = 1.0 / 3.0;
    EXPECT_LT(cholesky_to_density(p).max_abs_diff(HermitianMatrix3{want}), 1e-15);
    EXPECT_LT(tq::max_abs_diff(tq::to_mat(cholesky_to_density(p)), reference_density(p)), 1e-15);
}

TEST(CholeskyToDensity, ZeroParametersAreDegenerate)
{
    EXPECT_THROW(cholesky_to_density(CholeskyParams{}), DegenerateParameters);
}

TEST(CholeskyToDensity, RandomParamsArePhysicalAndScaleInvariant)
{
    std::mt19937_64 g(31);
    for (int n = 0; n < 1000; ++n) {
        const auto p = random_params(g);
        const auto rho = cholesky_to_density(p);
        EXPECT_LT(tq::max_abs_diff(tq::to_mat(rho), reference_density(p)), 1e-13);
        EXPECT_NEAR(rho.trace(), 1.0, 1e-12);
        EXPECT_GE(min_eigenvalue(rho), -1e-12);

        CholeskyParams scaled = p;
        const double c = n % 2 ? -3.7 : 0.01;
        for (auto& x : scaled.t) x *= c;
        EXPECT_LT(cholesky_to_density(scaled).max_abs_diff(rho), 1e-13);
    }
}

TEST(LsObjective, VanishesAtGroundTruth)
{
    std::mt19937_64 g(8);
    for (const auto& set : {sic_povm(), mub_povm()}) {
        for (int n = 0; n < 50; ++n) {
            const auto p = random_params(g);
            const double N = 10000.0;
            const auto e = expected_counts(cholesky_to_density(p), set, N);
            EXPECT_LE(ls_objective(p, e, set, N), 1e-18 * N * N);
        }
    }
}

TEST(LsObjective, AllZeroCountsAgainstMaximallyMixed)
{
    // every expected entry is 9 * (1/9) = 1, every residual 1, nine terms
    const auto sic = sic_povm();
    const CountVector zero{Scheme::SIC, std::vector<double>(9, 0.0), 9.0, CountKind::Measured};
    EXPECT_NEAR(ls_objective(CholeskyParams{{1, 1, 1, 0, 0, 0, 0, 0, 0}}, zero, sic, 9.0), 9.0, 1e-12);
}

TEST(LsObjective, ScaleInvariantAndMatchesDirectFormula)
{
    std::mt19937_64 g(12);
    const auto mub = mub_povm();
    CountVector m{Scheme::MUB, {}, 100.0, CountKind::Measured};
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int i = 0; i < 12; ++i) m.values.push_back(u(g));
    for (int n = 0; n < 200; ++n) {
        const auto p = random_params(g);
        const double f = ls_objective(p, m, mub, 100.0);

        // Direct route through the density matrix.
        const auto rho = cholesky_to_density(p);
        double direct = 0.0;
        for (std::size_t k = 0; k < 12; ++k) {
            const double r = 100.0 * trace_product(mub.elements[k].op, rho) - m.values[k];
            direct += r * r;
        }
        EXPECT_NEAR(f, direct, 1e-9 * (1 + direct));

        CholeskyParams s = p;
        for (auto& x : s.t) x *= 5.5;
        EXPECT_NEAR(ls_objective(s, m, mub, 100.0), f, 1e-9 * (1 + f));
    }
}

TEST(LsObjective, ErrorsAndSentinel)
{
    const auto sic = sic_povm();
    const CountVector short_counts{Scheme::SIC, std::vector<double>(5, 1.0), 10.0, CountKind::Measured};
    EXPECT_THROW(ls_objective(maximally_mixed_params(), short_counts, sic, 10.0), InvalidInput);
    const CountVector ok{Scheme::SIC, std::vector<double>(9, 1.0), 10.0, CountKind::Measured};
    EXPECT_EQ(ls_objective(CholeskyParams{}, ok, sic, 10.0), std::numeric_limits<double>::infinity());
}

TEST(NelderMead, Rosenbrock)
{
    auto rosen = [](const std::array<double, 2>& x) {
        return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
    };
    const auto r = nelder_mead<2>(rosen, {-1.2, 1.0}, SimplexOptions{5000, 1e-14, 0.1});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, RespectsEvaluationBudget)
{
    auto sphere = [](const std::array<double, 4>& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; };
    const auto r = nelder_mead<4>(sphere, {1, 1, 1, 1}, SimplexOptions{50, 0.0, 0.1});
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evaluations, 50 + 4);
}

TEST(Reconstruct, NoiselessPureStatesSic)
{
    const auto sample = make_sample(GridShape{}, 25);
    const auto sic = sic_povm();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto& psi = sample.states[i];
        const auto e = expected_counts(psi.projector(), sic, 10000.0);
        RngStream rng(i, "noiseless");
        const auto r = reconstruct(e, sic, 10000.0, OptimizerOptions{}, rng);
        EXPECT_GE(fidelity_pure(psi, r.rho_hat), 0.9999) << i;
    }
}

TEST(Reconstruct, NoiselessMixedTargetMub)
{
    const auto sample = make_sample(GridShape{}, 10);
    const auto mub = mub_povm();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto in = apply_dark_counts(sample.states[i], 0.2);
        const auto e = expected_counts(in.rho, mub, 10000.0);
        RngStream rng(i, "mixed");
        const auto r = reconstruct(e, mub, 10000.0, OptimizerOptions{}, rng);
        EXPECT_LT(r.rho_hat.max_abs_diff(in.rho), 1e-4) << i;
    }
}

TEST(Reconstruct, UniformSicCountsGiveMaximallyMixed)
{
    const auto sic = sic_povm();
    const CountVector m{Scheme::SIC, std::vector<double>(9, 10000.0 / 9.0), 10000.0, CountKind::Measured};
    RngStream rng(1, "uniform");
    const auto r = reconstruct(m, sic, 10000.0, OptimizerOptions{}, rng);
    EXPECT_LT(r.rho_hat.max_abs_diff((1.0 / 3.0) * HermitianMatrix3::identity()), 1e-6);
}

TEST(Reconstruct, ObjectiveNotAboveStartAndUnitNormParams)
{
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    const auto mub = mub_povm();
    for (int n = 0; n < 30; ++n) {
        CountVector m{Scheme::MUB, {}, 10.0, CountKind::Measured};
        for (int k = 0; k < 12; ++k) m.values.push_back(u(g));
        RngStream rng(static_cast<std::uint64_t>(n), "mono");
        const auto r = reconstruct(m, mub, 10.0, OptimizerOptions{}, rng);
        EXPECT_LE(r.objective, ls_objective(maximally_mixed_params(), m, mub, 10.0));
        EXPECT_NEAR(r.params.norm_squared(), 1.0, 1e-12);
        EXPECT_NEAR(r.objective, ls_objective(r.params, m, mub, 10.0), 1e-9 * (1 + r.objective));
        EXPECT_EQ(r.restarts_used, 5);
    }
}

TEST(Reconstruct, PhysicalForAdversarialCounts)
{
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto sic = sic_povm();
    const auto mub = mub_povm();
    for (int n = 0; n < 200; ++n) {
        const auto& set = n % 2 ? sic : mub;
        CountVector m{set.scheme, {}, 10.0, CountKind::Measured};
        for (std::size_t k = 0; k < set.size(); ++k) {
            // sparse spikes, zeros and huge values
            const double r = u(g);
            m.values.push_back(r < 0.3 ? 0.0 : (r < 0.4 ? 1e6 * u(g) : 40.0 * u(g)));
        }
        RngStream rng(static_cast<std::uint64_t>(n), "fuzz");
        const auto res = reconstruct(m, set, 10.0, OptimizerOptions{}, rng);
        EXPECT_GE(min_eigenvalue(res.rho_hat), -1e-10);
        EXPECT_NEAR(res.rho_hat.trace(), 1.0, 1e-12);
    }
}

TEST(Reconstruct, Deterministic)
{
    const auto sic = sic_povm();
    const CountVector m{Scheme::SIC, {1, 2, 0, 3, 1, 0, 2, 1, 0}, 10.0, CountKind::Measured};
    RngStream a(9, "det"), b(9, "det");
    const auto ra = reconstruct(m, sic, 10.0, OptimizerOptions{}, a);
    const auto rb = reconstruct(m, sic, 10.0, OptimizerOptions{}, b);
    EXPECT_EQ(ra.params, rb.params);
    EXPECT_EQ(ra.objective, rb.objective);
    EXPECT_EQ(ra.evaluations, rb.evaluations);
}

TEST(Reconstruct, TightBudgetReportsUnconverged)
{
    const auto sic = sic_povm();
    const CountVector m{Scheme::SIC, {1, 2, 0, 3, 1, 0, 2, 1, 0}, 10.0, CountKind::Measured};
    RngStream rng(9, "budget");
    OptimizerOptions opts;
    opts.max_evaluations = 30;
    const auto r = reconstruct(m, sic, 10.0, opts, rng);
    EXPECT_FALSE(r.converged);
    EXPECT_NEAR(r.rho_hat.trace(), 1.0, 1e-12);
}
