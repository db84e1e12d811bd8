#pragma once

// Least-squares state reconstruction over the Cholesky parametrization
// rho(t) = T^dagger T / Tr(T^dagger T) with
//
//        | t1          0          0  |
//    T = | t4 + i t5   t2         0  |
//        | t8 + i t9   t6 + i t7  t3 |
//
// Every real 9-vector except zero maps to a physical density matrix.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qtomo/counts.hpp"
#include "qtomo/nelder_mead.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

/// t1..t9 stored at t[0]..t[8].
struct CholeskyParams {
    std::array<double, 9> t{};

    double norm_squared() const noexcept
    {
        double s = 0.0;
        for (double x : t) s += x * x;
        return s;
    }
    friend bool operator==(const CholeskyParams&, const CholeskyParams&) = default;
};

inline constexpr double kMinParamNorm2 = 1e-300;

/// T^dagger T (unnormalized).
inline CMatrix3 cholesky_gram(const CholeskyParams& p) noexcept
{
    const auto& t = p.t;
    CMatrix3 tm;
    tm(0, 0) = t[0];
    tm(1, 0) = Complex(t[3], t[4]);
    tm(1, 1) = t[1];
    tm(2, 0) = Complex(t[7], t[8]);
    tm(2, 1) = Complex(t[5], t[6]);
    tm(2, 2) = t[2];
    return tm.adjoint() * tm;
}

inline HermitianMatrix3 cholesky_to_density(const CholeskyParams& p)
{
    for (double x : p.t)
        if (!std::isfinite(x)) throw InvalidInput("cholesky_to_density: non-finite parameter");
    const double n2 = p.norm_squared();
    if (!(n2 >= kMinParamNorm2)) throw DegenerateParameters("cholesky_to_density: all parameters are zero");
    const CMatrix3 g = cholesky_gram(p);
    // Tr(T^dagger T) equals the squared parameter norm; dividing by the computed
    // trace keeps the result at unit trace to rounding.
    const double tr = g.trace().real();
    return HermitianMatrix3::hermitian_part(Complex(1.0 / tr, 0.0) * g);
}

/// Fast evaluator of Tr(M_k rho(t)) for a fixed POVM. Each element is reduced
/// to a real 9-vector w_k with Tr(M_k A) = w_k . flat(A) for Hermitian A.
class LeastSquaresProblem {
public:
    LeastSquaresProblem(const PovmSet& povm, const CountVector& measured, double photon_mean)
        : photon_mean_(photon_mean), measured_(measured.values)
    {
        require_photon_mean(photon_mean, "ls_objective");
        if (measured.values.size() != povm.size())
            throw InvalidInput("ls_objective: count vector length does not match the POVM");
        for (double v : measured.values)
            if (!std::isfinite(v)) throw InvalidInput("ls_objective: non-finite count");
        weights_.reserve(povm.size());
        for (const auto& el : povm.elements) {
            const auto& m = el.op;
            weights_.push_back({m(0, 0).real(), m(1, 1).real(), m(2, 2).real(), 2.0 * m(0, 1).real(),
                                2.0 * m(0, 1).imag(), 2.0 * m(0, 2).real(), 2.0 * m(0, 2).imag(),
                                2.0 * m(1, 2).real(), 2.0 * m(1, 2).imag()});
        }
    }

    /// f_LS(t) = sum_k (N Tr(M_k rho(t)) - n_k)^2; +inf at the all-zero point.
    double operator()(const std::array<double, 9>& t) const noexcept
    {
        const double tr = t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3] + t[4] * t[4] + t[5] * t[5] +
                          t[6] * t[6] + t[7] * t[7] + t[8] * t[8];
        if (!(tr >= kMinParamNorm2) || !std::isfinite(tr)) return std::numeric_limits<double>::infinity();

        // Entries of T^dagger T written out; a_ij = sum_k conj(T_ki) T_kj.
        const Complex t21(t[3], t[4]), t31(t[7], t[8]), t32(t[5], t[6]);
        const double a00 = t[0] * t[0] + std::norm(t21) + std::norm(t31);
        const double a11 = t[1] * t[1] + std::norm(t32);
        const double a22 = t[2] * t[2];
        const Complex a01 = std::conj(t21) * t[1] + std::conj(t31) * t32;
        const Complex a02 = std::conj(t31) * t[2];
        const Complex a12 = std::conj(t32) * t[2];
        const std::array<double, 9> flat{a00,        a11,        a22,        a01.real(), a01.imag(),
                                         a02.real(), a02.imag(), a12.real(), a12.imag()};

        const double scale = photon_mean_ / tr;
        double f = 0.0;
        for (std::size_t k = 0; k < weights_.size(); ++k) {
            const auto& w = weights_[k];
            double prob = 0.0;
            for (std::size_t i = 0; i < 9; ++i) prob += w[i] * flat[i];
            const double r = scale * prob - measured_[k];
            f += r * r;
        }
        return f;
    }

private:
    double photon_mean_;
    std::vector<double> measured_;
    std::vector<std::array<double, 9>> weights_;
};

inline double ls_objective(const CholeskyParams& params, const CountVector& measured, const PovmSet& povm,
                           double photon_mean)
{
    return LeastSquaresProblem(povm, measured, photon_mean)(params.t);
}

struct OptimizerOptions {
    int restarts = 5;
    int max_evaluations = 20000;  // per restart
    double tolerance = 1e-10;
    double initial_simplex_scale = 0.1;
};

struct EstimationResult {
    HermitianMatrix3 rho_hat;
    CholeskyParams params;  // unit Euclidean norm
    double objective = 0.0;
    int evaluations = 0;    // summed over restarts
    int restarts_used = 0;
    int best_restart = 0;
    bool converged = false; // at least one restart met the tolerance
};

/// Parameters of the maximally mixed state, the first start point.
inline CholeskyParams maximally_mixed_params() noexcept
{
    const double d = 1.0 / std::sqrt(3.0);
    return CholeskyParams{{d, d, d, 0, 0, 0, 0, 0, 0}};
}

/// Multi-start Nelder-Mead. Restart 0 starts at the maximally mixed state,
/// later restarts at points uniform in [-1, 1]^9 drawn from `rng`. The lowest
/// final objective wins; ties go to the earlier restart.
inline EstimationResult reconstruct(const CountVector& measured, const PovmSet& povm, double photon_mean,
                                    const OptimizerOptions& options, RngStream& rng)
{
    if (options.restarts < 1) throw InvalidInput("reconstruct: restarts must be >= 1");
    if (options.max_evaluations < 1) throw InvalidInput("reconstruct: max_evaluations must be >= 1");
    const LeastSquaresProblem problem(povm, measured, photon_mean);
    const SimplexOptions simplex{options.max_evaluations, options.tolerance, options.initial_simplex_scale};

    EstimationResult best;
    best.objective = std::numeric_limits<double>::infinity();
    bool have_best = false;

    for (int r = 0; r < options.restarts; ++r) {
        std::array<double, 9> start = maximally_mixed_params().t;
        if (r > 0) {
            do {
                for (auto& x : start) x = 2.0 * rng.uniform() - 1.0;
            } while (CholeskyParams{start}.norm_squared() < kMinParamNorm2);
        }

        const auto run = nelder_mead<9>(problem, start, simplex);
        best.evaluations += run.evaluations;
        best.restarts_used = r + 1;
        best.converged = best.converged || run.converged;

        CholeskyParams p{run.x};
        const double n2 = p.norm_squared();
        if (!(n2 >= kMinParamNorm2) || !std::isfinite(n2)) continue;
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& x : p.t) x *= inv;

        if (!have_best || run.value < best.objective) {
            have_best = true;
            best.objective = run.value;
            best.params = p;
            best.best_restart = r;
        }
    }

    if (!have_best) {
        best.params = maximally_mixed_params();
        best.objective = problem(best.params.t);
    }
    best.rho_hat = cholesky_to_density(best.params);
    return best;
}

} // namespace qtomo
