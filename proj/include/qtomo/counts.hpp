#pragma once

// Expected photon counts n_k = N Tr(M_k rho) and simulated measured counts
// n_k = N_k Tr(M_k rho_in) with N_k ~ Poisson(N) drawn per operator.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "qtomo/povm.hpp"
#include "qtomo/rng.hpp"
#include "qtomo/states.hpp"

namespace qtomo {

enum class CountKind { Expected, Measured };

struct CountVector {
    Scheme scheme;
    std::vector<double> values;  // PovmSet order
    double photon_mean;
    CountKind kind;

    std::size_t size() const noexcept { return values.size(); }
};

/// Throws unless rho is a density matrix (unit trace, PSD within tol::psd_state).
inline void require_density_matrix(const HermitianMatrix3& rho, const char* where)
{
    if (std::abs(rho.trace() - 1.0) > 1e-9)
        throw InvalidInput(std::string(where) + ": density matrix trace is not 1");
    if (min_eigenvalue(rho) < -tol::psd_state)
        throw InvalidInput(std::string(where) + ": density matrix is not positive semidefinite");
}

inline void require_photon_mean(double photon_mean, const char* where)
{
    if (!(std::isfinite(photon_mean) && photon_mean > 0.0))
        throw InvalidInput(std::string(where) + ": photon mean must be positive and finite");
}

/// Born probabilities Tr(M_k rho) clamped at zero.
inline std::vector<double> probabilities(const HermitianMatrix3& rho, const PovmSet& povm)
{
    std::vector<double> p;
    p.reserve(povm.size());
    for (const auto& el : povm.elements) p.push_back(std::max(0.0, trace_product(el.op, rho)));
    return p;
}

inline CountVector expected_counts(const HermitianMatrix3& rho, const PovmSet& povm, double photon_mean)
{
    require_photon_mean(photon_mean, "expected_counts");
    require_density_matrix(rho, "expected_counts");
    CountVector cv{povm.scheme, probabilities(rho, povm), photon_mean, CountKind::Expected};
    for (auto& v : cv.values) v *= photon_mean;
    return cv;
}

namespace detail {

inline std::int64_t poisson_inversion(double mean, RngStream& rng)
{
    const double u = rng.uniform();
    double term = std::exp(-mean);
    double cdf = term;
    std::int64_t k = 0;
    while (u > cdf) {
        ++k;
        term *= mean / static_cast<double>(k);
        cdf += term;
        if (term == 0.0) break;  // remaining tail below double resolution
    }
    return k;
}

// Transformed rejection with squeeze (PTRS).
inline std::int64_t poisson_ptrs(double mean, RngStream& rng)
{
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + kf * loglam - std::lgamma(kf + 1.0))
            return static_cast<std::int64_t>(kf);
    }
}

} // namespace detail

/// Below this mean the sampler inverts the CDF by sequential search.
inline constexpr double kPoissonInversionLimit = 30.0;

inline std::int64_t poisson_sample(double mean, RngStream& rng)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidInput("poisson_sample: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean < kPoissonInversionLimit) return detail::poisson_inversion(mean, rng);
    return detail::poisson_ptrs(mean, rng);
}

/// Anything that yields one photon budget N_k per call given the mean.
template <typename F>
concept PhotonBudgetSource = requires(F f, double mean) {
    { f(mean) } -> std::convertible_to<double>;
};

/// Measured counts with N_k taken from `budget`, called once per operator in
/// PovmSet order.
template <PhotonBudgetSource Budget>
CountVector measured_counts(const InputState& input, const PovmSet& povm, double photon_mean, Budget&& budget)
{
    require_photon_mean(photon_mean, "measured_counts");
    require_density_matrix(input.rho, "measured_counts");
    CountVector cv{povm.scheme, probabilities(input.rho, povm), photon_mean, CountKind::Measured};
    for (auto& v : cv.values) {
        const double n_k = static_cast<double>(budget(photon_mean));
        v *= n_k;
    }
    return cv;
}

inline CountVector measured_counts(const InputState& input, const PovmSet& povm, double photon_mean, RngStream& rng)
{
    return measured_counts(input, povm, photon_mean, [&rng](double mean) { return poisson_sample(mean, rng); });
}

} // namespace qtomo
