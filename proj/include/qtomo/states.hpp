#pragma once

// Pure qutrit parametrization, the deterministic sample grid and the
// dark-count channel rho_in = (1 - p)|psi><psi| + (p/3) I.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "qtomo/qmath.hpp"

namespace qtomo {

class PureQutrit {
public:
    /// theta, delta in [0, pi]; phi12, phi13 in [0, 2 pi).
    PureQutrit(double theta, double delta, double phi12, double phi13)
        : theta_(theta), delta_(delta), phi12_(phi12), phi13_(phi13)
    {
        constexpr double pi = std::numbers::pi;
        auto in_closed = [](double x, double hi) { return std::isfinite(x) && x >= 0.0 && x <= hi; };
        auto in_half_open = [](double x, double hi) { return std::isfinite(x) && x >= 0.0 && x < hi; };
        if (!in_closed(theta, pi)) throw InvalidInput("pure_state: theta outside [0, pi]");
        if (!in_closed(delta, pi)) throw InvalidInput("pure_state: delta outside [0, pi]");
        if (!in_half_open(phi12, 2.0 * pi)) throw InvalidInput("pure_state: phi12 outside [0, 2pi)");
        if (!in_half_open(phi13, 2.0 * pi)) throw InvalidInput("pure_state: phi13 outside [0, 2pi)");

        const double sd = std::sin(delta / 2.0);
        amplitudes_ = CVector3(Complex(std::cos(theta / 2.0) * sd, 0.0),
                               std::polar(std::sin(theta / 2.0) * sd, phi12),
                               std::polar(std::cos(delta / 2.0), phi13));
    }

    double theta() const noexcept { return theta_; }
    double delta() const noexcept { return delta_; }
    double phi12() const noexcept { return phi12_; }
    double phi13() const noexcept { return phi13_; }
    const CVector3& amplitudes() const noexcept { return amplitudes_; }

    HermitianMatrix3 projector() const { return outer(amplitudes_); }

private:
    double theta_;
    double delta_;
    double phi12_;
    double phi13_;
    CVector3 amplitudes_;
};

inline PureQutrit pure_state(double theta, double delta, double phi12, double phi13)
{
    return PureQutrit(theta, delta, phi12, phi13);
}

/// Number of grid points along (theta, delta, phi12, phi13).
struct GridShape {
    std::size_t n_theta = 6;
    std::size_t n_delta = 6;
    std::size_t n_phi12 = 12;
    std::size_t n_phi13 = 12;

    std::size_t size() const noexcept { return n_theta * n_delta * n_phi12 * n_phi13; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// theta and delta sit at interval midpoints, the phases on a closed-open
/// uniform grid. Row-major with theta outermost and phi13 innermost.
inline std::vector<PureQutrit> sample_grid(const GridShape& g)
{
    if (g.n_theta == 0 || g.n_delta == 0 || g.n_phi12 == 0 || g.n_phi13 == 0)
        throw InvalidInput("sample_grid: every count must be >= 1");
    constexpr double pi = std::numbers::pi;
    std::vector<PureQutrit> out;
    out.reserve(g.size());
    for (std::size_t i = 0; i < g.n_theta; ++i) {
        const double theta = (static_cast<double>(i) + 0.5) * pi / static_cast<double>(g.n_theta);
        for (std::size_t j = 0; j < g.n_delta; ++j) {
            const double delta = (static_cast<double>(j) + 0.5) * pi / static_cast<double>(g.n_delta);
            for (std::size_t k = 0; k < g.n_phi12; ++k) {
                const double phi12 = 2.0 * pi * static_cast<double>(k) / static_cast<double>(g.n_phi12);
                for (std::size_t l = 0; l < g.n_phi13; ++l) {
                    const double phi13 = 2.0 * pi * static_cast<double>(l) / static_cast<double>(g.n_phi13);
                    out.emplace_back(theta, delta, phi12, phi13);
                }
            }
        }
    }
    return out;
}

inline std::vector<PureQutrit> sample_grid(std::size_t n_theta, std::size_t n_delta, std::size_t n_phi12,
                                           std::size_t n_phi13)
{
    return sample_grid(GridShape{n_theta, n_delta, n_phi12, n_phi13});
}

/// Evenly spaced indices floor(i * total / cap), i < cap, into a grid of
/// `total` states. Returns every index when cap is 0 or >= total.
inline std::vector<std::size_t> stratified_indices(std::size_t total, std::size_t cap)
{
    std::vector<std::size_t> idx;
    if (cap == 0 || cap >= total) {
        idx.resize(total);
        for (std::size_t i = 0; i < total; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * total / cap);
    return idx;
}

struct InputState {
    HermitianMatrix3 rho;
    double dark_rate;
    PureQutrit source;
};

inline InputState apply_dark_counts(const PureQutrit& psi, double p)
{
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("apply_dark_counts: p outside [0, 1]");
    HermitianMatrix3 rho = (1.0 - p) * psi.projector() + (p / 3.0) * HermitianMatrix3::identity();
    return InputState{rho, p, psi};
}

} // namespace qtomo
