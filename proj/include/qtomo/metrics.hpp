#pragma once

#include <algorithm>
#include <cmath>

#include "qtomo/counts.hpp"
#include "qtomo/states.hpp"

namespace qtomo {

struct MeritRecord {
    double fidelity = 0.0;
    double purity = 0.0;
    double entropy = 0.0;  // nats
};

/// Fidelity of rho against a pure state. With one argument pure the
/// (Tr sqrt(sqrt(rho) |psi><psi| sqrt(rho)))^2 form collapses to <psi|rho|psi>.
inline double fidelity_pure(const PureQutrit& psi, const HermitianMatrix3& rho)
{
    require_density_matrix(rho, "fidelity_pure");
    return std::clamp(expectation(rho, psi.amplitudes()), 0.0, 1.0);
}

inline double purity(const HermitianMatrix3& rho)
{
    require_density_matrix(rho, "purity");
    return trace_product(rho, rho);
}

/// -sum lambda ln lambda with 0 ln 0 = 0. Eigenvalues in [-tol::entropy_clamp, 0)
/// count as zero; anything more negative is rejected.
inline double entropy(const HermitianMatrix3& rho)
{
    if (std::abs(rho.trace() - 1.0) > 1e-9) throw InvalidInput("entropy: density matrix trace is not 1");
    const auto eig = hermitian_eig(rho);
    double s = 0.0;
    for (double l : eig.values) {
        if (l < -tol::entropy_clamp) throw InvalidInput("entropy: negative eigenvalue");
        if (l > 0.0) s -= l * std::log(l);
    }
    return std::max(0.0, s);
}

inline MeritRecord merits(const PureQutrit& psi, const HermitianMatrix3& rho)
{
    return MeritRecord{fidelity_pure(psi, rho), purity(rho), entropy(rho)};
}

} // namespace qtomo
