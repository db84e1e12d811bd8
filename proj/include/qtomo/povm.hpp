#pragma once

// The two qutrit measurement schemes: a 9-element SIC-POVM and the
// 12-element POVM built from four mutually unbiased bases.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtomo/qmath.hpp"

namespace qtomo {

enum class Scheme { SIC, MUB };

inline std::string_view scheme_name(Scheme s) noexcept { return s == Scheme::SIC ? "sic" : "mub"; }

inline std::string_view scheme_display_name(Scheme s) noexcept { return s == Scheme::SIC ? "SIC-POVM" : "MUBs"; }

inline std::optional<Scheme> parse_scheme(std::string_view s) noexcept
{
    if (s == "sic") return Scheme::SIC;
    if (s == "mub") return Scheme::MUB;
    return std::nullopt;
}

struct PovmElement {
    HermitianMatrix3 op;
    std::string label;
};

/// Ordered measurement operators plus the unit vectors they were built from.
/// For MUB, `vectors` holds the bases back to back, three vectors each.
struct PovmSet {
    Scheme scheme;
    std::vector<PovmElement> elements;
    std::vector<CVector3> vectors;

    std::size_t size() const noexcept { return elements.size(); }
};

inline PovmSet sic_povm()
{
    const Complex e = eta();
    const Complex eb = std::conj(e);
    const Complex one{1.0, 0.0};
    const Complex zero{};
    const double r = 1.0 / std::sqrt(2.0);

    // nu_i^j for j = 0..2 (outer), i = 0..2 (inner).
    const std::array<CVector3, 9> nu{
        CVector3{one, one, zero}, CVector3{eb, e, zero},  CVector3{e, eb, zero},
        CVector3{zero, one, one}, CVector3{zero, eb, e},  CVector3{zero, e, eb},
        CVector3{one, zero, one}, CVector3{e, zero, eb},  CVector3{eb, zero, e},
    };

    PovmSet set{Scheme::SIC, {}, {}};
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < 3; ++i) {
            const CVector3 v = nu[3 * j + i].scaled(r);
            set.vectors.push_back(v);
            set.elements.push_back({(1.0 / 3.0) * outer(v), "sic:" + std::to_string(j) + ":" + std::to_string(i)});
        }
    }
    return set;
}

inline PovmSet mub_povm()
{
    const Complex e = eta();
    const Complex eb = std::conj(e);
    const Complex one{1.0, 0.0};
    const Complex zero{};
    const double r = 1.0 / std::sqrt(3.0);

    const std::array<std::array<CVector3, 3>, 4> bases{{
        {CVector3{one, zero, zero}, CVector3{zero, one, zero}, CVector3{zero, zero, one}},
        {CVector3{one, one, one}.scaled(r), CVector3{one, e, eb}.scaled(r), CVector3{one, eb, e}.scaled(r)},
        {CVector3{e, one, one}.scaled(r), CVector3{one, e, one}.scaled(r), CVector3{one, one, e}.scaled(r)},
        {CVector3{eb, one, one}.scaled(r), CVector3{one, eb, one}.scaled(r), CVector3{one, one, eb}.scaled(r)},
    }};

    PovmSet set{Scheme::MUB, {}, {}};
    for (std::size_t b = 0; b < bases.size(); ++b) {
        for (std::size_t v = 0; v < 3; ++v) {
            set.vectors.push_back(bases[b][v]);
            set.elements.push_back({0.25 * outer(bases[b][v]),
                                    "mub:b" + std::to_string(b + 1) + ":v" + std::to_string(v + 1)});
        }
    }
    return set;
}

inline PovmSet make_povm(Scheme s) { return s == Scheme::SIC ? sic_povm() : mub_povm(); }

/// Index of the element with `label`, or nullopt.
inline std::optional<std::size_t> find_label(const PovmSet& set, std::string_view label)
{
    for (std::size_t k = 0; k < set.elements.size(); ++k)
        if (set.elements[k].label == label) return k;
    return std::nullopt;
}

/// Real coordinates of a Hermitian matrix in the basis
/// {E_ii} u {E_ij + E_ji, i(E_ij - E_ji)}_{i<j}.
inline std::array<double, 9> flatten(const HermitianMatrix3& h)
{
    return {h(0, 0).real(), h(1, 1).real(), h(2, 2).real(),
            h(0, 1).real(), h(0, 1).imag(), h(0, 2).real(),
            h(0, 2).imag(), h(1, 2).real(), h(1, 2).imag()};
}

/// Numerical rank of the span of the flattened operators (Gram-Schmidt with
/// re-orthogonalization; cutoff relative to the largest operator norm).
inline int operator_rank(const std::vector<HermitianMatrix3>& ops)
{
    using Row = std::array<double, 9>;
    auto dot = [](const Row& a, const Row& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double scale = 0.0;
    for (const auto& op : ops) {
        const Row r = flatten(op);
        scale = std::max(scale, std::sqrt(dot(r, r)));
    }
    if (scale == 0.0) return 0;

    std::vector<Row> basis;
    for (const auto& op : ops) {
        Row r = flatten(op);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) {
                const double c = dot(r, q);
                for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * q[i];
            }
        const double n = std::sqrt(dot(r, r));
        if (n > tol::rank_singular * scale) {
            for (auto& x : r) x /= n;
            basis.push_back(r);
        }
    }
    return static_cast<int>(basis.size());
}

struct ValidationReport {
    Scheme scheme;
    std::size_t element_count = 0;
    double completeness_residual = 0.0;  // max |sum M_k - I|
    double min_eigenvalue = 0.0;         // over all elements
    int rank = 0;

    // Squared overlaps |<v_a|v_b>|^2 between the generating vectors.
    std::vector<std::vector<double>> overlaps;
    // SIC: max |overlap - 1/4| over a != b and max |overlap - 1| on the diagonal.
    // MUB: max |<xi_i|xi_k> - delta_ik| within bases and max ||<.|.>|^2 - 1/3| across bases.
    double overlap_residual = 0.0;
    double orthonormality_residual = 0.0;

    bool completeness_ok = false;
    bool psd_ok = false;
    bool overlaps_ok = false;
    bool rank_ok = false;

    bool passed() const noexcept { return completeness_ok && psd_ok && overlaps_ok && rank_ok; }
};

inline ValidationReport validate_povm(const PovmSet& set)
{
    ValidationReport rep;
    rep.scheme = set.scheme;
    rep.element_count = set.elements.size();

    CMatrix3 sum;
    std::vector<HermitianMatrix3> ops;
    rep.min_eigenvalue = set.elements.empty() ? 0.0 : min_eigenvalue(set.elements.front().op);
    for (const auto& el : set.elements) {
        sum = sum + el.op.matrix();
        ops.push_back(el.op);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(el.op));
    }
    rep.completeness_residual = (sum - CMatrix3::identity()).max_abs();
    rep.rank = operator_rank(ops);

    const std::size_t n = set.vectors.size();
    rep.overlaps.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) rep.overlaps[a][b] = std::norm(inner(set.vectors[a], set.vectors[b]));

    bool shape_ok = false;
    if (set.scheme == Scheme::SIC) {
        shape_ok = set.elements.size() == 9 && n == 9;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const double target = a == b ? 1.0 : 0.25;
                const double dev = std::abs(rep.overlaps[a][b] - target);
                if (a == b)
                    rep.orthonormality_residual = std::max(rep.orthonormality_residual, dev);
                else
                    rep.overlap_residual = std::max(rep.overlap_residual, dev);
            }
    } else {
        shape_ok = set.elements.size() == 12 && n == 12;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                if (a / 3 == b / 3) {
                    const Complex ip = inner(set.vectors[a], set.vectors[b]);
                    const double dev = std::abs(ip - Complex(a == b ? 1.0 : 0.0, 0.0));
                    rep.orthonormality_residual = std::max(rep.orthonormality_residual, dev);
                } else {
                    rep.overlap_residual = std::max(rep.overlap_residual, std::abs(rep.overlaps[a][b] - 1.0 / 3.0));
                }
            }
    }

    rep.completeness_ok = rep.completeness_residual < tol::completeness;
    rep.psd_ok = rep.min_eigenvalue >= -tol::psd_povm;
    rep.overlaps_ok = shape_ok && rep.overlap_residual <= tol::overlap && rep.orthonormality_residual <= tol::overlap;
    rep.rank_ok = rep.rank == 9;
    return rep;
}

} // namespace qtomo
