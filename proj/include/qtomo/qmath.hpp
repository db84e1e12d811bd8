#pragma once

// Small dense complex linear algebra fixed to dimension 3.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "qtomo/errors.hpp"
#include "qtomo/tolerances.hpp"

namespace qtomo {

using Complex = std::complex<double>;

inline constexpr std::size_t kDim = 3;

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Primitive cube root of unity exp(2 pi i / 3).
inline Complex eta() noexcept { return std::polar(1.0, 2.0 * std::numbers::pi / 3.0); }

class CVector3 {
public:
    CVector3() = default;
    CVector3(Complex a, Complex b, Complex c) : c_{a, b, c}
    {
        for (const auto& z : c_) {
            if (!is_finite(z)) throw InvalidInput("CVector3: non-finite component");
        }
    }

    Complex operator[](std::size_t i) const { return c_[i]; }
    const std::array<Complex, kDim>& components() const noexcept { return c_; }

    double norm_squared() const noexcept
    {
        return std::norm(c_[0]) + std::norm(c_[1]) + std::norm(c_[2]);
    }

    CVector3 normalized() const
    {
        const double n = std::sqrt(norm_squared());
        if (!(n > 0.0)) throw InvalidInput("CVector3: cannot normalize zero vector");
        return scaled(Complex(1.0 / n, 0.0));
    }

    CVector3 scaled(Complex s) const { return {s * c_[0], s * c_[1], s * c_[2]}; }

    friend bool operator==(const CVector3&, const CVector3&) = default;

private:
    std::array<Complex, kDim> c_{};
};

/// <a|b>, antilinear in the first argument.
inline Complex inner(const CVector3& a, const CVector3& b) noexcept
{
    Complex s{};
    for (std::size_t i = 0; i < kDim; ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// Plain 3x3 complex matrix, row-major. Used for products and unitaries.
struct CMatrix3 {
    std::array<std::array<Complex, kDim>, kDim> m{};

    Complex& operator()(std::size_t i, std::size_t j) { return m[i][j]; }
    Complex operator()(std::size_t i, std::size_t j) const { return m[i][j]; }

    static CMatrix3 identity()
    {
        CMatrix3 r;
        for (std::size_t i = 0; i < kDim; ++i) r.m[i][i] = 1.0;
        return r;
    }

    CMatrix3 adjoint() const
    {
        CMatrix3 r;
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j) r.m[i][j] = std::conj(m[j][i]);
        return r;
    }

    Complex trace() const noexcept { return m[0][0] + m[1][1] + m[2][2]; }

    friend CMatrix3 operator*(const CMatrix3& a, const CMatrix3& b)
    {
        CMatrix3 r;
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t k = 0; k < kDim; ++k) {
                const Complex aik = a.m[i][k];
                for (std::size_t j = 0; j < kDim; ++j) r.m[i][j] += aik * b.m[k][j];
            }
        return r;
    }

    friend CMatrix3 operator+(CMatrix3 a, const CMatrix3& b)
    {
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j) a.m[i][j] += b.m[i][j];
        return a;
    }

    friend CMatrix3 operator-(CMatrix3 a, const CMatrix3& b)
    {
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j) a.m[i][j] -= b.m[i][j];
        return a;
    }

    friend CMatrix3 operator*(Complex s, CMatrix3 a)
    {
        for (auto& row : a.m)
            for (auto& z : row) z *= s;
        return a;
    }

    CVector3 column(std::size_t j) const { return {m[0][j], m[1][j], m[2][j]}; }

    friend CVector3 operator*(const CMatrix3& a, const CVector3& v)
    {
        std::array<Complex, kDim> r{};
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j) r[i] += a.m[i][j] * v[j];
        return {r[0], r[1], r[2]};
    }

    double max_abs() const noexcept
    {
        double r = 0.0;
        for (const auto& row : m)
            for (const auto& z : row) r = std::max(r, std::abs(z));
        return r;
    }

    double frobenius() const noexcept
    {
        double s = 0.0;
        for (const auto& row : m)
            for (const auto& z : row) s += std::norm(z);
        return std::sqrt(s);
    }
};

/// 3x3 complex Hermitian matrix. Storage is kept exactly Hermitian: the
/// diagonal is real and (j,i) is the conjugate of (i,j).
class HermitianMatrix3 {
public:
    HermitianMatrix3() = default;

    /// Accepts `a` if it is Hermitian within tol::hermitian (scaled by its
    /// magnitude) and symmetrizes the residue away; throws otherwise.
    explicit HermitianMatrix3(const CMatrix3& a)
    {
        const double scale = std::max(1.0, a.max_abs());
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j) {
                if (!is_finite(a(i, j))) throw InvalidInput("HermitianMatrix3: non-finite entry");
                if (std::abs(a(i, j) - std::conj(a(j, i))) > tol::hermitian * scale)
                    throw InvalidInput("HermitianMatrix3: matrix is not Hermitian");
            }
        a_ = symmetrize(a);
    }

    /// Projects any finite matrix onto its Hermitian part (A + A^dagger) / 2.
    static HermitianMatrix3 hermitian_part(const CMatrix3& a)
    {
        for (const auto& row : a.m)
            for (const auto& z : row)
                if (!is_finite(z)) throw InvalidInput("HermitianMatrix3: non-finite entry");
        HermitianMatrix3 h;
        h.a_ = symmetrize(a);
        return h;
    }

    static HermitianMatrix3 identity() { return HermitianMatrix3(CMatrix3::identity()); }

    static HermitianMatrix3 diagonal(double d0, double d1, double d2)
    {
        CMatrix3 a;
        a(0, 0) = d0;
        a(1, 1) = d1;
        a(2, 2) = d2;
        return HermitianMatrix3(a);
    }

    Complex operator()(std::size_t i, std::size_t j) const { return a_(i, j); }
    const CMatrix3& matrix() const noexcept { return a_; }

    double trace() const noexcept { return a_(0, 0).real() + a_(1, 1).real() + a_(2, 2).real(); }

    friend HermitianMatrix3 operator+(const HermitianMatrix3& x, const HermitianMatrix3& y)
    {
        HermitianMatrix3 r;
        r.a_ = x.a_ + y.a_;
        return r;
    }

    friend HermitianMatrix3 operator-(const HermitianMatrix3& x, const HermitianMatrix3& y)
    {
        HermitianMatrix3 r;
        r.a_ = x.a_ - y.a_;
        return r;
    }

    friend HermitianMatrix3 operator*(double s, const HermitianMatrix3& x)
    {
        if (!std::isfinite(s)) throw InvalidInput("HermitianMatrix3: non-finite scale");
        HermitianMatrix3 r;
        r.a_ = Complex(s, 0.0) * x.a_;
        return r;
    }

    /// Unitary conjugation U A U^dagger.
    HermitianMatrix3 conjugated_by(const CMatrix3& u) const { return hermitian_part(u * a_ * u.adjoint()); }

    double max_abs_diff(const HermitianMatrix3& o) const noexcept { return (a_ - o.a_).max_abs(); }

private:
    static CMatrix3 symmetrize(const CMatrix3& a)
    {
        CMatrix3 r;
        for (std::size_t i = 0; i < kDim; ++i) {
            r(i, i) = Complex(a(i, i).real(), 0.0);
            for (std::size_t j = i + 1; j < kDim; ++j) {
                const Complex v = 0.5 * (a(i, j) + std::conj(a(j, i)));
                r(i, j) = v;
                r(j, i) = std::conj(v);
            }
        }
        return r;
    }

    CMatrix3 a_{};
};

/// |v><v|
inline HermitianMatrix3 outer(const CVector3& v)
{
    CMatrix3 a;
    for (std::size_t i = 0; i < kDim; ++i)
        for (std::size_t j = 0; j < kDim; ++j) a(i, j) = v[i] * std::conj(v[j]);
    return HermitianMatrix3::hermitian_part(a);
}

/// Re Tr(a b). For Hermitian a, b the trace is real; the imaginary part is rounding only.
inline double trace_product(const HermitianMatrix3& a, const HermitianMatrix3& b) noexcept
{
    Complex s{};
    for (std::size_t i = 0; i < kDim; ++i)
        for (std::size_t j = 0; j < kDim; ++j) s += a(i, j) * b(j, i);
    assert(std::abs(s.imag()) <= tol::trace_imag * std::max(1.0, a.matrix().frobenius() * b.matrix().frobenius()));
    return s.real();
}

/// <v| a |v>, real for Hermitian a.
inline double expectation(const HermitianMatrix3& a, const CVector3& v) noexcept
{
    Complex s{};
    for (std::size_t i = 0; i < kDim; ++i)
        for (std::size_t j = 0; j < kDim; ++j) s += std::conj(v[i]) * a(i, j) * v[j];
    return s.real();
}

struct EigenDecomposition {
    std::array<double, kDim> values{};     // ascending
    std::array<CVector3, kDim> vectors{};  // vectors[i] pairs with values[i]
    int sweeps = 0;
};

/// Cyclic complex Jacobi eigendecomposition. Throws NumericalFailure if the
/// off-diagonal Frobenius norm does not drop below tol::jacobi_offdiag
/// (relative to max(1, |A|_F)) within tol::jacobi_max_sweeps sweeps.
inline EigenDecomposition hermitian_eig(const HermitianMatrix3& h)
{
    CMatrix3 a = h.matrix();
    CMatrix3 v = CMatrix3::identity();
    const double threshold = tol::jacobi_offdiag * std::max(1.0, a.frobenius());

    auto off_norm = [&a] {
        double s = 0.0;
        for (std::size_t i = 0; i < kDim; ++i)
            for (std::size_t j = 0; j < kDim; ++j)
                if (i != j) s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    int sweep = 0;
    while (off_norm() >= threshold) {
        if (sweep == tol::jacobi_max_sweeps)
            throw NumericalFailure("hermitian_eig: Jacobi iteration did not converge");
        ++sweep;
        for (std::size_t p = 0; p + 1 < kDim; ++p) {
            for (std::size_t q = p + 1; q < kDim; ++q) {
                const double b = std::abs(a(p, q));
                if (b == 0.0) continue;
                // Phase D = diag(.., e^{-i arg a_pq} at q, ..) makes the (p,q) entry real,
                // then a real Jacobi rotation annihilates it.
                const Complex phase = std::conj(a(p, q)) / b;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * b);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                CMatrix3 j = CMatrix3::identity();
                j(p, p) = c;
                j(p, q) = s;
                j(q, p) = -s * phase;
                j(q, q) = c * phase;

                a = j.adjoint() * a * j;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < kDim; ++k) a(k, k) = Complex(a(k, k).real(), 0.0);
                v = v * j;
            }
        }
    }

    std::array<std::size_t, kDim> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&a](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    EigenDecomposition out;
    out.sweeps = sweep;
    for (std::size_t i = 0; i < kDim; ++i) {
        out.values[i] = a(order[i], order[i]).real();
        out.vectors[i] = v.column(order[i]);
    }
    return out;
}

inline double min_eigenvalue(const HermitianMatrix3& h) { return hermitian_eig(h).values[0]; }

} // namespace qtomo
