#ifndef LOHE_LINALG_HPP
#define LOHE_LINALG_HPP

// Small dense complex linear algebra on C^{d+1}: vectors, square matrices,
// skew-Hermitian generators and their unitary exponentials. Dimensions are
// tiny (d+1 <= ~16), so everything is plain loops over contiguous storage.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lohe/error.hpp"

namespace lohe {

using Complex = std::complex<double>;
using ConstCSpan = std::span<const Complex>;
using CSpan = std::span<Complex>;

/// Owning vector in C^{d+1}.
class CVector {
public:
    CVector() = default;
    explicit CVector(std::size_t n) : data_(n, Complex{}) {}
    CVector(std::initializer_list<Complex> init) : data_(init) {}
    explicit CVector(ConstCSpan s) : data_(s.begin(), s.end()) {}

    static CVector basis(std::size_t n, std::size_t k) {
        CVector e(n);
        e[k] = 1.0;
        return e;
    }

    std::size_t size() const noexcept { return data_.size(); }
    Complex& operator[](std::size_t i) { return data_[i]; }
    const Complex& operator[](std::size_t i) const { return data_[i]; }
    Complex* data() noexcept { return data_.data(); }
    const Complex* data() const noexcept { return data_.data(); }
    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    operator ConstCSpan() const noexcept { return {data_.data(), data_.size()}; }
    operator CSpan() noexcept { return {data_.data(), data_.size()}; }

    CVector& operator+=(ConstCSpan o) {
        check_same(o.size());
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o[i];
        return *this;
    }
    CVector& operator-=(ConstCSpan o) {
        check_same(o.size());
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o[i];
        return *this;
    }
    CVector& operator*=(Complex a) {
        for (auto& x : data_) x *= a;
        return *this;
    }

    friend CVector operator+(CVector a, const CVector& b) { return a += b; }
    friend CVector operator-(CVector a, const CVector& b) { return a -= b; }
    friend CVector operator*(Complex s, CVector a) { return a *= s; }
    friend CVector operator*(CVector a, Complex s) { return a *= s; }
    friend bool operator==(const CVector&, const CVector&) = default;

private:
    void check_same(std::size_t n) const {
        if (n != data_.size()) throw DimensionError("CVector: length mismatch");
    }

    std::vector<Complex> data_;
};

/// <z, w> = sum conj(z^a) w^a (conjugate-linear in the first slot).
inline Complex inner(ConstCSpan z, ConstCSpan w) {
    if (z.size() != w.size()) throw DimensionError("inner: length mismatch");
    Complex s{};
    for (std::size_t a = 0; a < z.size(); ++a) s += std::conj(z[a]) * w[a];
    return s;
}

inline double norm_squared(ConstCSpan z) noexcept {
    double s = 0.0;
    for (const auto& x : z) s += std::norm(x);
    return s;
}

inline double norm(ConstCSpan z) noexcept { return std::sqrt(norm_squared(z)); }

inline double distance(ConstCSpan a, ConstCSpan b) {
    if (a.size() != b.size()) throw DimensionError("distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

/// Dense square complex matrix, row-major.
class CMatrix {
public:
    CMatrix() = default;
    explicit CMatrix(std::size_t n) : n_(n), a_(n * n, Complex{}) {}
    CMatrix(std::initializer_list<std::initializer_list<Complex>> rows) : n_(rows.size()) {
        a_.reserve(n_ * n_);
        for (const auto& r : rows) {
            if (r.size() != n_) throw DimensionError("CMatrix: rows must be square");
            a_.insert(a_.end(), r.begin(), r.end());
        }
    }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t dim() const noexcept { return n_; }
    Complex& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    /// out = A x; out must not alias x.
    void apply(ConstCSpan x, CSpan out) const {
        if (x.size() != n_ || out.size() != n_) throw DimensionError("CMatrix::apply: size mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            Complex s{};
            const Complex* row = &a_[i * n_];
            for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
            out[i] = s;
        }
    }

    CVector operator*(ConstCSpan x) const {
        CVector out(n_);
        apply(x, out);
        return out;
    }

    CMatrix adjoint() const {
        CMatrix r(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) r(i, j) = std::conj((*this)(j, i));
        return r;
    }

    CMatrix& operator+=(const CMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    CMatrix& operator-=(const CMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    CMatrix& operator*=(Complex s) {
        for (auto& x : a_) x *= s;
        return *this;
    }

    friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
    friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
    friend CMatrix operator*(Complex s, CMatrix a) { return a *= s; }

    friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
        a.check_same(b);
        const std::size_t n = a.n_;
        CMatrix r(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

    friend bool operator==(const CMatrix&, const CMatrix&) = default;

    /// max_ij |A_ij|
    double max_abs() const noexcept {
        double m = 0.0;
        for (const auto& x : a_) m = std::max(m, std::abs(x));
        return m;
    }

    /// Induced 1-norm (max column sum).
    double norm1() const noexcept {
        double best = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    bool all_finite() const noexcept {
        return std::all_of(a_.begin(), a_.end(),
                           [](const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
    }

private:
    void check_same(const CMatrix& o) const {
        if (o.n_ != n_) throw DimensionError("CMatrix: dimension mismatch");
    }

    std::size_t n_ = 0;
    std::vector<Complex> a_;
};

/// Matrix exponential by scaling and squaring around a degree-18 Taylor
/// polynomial, applied once ||A/2^s||_1 <= 1/4.
inline CMatrix expm(const CMatrix& a) {
    if (!a.all_finite()) throw DomainError("expm: non-finite input");
    const std::size_t n = a.dim();
    const double nrm = a.norm1();
    int squarings = 0;
    if (nrm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.25)));
    CMatrix scaled = a;
    scaled *= std::ldexp(1.0, -squarings);

    CMatrix result = CMatrix::identity(n);
    CMatrix term = CMatrix::identity(n);
    for (int k = 1; k <= 18; ++k) {
        term = term * scaled;
        term *= 1.0 / k;
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

/// Frequency matrix: a (d+1)x(d+1) matrix with Omega^dagger = -Omega.
class SkewHermitian {
public:
    SkewHermitian() = default;
    explicit SkewHermitian(std::size_t n) : m_(n) {}

    /// Accepts a matrix that is skew-Hermitian within `tol` and stores its
    /// exact skew part (A - A^dagger)/2.
    static SkewHermitian from_matrix(const CMatrix& a, double tol = 1e-12) {
        const std::size_t n = a.dim();
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(a(i, j) + std::conj(a(j, i))));
        if (!(worst <= tol))
            throw DomainError("SkewHermitian: |A + A^dagger| = " + std::to_string(worst) + " exceeds tolerance");
        SkewHermitian s(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s.m_(i, j) = 0.5 * (a(i, j) - std::conj(a(j, i)));
        return s;
    }

    /// Real planar rotation generator [[0, -nu], [nu, 0]].
    static SkewHermitian planar_rotation(double nu) {
        SkewHermitian s(2);
        s.m_(0, 1) = -nu;
        s.m_(1, 0) = nu;
        return s;
    }

    std::size_t dim() const noexcept { return m_.dim(); }
    const CMatrix& matrix() const noexcept { return m_; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    void apply(ConstCSpan x, CSpan out) const { m_.apply(x, out); }
    CVector operator*(ConstCSpan x) const { return m_ * x; }
    bool is_zero() const noexcept { return m_.max_abs() == 0.0; }

    friend bool operator==(const SkewHermitian&, const SkewHermitian&) = default;

private:
    CMatrix m_;
};

/// e^{s Omega}; unitary for finite s.
inline CMatrix expm_skew(const SkewHermitian& omega, double s) {
    if (!std::isfinite(s)) throw DomainError("expm_skew: non-finite time argument");
    CMatrix a = omega.matrix();
    a *= s;
    return expm(a);
}

inline double frobenius_norm(const CMatrix& a) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

inline double frobenius_norm(const SkewHermitian& omega) noexcept { return frobenius_norm(omega.matrix()); }

/// Uniform point on the unit sphere of C^{d+1}: complex Gaussian entries, normalized.
template <class Rng>
CVector random_unit_vector(Rng& rng, std::size_t d) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVector z(d + 1);
    double n2 = 0.0;
    do {
        for (auto& x : z) x = Complex(gauss(rng), gauss(rng));
        n2 = norm_squared(z);
    } while (n2 == 0.0);
    z *= 1.0 / std::sqrt(n2);
    return z;
}

/// (A - A^dagger)/2 with A_ij uniform in the complex disc of radius `scale`.
template <class Rng>
SkewHermitian random_skew_hermitian(Rng& rng, std::size_t d, double scale) {
    if (!(scale >= 0.0)) throw DomainError("random_skew_hermitian: scale must be >= 0");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = d + 1;
    CMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double r = scale * std::sqrt(unit(rng));
            const double phi = 2.0 * std::numbers::pi * unit(rng);
            a(i, j) = std::polar(r, phi);
        }
    CMatrix skew = a - a.adjoint();
    skew *= 0.5;
    return SkewHermitian::from_matrix(skew, 0.0);
}

} // namespace lohe

#endif // LOHE_LINALG_HPP
