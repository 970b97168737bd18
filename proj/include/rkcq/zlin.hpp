#ifndef RKCQ_ZLIN_HPP
#define RKCQ_ZLIN_HPP

// Small dense linear algebra and FFT used by the operational calculus.
// Sizes are tiny (stage counts up to 5, state dimensions up to a few
// hundred), so everything is plain row-major storage with no blocking.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace rkcq {

using cplx = std::complex<double>;

namespace zlin {

namespace detail {

template <class T>
inline double magnitude(const T& v)
{
    return std::abs(v);
}

template <class T>
inline T conj_if_complex(const T& v)
{
    if constexpr (std::is_same_v<T, cplx>) {
        return std::conj(v);
    } else {
        return v;
    }
}

template <class T>
inline bool is_finite(const T& v)
{
    if constexpr (std::is_same_v<T, cplx>) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
        return std::isfinite(v);
    }
}

} // namespace detail

/// Raised when a pivot vanishes to working precision.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double pivot)
        : std::runtime_error(what + " (pivot magnitude " + std::to_string(pivot) + ")"), pivot_(pivot)
    {
    }
    double pivot() const noexcept { return pivot_; }

private:
    double pivot_;
};

/// Raised by eig() on QR non-convergence or an eigenvector basis that is
/// singular to working precision.
class EigenError : public std::runtime_error {
public:
    EigenError(const std::string& what, double cond)
        : std::runtime_error(what), cond_(cond)
    {
    }
    double cond_estimate() const noexcept { return cond_; }

private:
    double cond_;
};

/// Row-major dense matrix over double or std::complex<double>.
template <class T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    /// Takes ownership of row-major entries; rejects size mismatch and
    /// non-finite values.
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries))
    {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("Matrix: entry count does not match shape");
        }
        for (const auto& v : data_) {
            if (!detail::is_finite(v)) {
                throw std::invalid_argument("Matrix: non-finite entry");
            }
        }
    }

    Matrix(std::initializer_list<std::initializer_list<T>> rows)
    {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw std::invalid_argument("Matrix: ragged initializer");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = T{1};
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    Matrix transpose() const
    {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t(j, i) = (*this)(i, j);
            }
        }
        return t;
    }

    Matrix adjoint() const
    {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t(j, i) = detail::conj_if_complex((*this)(i, j));
            }
        }
        return t;
    }

    Matrix& operator+=(const Matrix& o)
    {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += o.data_[i];
        }
        return *this;
    }

    Matrix& operator-=(const Matrix& o)
    {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] -= o.data_[i];
        }
        return *this;
    }

    Matrix& operator*=(const T& s)
    {
        for (auto& v : data_) {
            v *= s;
        }
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
    friend Matrix operator*(const T& s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b)
    {
        if (a.cols_ != b.rows_) {
            throw std::invalid_argument("Matrix product: inner dimensions differ");
        }
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t l = 0; l < a.cols_; ++l) {
                const T ail = a(i, l);
                if (ail == T{}) {
                    continue;
                }
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    c(i, j) += ail * b(l, j);
                }
            }
        }
        return c;
    }

    friend std::vector<T> operator*(const Matrix& a, std::span<const T> x)
    {
        if (a.cols_ != x.size()) {
            throw std::invalid_argument("Matrix-vector product: dimension mismatch");
        }
        std::vector<T> y(a.rows_, T{});
        for (std::size_t i = 0; i < a.rows_; ++i) {
            T acc{};
            for (std::size_t j = 0; j < a.cols_; ++j) {
                acc += a(i, j) * x[j];
            }
            y[i] = acc;
        }
        return y;
    }

    friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& x)
    {
        return a * std::span<const T>(x);
    }

private:
    void check_same_shape(const Matrix& o) const
    {
        if (rows_ != o.rows_ || cols_ != o.cols_) {
            throw std::invalid_argument("Matrix: shape mismatch");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using ComplexMatrix = Matrix<cplx>;
using RealMatrix = Matrix<double>;

inline ComplexMatrix to_complex(const RealMatrix& a)
{
    ComplexMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            c(i, j) = a(i, j);
        }
    }
    return c;
}

template <class T>
double frobenius_norm(const Matrix<T>& a)
{
    double s = 0.0;
    for (const auto& v : a.data()) {
        s += std::norm(cplx(v));
    }
    return std::sqrt(s);
}

/// Maximum absolute column sum.
template <class T>
double norm1(const Matrix<T>& a)
{
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            s += detail::magnitude(a(i, j));
        }
        best = std::max(best, s);
    }
    return best;
}

template <class T>
double norm2(std::span<const T> x)
{
    double s = 0.0;
    for (const auto& v : x) {
        s += std::norm(cplx(v));
    }
    return std::sqrt(s);
}

template <class T>
double norm2(const std::vector<T>& x)
{
    return norm2(std::span<const T>(x));
}

/// LU factorization with partial pivoting, PA = LU. Factor once, solve
/// against many right-hand sides.
template <class T>
class LuFactorization {
public:
    explicit LuFactorization(Matrix<T> a)
        : lu_(std::move(a)), perm_(lu_.rows())
    {
        if (!lu_.square()) {
            throw std::invalid_argument("LU: matrix must be square");
        }
        const std::size_t n = lu_.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        double scale = 0.0;
        for (const auto& v : lu_.data()) {
            scale = std::max(scale, detail::magnitude(v));
        }
        const double tiny = static_cast<double>(std::max<std::size_t>(n, 1)) * std::numeric_limits<double>::epsilon() * scale;

        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = detail::magnitude(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                const double v = detail::magnitude(lu_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (best <= tiny || scale == 0.0) {
                throw SingularMatrixError("LU: matrix is singular to working precision", best);
            }
            if (p != k) {
                std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
                std::swap(perm_[k], perm_[p]);
            }
            const T pivot = lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const T factor = lu_(i, k) / pivot;
                lu_(i, k) = factor;
                if (factor == T{}) {
                    continue;
                }
                for (std::size_t j = k + 1; j < n; ++j) {
                    lu_(i, j) -= factor * lu_(k, j);
                }
            }
        }
    }

    std::size_t size() const noexcept { return lu_.rows(); }

    void solve_in_place(std::span<T> x) const
    {
        const std::size_t n = lu_.rows();
        if (x.size() != n) {
            throw std::invalid_argument("LU solve: right-hand side has wrong length");
        }
        std::vector<T> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = x[perm_[i]];
        }
        for (std::size_t i = 0; i < n; ++i) {
            T acc = y[i];
            for (std::size_t j = 0; j < i; ++j) {
                acc -= lu_(i, j) * y[j];
            }
            y[i] = acc;
        }
        for (std::size_t i = n; i-- > 0;) {
            T acc = y[i];
            for (std::size_t j = i + 1; j < n; ++j) {
                acc -= lu_(i, j) * y[j];
            }
            y[i] = acc / lu_(i, i);
        }
        std::copy(y.begin(), y.end(), x.begin());
    }

    std::vector<T> solve(std::span<const T> rhs) const
    {
        std::vector<T> x(rhs.begin(), rhs.end());
        solve_in_place(x);
        return x;
    }

    Matrix<T> solve(const Matrix<T>& rhs) const
    {
        if (rhs.rows() != size()) {
            throw std::invalid_argument("LU solve: right-hand side has wrong row count");
        }
        Matrix<T> x(rhs.rows(), rhs.cols());
        std::vector<T> col(rhs.rows());
        for (std::size_t j = 0; j < rhs.cols(); ++j) {
            for (std::size_t i = 0; i < rhs.rows(); ++i) {
                col[i] = rhs(i, j);
            }
            solve_in_place(col);
            for (std::size_t i = 0; i < rhs.rows(); ++i) {
                x(i, j) = col[i];
            }
        }
        return x;
    }

    Matrix<T> inverse() const { return solve(Matrix<T>::identity(size())); }

private:
    Matrix<T> lu_;
    std::vector<std::size_t> perm_;
};

template <class T>
std::vector<T> solve(const Matrix<T>& a, std::span<const T> rhs)
{
    return LuFactorization<T>(a).solve(rhs);
}

template <class T>
std::vector<T> solve(const Matrix<T>& a, const std::vector<T>& rhs)
{
    return LuFactorization<T>(a).solve(std::span<const T>(rhs));
}

template <class T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& rhs)
{
    return LuFactorization<T>(a).solve(rhs);
}

template <class T>
Matrix<T> inverse(const Matrix<T>& a)
{
    return LuFactorization<T>(a).inverse();
}

struct EigenDecomposition {
    std::vector<cplx> values;
    ComplexMatrix vectors; ///< columns are unit-norm right eigenvectors
    double cond_estimate = 1.0; ///< 1-norm condition number of `vectors`
};

namespace detail {

// Householder reduction to upper Hessenberg form, accumulating the
// unitary similarity in z (a = z h z^H).
inline void hessenberg(ComplexMatrix& h, ComplexMatrix& z)
{
    const std::size_t n = h.rows();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha_norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            alpha_norm += std::norm(h(i, k));
        }
        alpha_norm = std::sqrt(alpha_norm);
        if (alpha_norm == 0.0) {
            continue;
        }
        const cplx x0 = h(k + 1, k);
        const cplx phase = std::abs(x0) == 0.0 ? cplx(1.0) : x0 / std::abs(x0);
        std::vector<cplx> v(n, cplx{});
        v[k + 1] = x0 + phase * alpha_norm;
        for (std::size_t i = k + 2; i < n; ++i) {
            v[i] = h(i, k);
        }
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) {
            continue;
        }
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for (std::size_t j = 0; j < n; ++j) {
            cplx s{};
            for (std::size_t i = k + 1; i < n; ++i) {
                s += std::conj(v[i]) * h(i, j);
            }
            s *= 2.0 / vnorm2;
            for (std::size_t i = k + 1; i < n; ++i) {
                h(i, j) -= v[i] * s;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            cplx s{};
            for (std::size_t j = k + 1; j < n; ++j) {
                s += h(i, j) * v[j];
            }
            s *= 2.0 / vnorm2;
            for (std::size_t j = k + 1; j < n; ++j) {
                h(i, j) -= s * std::conj(v[j]);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            cplx s{};
            for (std::size_t j = k + 1; j < n; ++j) {
                s += z(i, j) * v[j];
            }
            s *= 2.0 / vnorm2;
            for (std::size_t j = k + 1; j < n; ++j) {
                z(i, j) -= s * std::conj(v[j]);
            }
        }
        for (std::size_t i = k + 2; i < n; ++i) {
            h(i, k) = cplx{};
        }
    }
}

struct Givens {
    double c;
    cplx s;
};

// Rotation G = [c s; -conj(s) c] with G [a; b] = [r; 0].
inline Givens make_givens(cplx a, cplx b)
{
    const double ab = std::abs(b);
    if (ab == 0.0) {
        return {1.0, cplx{}};
    }
    const double aa = std::abs(a);
    if (aa == 0.0) {
        return {0.0, std::conj(b) / ab};
    }
    const double r = std::hypot(aa, ab);
    const cplx phase = a / aa;
    return {aa / r, phase * std::conj(b) / r};
}

inline cplx wilkinson_shift(cplx a, cplx b, cplx c, cplx d)
{
    const cplx half = 0.5 * (a - d);
    const cplx disc = std::sqrt(half * half + b * c);
    const cplx mu1 = d - b * c / (half + disc);
    const cplx mu2 = d - b * c / (half - disc);
    const bool ok1 = std::abs(half + disc) > 0.0;
    const bool ok2 = std::abs(half - disc) > 0.0;
    if (!ok1 && !ok2) {
        return d;
    }
    if (!ok1) {
        return mu2;
    }
    if (!ok2) {
        return mu1;
    }
    return std::abs(mu1 - d) <= std::abs(mu2 - d) ? mu1 : mu2;
}

// Shifted QR iteration on a Hessenberg matrix until upper triangular.
inline void schur_triangularize(ComplexMatrix& h, ComplexMatrix& z)
{
    const std::size_t n = h.rows();
    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t cap = 100 * n * n;
    std::size_t total = 0;
    std::size_t since_deflation = 0;
    const double hnorm = std::max(frobenius_norm(h), std::numeric_limits<double>::min());

    std::size_t hi = n - 1;
    while (hi > 0) {
        std::size_t lo = hi;
        while (lo > 0) {
            double scale = std::abs(h(lo, lo)) + std::abs(h(lo - 1, lo - 1));
            if (scale == 0.0) {
                scale = hnorm;
            }
            if (std::abs(h(lo, lo - 1)) <= eps * scale) {
                h(lo, lo - 1) = cplx{};
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            since_deflation = 0;
            continue;
        }
        if (++total > cap) {
            throw EigenError("eig: QR iteration did not converge", std::numeric_limits<double>::infinity());
        }
        ++since_deflation;

        cplx mu;
        if (since_deflation % 11 == 0) {
            // exceptional shift, deterministic
            mu = h(hi, hi) + 0.75 * std::abs(h(hi, hi - 1));
        } else {
            mu = wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
        }

        for (std::size_t i = lo; i <= hi; ++i) {
            h(i, i) -= mu;
        }
        std::vector<Givens> rots;
        rots.reserve(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
            const Givens g = make_givens(h(k, k), h(k + 1, k));
            rots.push_back(g);
            for (std::size_t j = k; j < n; ++j) {
                const cplx x = h(k, j);
                const cplx y = h(k + 1, j);
                h(k, j) = g.c * x + g.s * y;
                h(k + 1, j) = -std::conj(g.s) * x + g.c * y;
            }
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const Givens& g = rots[k - lo];
            const std::size_t top = std::min(k + 2, hi);
            for (std::size_t i = 0; i <= top; ++i) {
                const cplx x = h(i, k);
                const cplx y = h(i, k + 1);
                h(i, k) = g.c * x + std::conj(g.s) * y;
                h(i, k + 1) = -g.s * x + g.c * y;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const cplx x = z(i, k);
                const cplx y = z(i, k + 1);
                z(i, k) = g.c * x + std::conj(g.s) * y;
                z(i, k + 1) = -g.s * x + g.c * y;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) {
            h(i, i) += mu;
        }
    }
}

} // namespace detail

/// Eigendecomposition of a small square complex matrix (n <= 16) by
/// Hessenberg reduction, shifted QR to Schur form, and back-substitution
/// for the eigenvectors. Eigenvalues are ordered by real part, then
/// imaginary part.
inline EigenDecomposition eig(const ComplexMatrix& a, double max_cond = 1e14)
{
    if (!a.square()) {
        throw std::invalid_argument("eig: matrix must be square");
    }
    const std::size_t n = a.rows();
    if (n == 0 || n > 16) {
        throw std::invalid_argument("eig: supported sizes are 1..16");
    }
    ComplexMatrix t = a;
    ComplexMatrix z = ComplexMatrix::identity(n);
    detail::hessenberg(t, z);
    detail::schur_triangularize(t, z);

    const double eps = std::numeric_limits<double>::epsilon();
    const double tnorm = std::max(frobenius_norm(t), std::numeric_limits<double>::min());
    const double smin = eps * tnorm;

    ComplexMatrix y(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx lambda = t(k, k);
        y(k, k) = 1.0;
        for (std::size_t jj = k; jj-- > 0;) {
            cplx acc{};
            for (std::size_t l = jj + 1; l <= k; ++l) {
                acc += t(jj, l) * y(l, k);
            }
            cplx denom = t(jj, jj) - lambda;
            if (std::abs(denom) < smin) {
                denom = smin;
            }
            y(jj, k) = -acc / denom;
        }
    }
    ComplexMatrix v = z * y;
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += std::norm(v(i, k));
        }
        s = std::sqrt(s);
        for (std::size_t i = 0; i < n; ++i) {
            v(i, k) /= s;
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const cplx a1 = t(i, i);
        const cplx a2 = t(j, j);
        if (a1.real() != a2.real()) {
            return a1.real() < a2.real();
        }
        return a1.imag() < a2.imag();
    });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = t(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) {
            out.vectors(i, k) = v(i, order[k]);
        }
    }

    try {
        const ComplexMatrix vinv = inverse(out.vectors);
        out.cond_estimate = std::max(1.0, norm1(out.vectors) * norm1(vinv));
    } catch (const SingularMatrixError&) {
        throw EigenError("eig: matrix is defective to working precision", std::numeric_limits<double>::infinity());
    }
    if (!(out.cond_estimate <= max_cond)) {
        throw EigenError("eig: eigenvector basis is ill-conditioned (cond " + std::to_string(out.cond_estimate) + ")",
                         out.cond_estimate);
    }
    return out;
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending.
inline std::vector<double> symmetric_eigenvalues(RealMatrix a)
{
    if (!a.square()) {
        throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
    }
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * (std::abs(a(p, p)) + std::abs(a(q, q))) ||
                    std::abs(apq) < std::numeric_limits<double>::min()) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                ++rotations;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
        if (rotations == 0) {
            break;
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) {
        ev[i] = a(i, i);
    }
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Largest singular value, from the eigenvalues of the Gram matrix a^H a.
template <class T>
double spectral_norm(const Matrix<T>& a)
{
    const Matrix<T> gram = a.adjoint() * a;
    double best = 0.0;
    if constexpr (std::is_same_v<T, double>) {
        const std::vector<double> ev = symmetric_eigenvalues(gram);
        best = ev.empty() ? 0.0 : ev.back();
    } else {
        ComplexMatrix g(gram.cols(), gram.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) {
                g(i, j) = gram(i, j);
            }
        }
        for (const cplx& ev : eig(g, std::numeric_limits<double>::infinity()).values) {
            best = std::max(best, ev.real());
        }
    }
    return std::sqrt(std::max(best, 0.0));
}

enum class FftDirection { forward, inverse };

inline bool is_power_of_two(std::size_t n)
{
    return n != 0 && (n & (n - 1)) == 0;
}

inline std::size_t next_power_of_two(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

/// In-place radix-2 transform. Forward uses e^{-2 pi i jl/N}; inverse
/// uses the conjugate kernel and divides by N.
inline void fft_in_place(std::span<cplx> x, FftDirection dir)
{
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("fft: length " + std::to_string(n) + " is not a power of two");
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(x[i], x[j]);
        }
    }
    const double sign = dir == FftDirection::forward ? -1.0 : 1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        std::vector<cplx> w(half);
        for (std::size_t k = 0; k < half; ++k) {
            w[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len));
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = x[i + k];
                const cplx v = x[i + k + half] * w[k];
                x[i + k] = u + v;
                x[i + k + half] = u - v;
            }
        }
    }
    if (dir == FftDirection::inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : x) {
            v *= inv;
        }
    }
}

inline std::vector<cplx> fft(std::vector<cplx> x, FftDirection dir)
{
    fft_in_place(x, dir);
    return x;
}

} // namespace zlin
} // namespace rkcq

#endif // RKCQ_ZLIN_HPP
