// Dense linear algebra: row-major Matrix, Jacobi symmetric eigensolver,
// Cholesky factorization, Gauss-Jordan inverse. Sized for the small
// problems in this toolkit (dimensions of order 10).
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "affectbench/core.hpp"

namespace afb {

struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
        return t;
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw parameter_error("matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols != x.size()) throw parameter_error("matvec: dimension mismatch");
    std::vector<double> out(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

// Cyclic Jacobi eigensolver for symmetric matrices. Returns eigenvalues
// ascending; eigenvectors() column i pairs with eigenvalue i.
struct EigenSym {
    std::vector<double> values;
    Matrix vectors;  // columns are eigenvectors
};

inline EigenSym eigen_symmetric(Matrix a, int max_sweeps = 64) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw parameter_error("eigen_symmetric: matrix not square");
    Matrix v = Matrix::identity(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    EigenSym out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    // sort ascending, permuting eigenvector columns alongside
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (out.values[order[j]] < out.values[order[i]]) std::swap(order[i], order[j]);
    EigenSym sorted;
    sorted.values.resize(n);
    sorted.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted.values[i] = out.values[order[i]];
        for (std::size_t k = 0; k < n; ++k) sorted.vectors(k, i) = v(k, order[i]);
    }
    return sorted;
}

// Cholesky factor L (lower) with A = L L^T. Throws when A is not
// positive definite.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw parameter_error("cholesky: matrix not square");
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw parameter_error("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

// Solves A x = b given the Cholesky factor of A.
inline std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
    const std::size_t n = l.rows;
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
        b[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
        b[i] = s / l(i, i);
    }
    return b;
}

// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(Matrix a) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw parameter_error("inverse: matrix not square");
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        if (std::fabs(a(pivot, col)) < 1e-300) throw parameter_error("inverse: singular matrix");
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        const double d = a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

// Moore-Penrose pseudoinverse for a full-row-rank matrix:
// A+ = A^T (A A^T)^{-1}.
inline Matrix pinv_full_row_rank(const Matrix& a) {
    Matrix gram = matmul(a, a.transposed());
    return matmul(a.transposed(), inverse(gram));
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double sq_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

}  // namespace afb
