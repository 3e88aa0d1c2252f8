#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace reslab {

// Minimal dense row-major real matrix.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Solves A x = b by LU with partial pivoting. A is consumed as the workspace.
inline std::vector<double> lu_solve(Mat A, std::vector<double> b) {
    const std::size_t n = A.rows;
    if (A.cols != n || b.size() != n) throw Error("lu_solve: shape mismatch");
    std::vector<std::size_t> piv(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t imax = k;
        double vmax = std::fabs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::fabs(A(i, k));
            if (v > vmax) {
                vmax = v;
                imax = i;
            }
        }
        if (vmax == 0.0) throw AmbiguityError("lu_solve: singular matrix");
        if (imax != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(imax, j));
            std::swap(b[k], b[imax]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = A(i, k) / A(k, k);
            A(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

// Householder QR least squares for an overdetermined system; returns x
// minimizing |A x - b|_2 and optionally the max-norm residual of A x - b.
inline std::vector<double> qr_lstsq(Mat A, std::vector<double> b, double* max_residual = nullptr) {
    const std::size_t m = A.rows, n = A.cols;
    if (b.size() != m || m < n) throw Error("qr_lstsq: shape mismatch");
    const Mat A0 = A;
    const std::vector<double> b0 = b;

    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) norm += A(i, k) * A(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) throw AmbiguityError("qr_lstsq: rank deficient system");
        if (A(k, k) > 0.0) norm = -norm;
        // Householder vector v, stored in-place below the diagonal.
        double vk = A(k, k) - norm;
        A(k, k) = norm;
        double vnorm2 = vk * vk;
        for (std::size_t i = k + 1; i < m; ++i) vnorm2 += A(i, k) * A(i, k);
        if (vnorm2 == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) {
            double dot = vk * A(k, j);
            for (std::size_t i = k + 1; i < m; ++i) dot += A(i, k) * A(i, j);
            double f = 2.0 * dot / vnorm2;
            A(k, j) -= f * vk;
            for (std::size_t i = k + 1; i < m; ++i) A(i, j) -= f * A(i, k);
        }
        double dot = vk * b[k];
        for (std::size_t i = k + 1; i < m; ++i) dot += A(i, k) * b[i];
        double f = 2.0 * dot / vnorm2;
        b[k] -= f * vk;
        for (std::size_t i = k + 1; i < m; ++i) b[i] -= f * A(i, k);
    }

    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        if (A(i, i) == 0.0) throw AmbiguityError("qr_lstsq: rank deficient system");
        x[i] = s / A(i, i);
    }

    if (max_residual) {
        double r = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < n; ++j) ax += A0(i, j) * x[j];
            r = std::max(r, std::fabs(ax - b0[i]));
        }
        *max_residual = r;
    }
    return x;
}

} // namespace reslab
