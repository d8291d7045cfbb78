#pragma once

// One-sided (Hestenes) Jacobi SVD. Test-only reference for matrices up to
// 50x50; it shares no code with the subspace iteration it checks.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Singular values (descending) of a row-major rows x cols matrix.
inline std::vector<double> jacobi_singular_values(std::vector<double> a, int rows, int cols) {
    if (rows > 50 || cols > 50) throw std::invalid_argument("jacobi oracle limited to 50x50");
    // Work on the orientation with more rows than columns so the column
    // rotations converge to an orthogonal set of cols vectors.
    if (rows < cols) {
        std::vector<double> t(a.size());
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
        a.swap(t);
        std::swap(rows, cols);
    }
    auto at = [&](int i, int j) -> double& { return a[i * cols + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < cols - 1; ++p) {
            for (int q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < rows; ++i) {
                    alpha += at(i, p) * at(i, p);
                    beta += at(i, q) * at(i, q);
                    gamma += at(i, p) * at(i, q);
                }
                if (gamma == 0.0) continue;
                const double scale = std::sqrt(alpha * beta);
                if (scale == 0.0) continue;
                off = std::max(off, std::abs(gamma) / scale);
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < rows; ++i) {
                    const double ap = at(i, p);
                    const double aq = at(i, q);
                    at(i, p) = c * ap - s * aq;
                    at(i, q) = s * ap + c * aq;
                }
            }
        }
        if (off < 1e-15) break;
    }
    std::vector<double> sv(cols);
    for (int j = 0; j < cols; ++j) {
        double ss = 0.0;
        for (int i = 0; i < rows; ++i) ss += at(i, j) * at(i, j);
        sv[j] = std::sqrt(ss);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

}  // namespace oracle
