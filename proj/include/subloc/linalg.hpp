#pragma once

// Truncated SVD by block subspace iteration, orthogonal projections and the
// spectral norm. Only matrix products with X and X^T are formed; the Gram
// matrix X^T X never is.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "subloc/errors.hpp"
#include "subloc/model.hpp"
#include "subloc/rng.hpp"

namespace subloc {

struct SvdOptions {
    double tol = 1e-8;
    int max_iter = 2000;
    /// Extra basis vectors carried beside the r wanted ones. A wider block
    /// converges at rate (s_{r+p+1}/s_r)^2 instead of (s_{r+1}/s_r)^2.
    index_t oversample = 5;
    std::uint64_t seed = 0xC0FFEE;
};

/// Leading singular triplets X ~ U diag(S) V^T.
struct SvdFactors {
    Matrix U;  // m x r, orthonormal columns
    Vector S;  // r, descending
    Matrix V;  // n x r, orthonormal columns
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // ||X V - U diag(S)||_2 of the returned factors
};

namespace detail {

inline Matrix thin_q(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

inline double spectral_norm_small(const Matrix& r) {
    if (r.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(r.transpose() * r, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace detail

/// Top-r singular triplets of x.
///
/// Stops when every Ritz value moved by less than tol (relative) since the
/// previous sweep and ||X V - U S||_2 <= tol * S[0]. On hitting max_iter the
/// last factors are returned with converged = false. Columns of U are signed
/// so that their largest-magnitude entry is positive; V follows.
inline SvdFactors top_singular(const Matrix& x, index_t r, const SvdOptions& opt = {}) {
    const index_t m = x.rows();
    const index_t n = x.cols();
    const index_t p = std::min(m, n);
    if (r < 1 || r > p) throw std::domain_error("top_singular: need 1 <= r <= min(m, n)");
    if (!(opt.tol > 0.0)) throw std::domain_error("top_singular: tol must be > 0");
    if (opt.max_iter < 1) throw std::domain_error("top_singular: max_iter must be >= 1");

    const index_t b = std::min(p, r + std::max<index_t>(0, opt.oversample));
    Rng rng(opt.seed);
    Matrix start(n, b);
    for (index_t j = 0; j < b; ++j)
        for (index_t i = 0; i < n; ++i) start(i, j) = rng.normal();
    Matrix v = detail::thin_q(start);

    const double eps = std::numeric_limits<double>::epsilon();
    SvdFactors out;
    Matrix u(m, b);
    Vector s = Vector::Constant(b, -1.0);
    bool have_ritz = false;

    for (int it = 1; it <= opt.max_iter; ++it) {
        Matrix y = x * v;
        if (have_ritz) {
            const Matrix res = y.leftCols(r) - u.leftCols(r) * s.head(r).asDiagonal();
            const double resid = detail::spectral_norm_small(res);
            out.residual = resid;
            out.iterations = it - 1;
            const double s0 = s(0);
            bool ok = s0 <= 0.0 || resid <= opt.tol * s0;
            if (ok && it > 2) {
                for (index_t j = 0; j < r && ok; ++j)
                    ok = std::abs(s(j) - out.S(j)) <= opt.tol * s(j) + 4.0 * eps * s0;
            } else if (s0 > 0.0) {
                ok = false;  // need two Ritz estimates to measure their change
            }
            out.S = s.head(r);
            if (ok) {
                out.converged = true;
                break;
            }
        }
        const Matrix q = detail::thin_q(y);
        const Matrix w = x.transpose() * q;  // n x b, w^T = Q^T X
        Eigen::HouseholderQR<Matrix> qr(w);
        const Matrix qv = qr.householderQ() * Matrix::Identity(n, b);
        const Matrix rr = qr.matrixQR().topRows(b).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Matrix> small(rr, Eigen::ComputeFullU | Eigen::ComputeFullV);
        // Q^T X = V_r S (Qv U_r)^T, so X ~ (Q V_r) S (Qv U_r)^T.
        u = q * small.matrixV();
        v = qv * small.matrixU();
        s = small.singularValues();
        have_ritz = true;
        if (it == opt.max_iter) {
            out.iterations = it;
            out.S = s.head(r);
            out.residual = detail::spectral_norm_small(x * v.leftCols(r) - u.leftCols(r) * s.head(r).asDiagonal());
        }
    }

    out.U = u.leftCols(r);
    out.V = v.leftCols(r);
    out.S = s.head(r);
    for (index_t c = 0; c < r; ++c) {
        index_t arg = 0;
        out.U.col(c).cwiseAbs().maxCoeff(&arg);
        if (out.U(arg, c) < 0.0) {
            out.U.col(c) *= -1.0;
            out.V.col(c) *= -1.0;
        }
    }
    return out;
}

/// U U^T x for column-orthonormal U.
inline Vector project_onto(const Matrix& u, const Vector& x) {
    if (u.rows() != x.size()) throw std::invalid_argument("project_onto: dimension mismatch");
    return u * (u.transpose() * x);
}

/// Largest singular value; throws convergence_error if the iteration stalls.
inline double spectral_norm(const Matrix& x) {
    if (x.size() == 0) return 0.0;
    SvdOptions opt;
    opt.tol = 1e-8;
    const SvdFactors f = top_singular(x, 1, opt);
    if (!f.converged) throw convergence_error("spectral_norm did not converge", f.residual);
    return f.S(0);
}

}  // namespace subloc
