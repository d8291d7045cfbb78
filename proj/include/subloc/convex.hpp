#pragma once

// Convex relaxation: maximize <X, M> over
//   0 <= M <= 1,   ||M||_* <= sqrt(k_m k_n),   <M, 1 1^T> = k_m k_n
// by three-block consensus ADMM, then read the support off the top singular
// pair of the solution.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

#include "subloc/localize.hpp"
#include "subloc/model.hpp"

namespace subloc {

struct RelaxationOptions {
    double rho = 2.0;  // penalty relative to max |X_ij|
    int max_iter = 2000;
    double feas_tol = 1e-5;
    bool record_merit = false;
};

struct RelaxationSolution {
    Matrix M_hat;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    double radius = 0.0;       // nuclear-ball radius used
    double rho = 0.0;  // absolute penalty used
    std::vector<double> merit;  // per-iteration ADMM residual energy, if recorded
};

/// Euclidean projection of a non-negative vector onto {s >= 0, sum s <= radius}.
inline Vector project_l1_ball_nonneg(const Vector& s, double radius) {
    Vector out = s.cwiseMax(0.0);
    if (out.sum() <= radius) return out;
    std::vector<double> sorted(out.data(), out.data() + out.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cum += sorted[i];
        const double t = (cum - radius) / double(i + 1);
        if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
            theta = t;
            break;
        }
    }
    return (out.array() - theta).cwiseMax(0.0).matrix();
}

/// Projection onto the nuclear-norm ball of the given radius.
inline Matrix project_nuclear_ball(const Matrix& v, double radius) {
    Eigen::BDCSVD<Matrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!svd.singularValues().allFinite() || !svd.matrixU().allFinite() || !svd.matrixV().allFinite()) {
        // BDCSVD can break down on exactly rank-deficient input
        Eigen::JacobiSVD<Matrix> jac(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (jac.singularValues().sum() <= radius) return v;
        const Vector t = project_l1_ball_nonneg(jac.singularValues(), radius);
        return jac.matrixU() * t.asDiagonal() * jac.matrixV().transpose();
    }
    const Vector& s = svd.singularValues();
    if (s.sum() <= radius) return v;
    const Vector t = project_l1_ball_nonneg(s, radius);
    return svd.matrixU() * t.asDiagonal() * svd.matrixV().transpose();
}

/// Projection onto {<M, 1 1^T> = total}.
inline Matrix project_hyperplane(const Matrix& v, double total) {
    return (v.array() + (total - v.sum()) / double(v.size())).matrix();
}

/// Projection onto [0,1]^{m x n} intersected with {<M, 1 1^T> = total}.
inline Matrix project_box_hyperplane(const Matrix& v, double total) {
    if (total < 0.0 || total > double(v.size())) throw std::domain_error("project_box_hyperplane: infeasible total");
    auto mass = [&](double tau) { return (v.array() + tau).cwiseMax(0.0).cwiseMin(1.0).sum(); };
    double lo = -v.maxCoeff() - 1.0, hi = 1.0 - v.minCoeff() + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < total ? lo : hi) = mid;
    }
    // linear correction on the free entries at the bracketing shift
    double tau = 0.5 * (lo + hi);
    const Eigen::ArrayXXd shifted = v.array() + tau;
    const double free_count = ((shifted > 0.0) && (shifted < 1.0)).cast<double>().sum();
    if (free_count > 0.0) tau += (total - mass(tau)) / free_count;
    return (v.array() + tau).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

inline double nuclear_norm(const Matrix& v) {
    Eigen::BDCSVD<Matrix> svd(v);
    if (svd.singularValues().allFinite()) return svd.singularValues().sum();
    return Eigen::JacobiSVD<Matrix>(v).singularValues().sum();
}

inline RelaxationSolution solve_relaxation(const Observation& obs, index_t k_m, index_t k_n,
                                           const RelaxationOptions& opt = {}) {
    const Matrix& x = obs.data;
    const index_t m = x.rows(), n = x.cols();
    if (k_m < 1 || k_n < 1 || k_m > m || k_n > n) throw std::domain_error("solve_relaxation: need 1 <= k <= dimension");
    if (!(opt.rho > 0.0)) throw std::domain_error("solve_relaxation: rho must be > 0");
    if (opt.max_iter < 1 || !(opt.feas_tol > 0.0)) throw std::domain_error("solve_relaxation: bad iteration settings");

    const double total = double(k_m) * double(k_n);
    const double radius = std::sqrt(total);
    const double scale = x.cwiseAbs().maxCoeff();
    const double rho = opt.rho * (scale > 0.0 ? scale : 1.0);

    Matrix z = Matrix::Constant(m, n, total / double(m * n));
    Matrix u1 = Matrix::Zero(m, n), u2 = u1, u3 = u1;
    Matrix m1, m2, m3;
    RelaxationSolution sol;
    sol.radius = radius;
    for (int it = 1; it <= opt.max_iter; ++it) {
        m1 = (z - u1 + x / rho).cwiseMax(0.0).cwiseMin(1.0);
        m2 = project_nuclear_ball(z - u2, radius);
        m3 = project_hyperplane(z - u3, total);

        const Matrix z_prev = z;
        z = (m1 + u1 + m2 + u2 + m3 + u3) / 3.0;
        const Matrix d1 = m1 - z, d2 = m2 - z, d3 = m3 - z;
        u1 += d1;
        u2 += d2;
        u3 += d3;

        const double dz = (z - z_prev).squaredNorm();
        sol.primal_residual = std::sqrt(d1.squaredNorm() + d2.squaredNorm() + d3.squaredNorm());
        sol.dual_residual = opt.rho * std::sqrt(3.0 * dz);  // in units of max |X_ij|
        if (opt.record_merit)
            sol.merit.push_back(rho * (3.0 * dz + d1.squaredNorm() + d2.squaredNorm() + d3.squaredNorm()));
        sol.iterations = it;
        if (std::max(sol.primal_residual, sol.dual_residual) <= opt.feas_tol) {
            sol.converged = true;
            break;
        }
    }
    sol.rho = rho;
    sol.M_hat = project_box_hyperplane(m2, total);
    sol.objective = (x.array() * sol.M_hat.array()).sum();
    return sol;
}

struct ConstraintReport {
    double box_violation = 0.0;      // max over entries of distance outside [0,1]
    double nuclear_excess = 0.0;     // ||M||_* - radius, floored at 0
    double hyperplane_error = 0.0;   // |<M, 1 1^T> - k_m k_n|
};

inline ConstraintReport check_constraints(const Matrix& mh, index_t k_m, index_t k_n) {
    ConstraintReport r;
    const double total = double(k_m) * double(k_n);
    r.box_violation = std::max({0.0, -mh.minCoeff(), mh.maxCoeff() - 1.0});
    r.nuclear_excess = std::max(0.0, nuclear_norm(mh) - std::sqrt(total));
    r.hyperplane_error = std::abs(mh.sum() - total);
    return r;
}

/// Box within tol, nuclear norm within radius*(1+tol), mass within tol*k_m*k_n.
inline bool satisfies_constraints(const Matrix& mh, index_t k_m, index_t k_n, double tol) {
    const auto r = check_constraints(mh, k_m, k_n);
    const double total = double(k_m) * double(k_n);
    return r.box_violation <= tol && r.nuclear_excess <= tol * std::sqrt(total) && r.hyperplane_error <= tol * total;
}

/// Supports from the top singular pair of M_hat: entries above zero_tol * max.
inline LocalizationResult extract_support(const RelaxationSolution& sol, double zero_tol = 0.1) {
    if (!(zero_tol > 0.0 && zero_tol < 1.0)) throw std::domain_error("extract_support: zero_tol must be in (0,1)");
    const Matrix& mh = sol.M_hat;
    LocalizationResult out;
    out.diagnostics["converged"] = sol.converged ? 1.0 : 0.0;
    out.diagnostics["iterations"] = sol.iterations;
    out.diagnostics["objective"] = sol.objective;
    const double scale = mh.cwiseAbs().maxCoeff();
    if (!(scale > 1e-12)) {
        out.diagnostics["degenerate"] = 1.0;
        out.blocks.push_back({});
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(mh, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector u = svd.matrixU().col(0).cwiseAbs();
    const Vector v = svd.matrixV().col(0).cwiseAbs();
    LocalizationResult::Support blk;
    const double tu = zero_tol * u.maxCoeff(), tv = zero_tol * v.maxCoeff();
    for (index_t i = 0; i < u.size(); ++i)
        if (u(i) > tu) blk.rows.push_back(i);
    for (index_t j = 0; j < v.size(); ++j)
        if (v(j) > tv) blk.cols.push_back(j);
    out.diagnostics["degenerate"] = 0.0;
    out.diagnostics["top_singular_value"] = svd.singularValues()(0);
    out.blocks.push_back(std::move(blk));
    return out;
}

/// Relaxation followed by support extraction.
inline LocalizationResult localize_convex(const Observation& obs, index_t k_m, index_t k_n,
                                          const RelaxationOptions& opt = {}, double zero_tol = 0.1) {
    return extract_support(solve_relaxation(obs, k_m, k_n, opt), zero_tol);
}

}  // namespace subloc
