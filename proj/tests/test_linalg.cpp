#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles/jacobi_svd.hpp"
#include "subloc/linalg.hpp"

using namespace subloc;

namespace {

Matrix gaussian(index_t m, index_t n, std::uint64_t seed) { return sample_noise(m, n, {NoiseFamily::Gaussian, 1.0}, seed); }

std::vector<double> row_major(const Matrix& a) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(a.size()));
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j) out.push_back(a(i, j));
    return out;
}

double orthonormality_error(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(TopSingular, ExactRankOne) {
    Vector u = Vector::LinSpaced(7, 1.0, 7.0);
    Vector v = Vector::LinSpaced(5, -2.0, 2.0).array() + 0.3;
    u.normalize();
    v.normalize();
    const Matrix x = 5.0 * u * v.transpose();
    const auto f = top_singular(x, 1);
    ASSERT_TRUE(f.converged);
    EXPECT_NEAR(f.S(0), 5.0, 1e-10);
    EXPECT_LE((f.U.col(0) - u).norm(), 1e-8);  // largest entry of u is positive
    EXPECT_LE((f.V.col(0) - v).norm(), 1e-8);
}

TEST(TopSingular, ZeroMatrix) {
    const Matrix x = Matrix::Zero(6, 4);
    const auto f = top_singular(x, 1);
    EXPECT_TRUE(f.converged);
    EXPECT_EQ(f.S(0), 0.0);
    EXPECT_EQ((x * f.V).norm(), 0.0);
    EXPECT_LE(orthonormality_error(f.U), 1e-10);
    EXPECT_LE(orthonormality_error(f.V), 1e-10);
}

TEST(TopSingular, MatchesJacobiOracleSmall) {
    const Matrix x = gaussian(6, 5, 2024);
    const auto f = top_singular(x, 3);
    const auto ref = oracle::jacobi_singular_values(row_major(x), 6, 5);
    ASSERT_TRUE(f.converged);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(f.S(j), ref[j], 1e-8 * ref[j]);
}

TEST(TopSingular, RandomShapesAgainstOracle) {
    Rng pick(77);
    for (int trial = 0; trial < 60; ++trial) {
        const index_t m = 2 + static_cast<index_t>(pick.uniform_index(49));
        const index_t n = 2 + static_cast<index_t>(pick.uniform_index(49));
        const index_t r = 1 + static_cast<index_t>(pick.uniform_index(static_cast<std::uint64_t>(std::min(m, n))));
        const Matrix x = gaussian(m, n, 1000 + trial);
        const auto f = top_singular(x, r);
        const auto ref = oracle::jacobi_singular_values(row_major(x), static_cast<int>(m), static_cast<int>(n));
        ASSERT_TRUE(f.converged) << m << "x" << n << " r=" << r;
        for (index_t j = 0; j < r; ++j) EXPECT_NEAR(f.S(j), ref[j], 1e-8 * ref[0]);
        EXPECT_LE(orthonormality_error(f.U), 1e-10);
        EXPECT_LE(orthonormality_error(f.V), 1e-10);
        for (index_t j = 1; j < r; ++j) EXPECT_GE(f.S(j - 1), f.S(j));
        EXPECT_LE((x * f.V - f.U * f.S.asDiagonal()).norm(), 1e-7 * f.S(0) * std::sqrt(double(r)));
    }
}

TEST(TopSingular, SignConventionAndDeterminism) {
    const Matrix x = gaussian(20, 15, 5);
    const auto a = top_singular(x, 4);
    const auto b = top_singular(x, 4);
    EXPECT_EQ(a.U, b.U);
    for (index_t c = 0; c < 4; ++c) {
        index_t arg = 0;
        a.U.col(c).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(a.U(arg, c), 0.0);
    }
    // X V = U S holds with the flipped signs
    EXPECT_LE((x * a.V - a.U * a.S.asDiagonal()).norm(), 1e-6);
}

TEST(TopSingular, DomainErrors) {
    const Matrix x = gaussian(4, 3, 1);
    EXPECT_THROW(top_singular(x, 4), std::domain_error);
    EXPECT_THROW(top_singular(x, 0), std::domain_error);
    SvdOptions bad;
    bad.tol = 0.0;
    EXPECT_THROW(top_singular(x, 1, bad), std::domain_error);
}

TEST(TopSingular, ReportsNonConvergence) {
    const Matrix x = gaussian(80, 80, 3);
    SvdOptions opt;
    opt.max_iter = 2;
    opt.oversample = 0;
    const auto f = top_singular(x, 1, opt);
    EXPECT_FALSE(f.converged);
    EXPECT_EQ(f.iterations, 2);
    EXPECT_GT(f.residual, 0.0);
}

TEST(ProjectOnto, FirstBasisVector) {
    Matrix u(2, 1);
    u << 1.0, 0.0;
    Vector x(2);
    x << 3.0, 4.0;
    const Vector p = project_onto(u, x);
    EXPECT_DOUBLE_EQ(p(0), 3.0);
    EXPECT_DOUBLE_EQ(p(1), 0.0);
}

TEST(ProjectOnto, IdempotentOnSpan) {
    const Matrix u = detail::thin_q(gaussian(6, 3, 9));
    const Vector x = u * Vector::LinSpaced(3, -1.0, 2.0);
    EXPECT_LE((project_onto(u, x) - x).norm(), 1e-12);
    const Vector y = gaussian(6, 1, 10).col(0);
    const Vector py = project_onto(u, y);
    EXPECT_LE((project_onto(u, py) - py).norm(), 1e-12);
}

// Reference: U (U^T U)^{-1} U^T x through the explicit Gram inverse.
TEST(ProjectOnto, MatchesNormalEquations) {
    const Matrix u = detail::thin_q(gaussian(4, 2, 11));
    const Vector x = gaussian(4, 1, 12).col(0);
    const Matrix gram = u.transpose() * u;
    const Matrix gram_inv = gram.inverse();
    const Vector ref = u * (gram_inv * (u.transpose() * x));
    EXPECT_LE((project_onto(u, x) - ref).norm(), 1e-12);
}

TEST(ProjectOnto, DimensionMismatch) {
    EXPECT_THROW(project_onto(Matrix::Identity(3, 1), Vector::Zero(4)), std::invalid_argument);
}

TEST(SpectralNorm, SingleEntry) {
    Matrix x = Matrix::Zero(4, 3);
    x(2, 1) = 7.0;
    EXPECT_NEAR(spectral_norm(x), 7.0, 1e-12);
}

TEST(SpectralNorm, Identity) { EXPECT_NEAR(spectral_norm(Matrix::Identity(3, 3)), 1.0, 1e-12); }

TEST(SpectralNorm, ScalesWithConstant) {
    const Matrix x = gaussian(30, 20, 8);
    const double base = spectral_norm(x);
    for (double c : {-2.0, 0.5}) EXPECT_NEAR(spectral_norm(c * x), std::abs(c) * base, 1e-9 * std::abs(c) * base);
}

// Square Gaussian matrices have ||Z||_2 ~ 2 sigma sqrt(n).
TEST(SpectralNorm, GaussianEdge) {
    const double target = 2.0 * std::sqrt(200.0);
    double sum = 0.0;
    for (int s = 0; s < 100; ++s) sum += spectral_norm(gaussian(200, 200, 500 + s));
    const double mean = sum / 100.0;
    EXPECT_GE(mean, 0.9 * target);
    EXPECT_LE(mean, 1.1 * target);
}
