#pragma once

// Submatrix model X = M + Z: planted signal, noise families, instance
// generation and the threshold formulas for the statistical and computational
// boundaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subloc/errors.hpp"
#include "subloc/rng.hpp"

namespace subloc {

using index_t = std::int64_t;
using IndexSet = std::vector<index_t>;  // sorted ascending, 0-based
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One planted block lambda * 1_R 1_C^T.
struct Block {
    IndexSet rows;
    IndexSet cols;
    double lambda = 1.0;

    friend bool operator==(const Block&, const Block&) = default;
};

/// Ground truth M = sum_s lambda_s 1_{R_s} 1_{C_s}^T on an m x n grid.
struct PlantedSignal {
    index_t m = 0;
    index_t n = 0;
    std::vector<Block> blocks;

    friend bool operator==(const PlantedSignal&, const PlantedSignal&) = default;

    /// Throws validation_error unless every block is non-empty, sorted,
    /// in range, and row- and column-disjoint from every other block.
    void validate() const {
        if (m <= 0 || n <= 0) throw validation_error("signal dimensions must be positive");
        std::vector<char> row_used(static_cast<std::size_t>(m), 0);
        std::vector<char> col_used(static_cast<std::size_t>(n), 0);
        auto check_axis = [](const IndexSet& idx, index_t bound, std::vector<char>& used, const char* axis) {
            if (idx.empty()) throw validation_error(std::string("empty ") + axis + " set in block");
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (idx[i] < 0 || idx[i] >= bound)
                    throw validation_error(std::string(axis) + " index " + std::to_string(idx[i]) + " out of range");
                if (i > 0 && idx[i] <= idx[i - 1])
                    throw validation_error(std::string(axis) + " indices must be strictly increasing");
                auto& flag = used[static_cast<std::size_t>(idx[i])];
                if (flag) throw validation_error(std::string("overlapping blocks on ") + axis + " " + std::to_string(idx[i]));
                flag = 1;
            }
        };
        for (const auto& b : blocks) {
            if (!(b.lambda > 0.0) || !std::isfinite(b.lambda)) throw validation_error("block magnitude must be finite and > 0");
            check_axis(b.rows, m, row_used, "row");
            check_axis(b.cols, n, col_used, "column");
        }
    }

    /// The noiseless mean matrix M.
    Matrix mean_matrix() const {
        Matrix mean = Matrix::Zero(m, n);
        for (const auto& b : blocks)
            for (index_t j : b.cols)
                for (index_t i : b.rows) mean(i, j) = b.lambda;
        return mean;
    }
};

enum class NoiseFamily { Gaussian, Rademacher, UniformSymmetric };

inline std::string to_string(NoiseFamily f) {
    switch (f) {
        case NoiseFamily::Gaussian: return "Gaussian";
        case NoiseFamily::Rademacher: return "Rademacher";
        case NoiseFamily::UniformSymmetric: return "UniformSymmetric";
    }
    return "?";
}

inline NoiseFamily noise_family_from_string(const std::string& s) {
    if (s == "Gaussian" || s == "gaussian") return NoiseFamily::Gaussian;
    if (s == "Rademacher" || s == "rademacher") return NoiseFamily::Rademacher;
    if (s == "UniformSymmetric" || s == "uniform") return NoiseFamily::UniformSymmetric;
    throw validation_error("unknown noise family '" + s + "'");
}

/// I.i.d. zero-mean noise with entry standard deviation sigma.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Gaussian;
    double sigma = 1.0;

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// The observed matrix X. Indexing is (row, column).
struct Observation {
    Matrix data;

    index_t m() const { return data.rows(); }
    index_t n() const { return data.cols(); }
};

/// Estimated supports plus named diagnostics.
struct LocalizationResult {
    struct Support {
        IndexSet rows;
        IndexSet cols;
        friend bool operator==(const Support&, const Support&) = default;
    };
    std::vector<Support> blocks;
    std::map<std::string, double> diagnostics;

    bool flagged(const std::string& key) const {
        auto it = diagnostics.find(key);
        return it != diagnostics.end() && it->second != 0.0;
    }
};

/// Exact recovery: every planted block appears among the estimates as an
/// identical (rows, cols) pair, and there are no extra estimates.
inline bool supports_match(const LocalizationResult& est, const PlantedSignal& truth) {
    if (est.blocks.size() != truth.blocks.size()) return false;
    std::vector<char> used(est.blocks.size(), 0);
    for (const auto& b : truth.blocks) {
        bool found = false;
        for (std::size_t e = 0; e < est.blocks.size() && !found; ++e) {
            if (!used[e] && est.blocks[e].rows == b.rows && est.blocks[e].cols == b.cols) {
                used[e] = 1;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

/// Jaccard overlap of the cell sets covered by the estimated and planted blocks.
inline double support_jaccard(const LocalizationResult& est, const PlantedSignal& truth) {
    auto overlap = [](const IndexSet& a, const IndexSet& b) {
        std::size_t i = 0, j = 0, c = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] < b[j]) ++i;
            else if (b[j] < a[i]) ++j;
            else { ++c; ++i; ++j; }
        }
        return static_cast<double>(c);
    };
    double est_cells = 0.0, true_cells = 0.0, common = 0.0;
    for (const auto& e : est.blocks) est_cells += double(e.rows.size()) * double(e.cols.size());
    for (const auto& t : truth.blocks) true_cells += double(t.rows.size()) * double(t.cols.size());
    for (const auto& e : est.blocks)
        for (const auto& t : truth.blocks) common += overlap(e.rows, t.rows) * overlap(e.cols, t.cols);
    const double uni = est_cells + true_cells - common;
    return uni > 0.0 ? common / uni : 1.0;
}

struct Instance {
    Observation observation;
    PlantedSignal signal;
};

/// Pure noise of shape m x n, drawn in row-major order from `seed`.
inline Matrix sample_noise(index_t m, index_t n, const NoiseSpec& noise, std::uint64_t seed) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) throw validation_error("noise sigma must be finite and >= 0");
    Matrix z(m, n);
    Rng rng(seed);
    const double s = noise.sigma;
    const double half_width = s * std::sqrt(3.0);
    for (index_t i = 0; i < m; ++i) {
        for (index_t j = 0; j < n; ++j) {
            double v = 0.0;
            switch (noise.family) {
                case NoiseFamily::Gaussian: v = s * rng.normal(); break;
                case NoiseFamily::Rademacher: v = rng.coin() ? s : -s; break;
                case NoiseFamily::UniformSymmetric: v = half_width * (2.0 * rng.uniform() - 1.0); break;
            }
            z(i, j) = v;
        }
    }
    return z;
}

/// X = M + Z. Identical (signal, noise, seed) triples give bit-identical X.
inline Instance generate_instance(const PlantedSignal& signal, const NoiseSpec& noise, std::uint64_t seed) {
    signal.validate();
    Matrix x = signal.mean_matrix();
    x += sample_noise(signal.m, signal.n, noise, seed);
    return Instance{Observation{std::move(x)}, signal};
}

/// r disjoint uniformly random k_m x k_n supports, all with magnitude lambda.
inline PlantedSignal random_signal(index_t m, index_t n, index_t k_m, index_t k_n, index_t r, double lambda,
                                   std::uint64_t seed) {
    if (m <= 0 || n <= 0 || k_m <= 0 || k_n <= 0 || r <= 0)
        throw validation_error("random_signal: dimensions, sizes and r must be positive");
    if (r * k_m > m || r * k_n > n) throw validation_error("random_signal: r*k exceeds the matrix dimension");
    Rng rng(seed);
    auto draw = [&](index_t total) {
        std::vector<index_t> perm(static_cast<std::size_t>(total));
        std::iota(perm.begin(), perm.end(), index_t{0});
        rng.shuffle(perm);
        return perm;
    };
    const auto row_perm = draw(m);
    const auto col_perm = draw(n);
    PlantedSignal sig{m, n, {}};
    for (index_t s = 0; s < r; ++s) {
        Block b;
        b.rows.assign(row_perm.begin() + s * k_m, row_perm.begin() + (s + 1) * k_m);
        b.cols.assign(col_perm.begin() + s * k_n, col_perm.begin() + (s + 1) * k_n);
        std::sort(b.rows.begin(), b.rows.end());
        std::sort(b.cols.begin(), b.cols.end());
        b.lambda = lambda;
        sig.blocks.push_back(std::move(b));
    }
    return sig;
}

struct SnrThresholds {
    double snr_s;         // statistical boundary
    double snr_c_dense;   // computational boundary, dense regime
    double snr_c_sparse;  // computational upper rate, sparse regime
};

/// Boundary rates with unit constants and natural logarithms.
inline SnrThresholds snr_thresholds(double m, double n, double k_m, double k_n) {
    if (!(m >= 2 && n >= 2)) throw std::domain_error("snr_thresholds: m and n must be >= 2");
    if (!(k_m >= 1 && k_m <= m && k_n >= 1 && k_n <= n))
        throw std::domain_error("snr_thresholds: need 1 <= k_m <= m and 1 <= k_n <= n");
    const double big = std::max(m, n);
    const double snr_s = std::sqrt(std::max(std::log(n) / k_m, std::log(m) / k_n));
    const double dense = std::sqrt(big / (k_m * k_n)) + snr_s;
    const double sparse = std::sqrt(std::max(0.0, std::log(big / (k_m * k_n))));
    return {snr_s, dense, sparse};
}

}  // namespace subloc
