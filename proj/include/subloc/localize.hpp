#pragma once

// Polynomial-time localizers: rank-one spectral projection, its soft-threshold
// de-noised variant for sparse blocks, and the rank-r k-means variant for
// several disjoint blocks. Also the building blocks they share (max-gap 1-D
// split, k-means, MAD noise estimate).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "subloc/linalg.hpp"
#include "subloc/model.hpp"
#include "subloc/rng.hpp"

namespace subloc {

enum class Axis { Rows, Columns };

/// Projection scores along one axis: U_1^T X_{.j} for columns, X_{i.} V_1 for rows.
struct ScoreVector {
    Vector values;
    Axis axis = Axis::Rows;
};

struct Split1d {
    IndexSet inside;
    IndexSet outside;
    double gap = 0.0;
    bool degenerate = false;
};

/// Cut the sorted scores at their widest consecutive gap.
///
/// The inside set is the side with the larger mean absolute score. When
/// several cuts share the widest gap, the one with the smaller inside set
/// wins (then the lowest cut). All-equal scores give a degenerate split with
/// everything outside.
inline Split1d split_1d(std::span<const double> scores) {
    const std::size_t p = scores.size();
    if (p < 2) throw std::domain_error("split_1d: need at least two scores");
    std::vector<index_t> order(p);
    std::iota(order.begin(), order.end(), index_t{0});
    std::stable_sort(order.begin(), order.end(), [&](index_t a, index_t b) { return scores[a] < scores[b]; });

    double widest = 0.0;
    for (std::size_t q = 0; q + 1 < p; ++q) widest = std::max(widest, scores[order[q + 1]] - scores[order[q]]);

    Split1d out;
    if (!(widest > 0.0)) {
        out.degenerate = true;
        out.outside.assign(order.begin(), order.end());
        std::sort(out.outside.begin(), out.outside.end());
        return out;
    }

    // prefix sums of |score| in sorted order
    std::vector<double> abs_prefix(p + 1, 0.0);
    for (std::size_t q = 0; q < p; ++q) abs_prefix[q + 1] = abs_prefix[q] + std::abs(scores[order[q]]);

    std::size_t best_cut = p;  // low side = order[0..cut]
    bool best_high_inside = true;
    std::size_t best_inside_size = p + 1;
    for (std::size_t q = 0; q + 1 < p; ++q) {
        if (scores[order[q + 1]] - scores[order[q]] != widest) continue;
        const std::size_t low_n = q + 1;
        const std::size_t high_n = p - low_n;
        const double low_mean = abs_prefix[low_n] / double(low_n);
        const double high_mean = (abs_prefix[p] - abs_prefix[low_n]) / double(high_n);
        bool high_inside;
        if (high_mean != low_mean) {
            high_inside = high_mean > low_mean;
        } else {
            high_inside = high_n <= low_n;
        }
        const std::size_t inside_size = high_inside ? high_n : low_n;
        if (inside_size < best_inside_size) {
            best_inside_size = inside_size;
            best_cut = q;
            best_high_inside = high_inside;
        }
    }
    out.gap = widest;
    IndexSet low(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_cut + 1));
    IndexSet high(order.begin() + static_cast<std::ptrdiff_t>(best_cut + 1), order.end());
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    if (best_high_inside) {
        out.inside = std::move(high);
        out.outside = std::move(low);
    } else {
        out.inside = std::move(low);
        out.outside = std::move(high);
    }
    return out;
}

inline Split1d split_1d(const ScoreVector& scores) {
    return split_1d(std::span<const double>(scores.values.data(), static_cast<std::size_t>(scores.values.size())));
}

/// sign(y) * max(|y| - t, 0).
inline double soft_threshold(double y, double t) {
    if (y > t) return y - t;
    if (y < -t) return y + t;
    return 0.0;
}

/// Entrywise soft threshold; the input is left untouched.
inline Matrix soft_threshold(const Matrix& x, double t) {
    if (!(t >= 0.0)) throw std::domain_error("soft_threshold: t must be >= 0");
    return x.unaryExpr([t](double y) { return soft_threshold(y, t); });
}

/// 1.4826 * median |X_ij - median X|, with the lower-middle order statistic
/// as the median of an even count.
inline double mad_sigma(const Matrix& x) {
    const std::size_t count = static_cast<std::size_t>(x.size());
    if (count < 2) throw std::domain_error("mad_sigma: need at least two entries");
    std::vector<double> v(x.data(), x.data() + count);
    const std::size_t mid = (count - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double med = v[mid];
    for (double& e : v) e = std::abs(e - med);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return 1.4826 * v[mid];
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
    int restarts = 10;
    int max_iter = 100;
};

struct KMeansResult {
    std::vector<index_t> assignments;  // label per point, in [0, k)
    Matrix centers;                    // k x d
    double inertia = 0.0;
    std::vector<double> trace;          // inertia after each assignment step of the winning run
    std::vector<double> restart_inertia;  // final inertia of every restart
    bool converged = false;
};

namespace detail {

inline double sq_dist(const Matrix& pts, index_t i, const Matrix& centers, index_t c) {
    return (pts.row(i) - centers.row(c)).squaredNorm();
}

inline KMeansResult lloyd_once(const Matrix& pts, index_t k, Rng& rng, int max_iter) {
    const index_t p = pts.rows();
    const index_t d = pts.cols();
    Matrix centers(k, d);

    // k-means++ seeding
    std::vector<double> dist(static_cast<std::size_t>(p), std::numeric_limits<double>::infinity());
    std::vector<char> chosen(static_cast<std::size_t>(p), 0);
    index_t first = static_cast<index_t>(rng.uniform_index(static_cast<std::uint64_t>(p)));
    centers.row(0) = pts.row(first);
    chosen[static_cast<std::size_t>(first)] = 1;
    for (index_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (index_t i = 0; i < p; ++i) {
            dist[i] = std::min(dist[i], sq_dist(pts, i, centers, c - 1));
            total += dist[i];
        }
        index_t pick = -1;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (index_t i = 0; i < p; ++i) {
                if (dist[i] <= 0.0) continue;
                pick = i;
                target -= dist[i];
                if (target < 0.0) break;
            }
        } else {
            // every point coincides with a center; take an unused point
            std::vector<index_t> free;
            for (index_t i = 0; i < p; ++i)
                if (!chosen[i]) free.push_back(i);
            pick = free[rng.uniform_index(free.size())];
        }
        centers.row(c) = pts.row(pick);
        chosen[static_cast<std::size_t>(pick)] = 1;
    }

    KMeansResult res;
    res.assignments.assign(static_cast<std::size_t>(p), -1);
    std::vector<double> point_cost(static_cast<std::size_t>(p), 0.0);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        double inertia = 0.0;
        for (index_t i = 0; i < p; ++i) {
            index_t best = 0;
            double best_d = sq_dist(pts, i, centers, 0);
            for (index_t c = 1; c < k; ++c) {
                const double dd = sq_dist(pts, i, centers, c);
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (res.assignments[i] != best) {
                res.assignments[i] = best;
                changed = true;
            }
            point_cost[i] = best_d;
            inertia += best_d;
        }
        res.trace.push_back(inertia);
        if (!changed) {
            res.converged = true;
            break;
        }

        Matrix sums = Matrix::Zero(k, d);
        std::vector<index_t> counts(static_cast<std::size_t>(k), 0);
        for (index_t i = 0; i < p; ++i) {
            sums.row(res.assignments[i]) += pts.row(i);
            ++counts[res.assignments[i]];
        }
        for (index_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) = sums.row(c) / double(counts[c]);
                continue;
            }
            // empty cluster: move it onto the point farthest from its center
            index_t far = 0;
            for (index_t i = 1; i < p; ++i)
                if (point_cost[i] > point_cost[far]) far = i;
            centers.row(c) = pts.row(far);
            point_cost[far] = 0.0;
        }
    }
    res.centers = std::move(centers);
    res.inertia = res.trace.back();
    return res;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the best of `restarts` runs.
/// Points are the rows of `points`.
inline KMeansResult kmeans(const Matrix& points, index_t k, std::uint64_t seed, const KMeansOptions& opt = {}) {
    const index_t p = points.rows();
    if (k < 1 || k > p) throw std::domain_error("kmeans: need 1 <= k <= number of points");
    if (opt.restarts < 1 || opt.max_iter < 1) throw std::domain_error("kmeans: restarts and max_iter must be >= 1");
    std::optional<KMeansResult> best;
    std::vector<double> finals;
    for (int r = 0; r < opt.restarts; ++r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        KMeansResult run = detail::lloyd_once(points, k, rng, opt.max_iter);
        finals.push_back(run.inertia);
        if (!best || run.inertia < best->inertia) best = std::move(run);
    }
    best->restart_inertia = std::move(finals);
    return std::move(*best);
}

// ---------------------------------------------------------------------------
// Localizers

struct SpectralOptions {
    SvdOptions svd;
    /// Sample-cloning variant for Gaussian noise: singular vectors from
    /// X + Z', scores from X - Z', with Z' ~ N(0, clone_sigma^2).
    bool clone = false;
    double clone_sigma = 1.0;
    std::uint64_t clone_seed = 0;
};

namespace detail {

inline LocalizationResult spectral_from(const Matrix& basis_source, const Matrix& score_source,
                                        const SpectralOptions& opt) {
    LocalizationResult out;
    const SvdFactors f = top_singular(basis_source, 1, opt.svd);
    out.diagnostics["svd_converged"] = f.converged ? 1.0 : 0.0;
    out.diagnostics["svd_iterations"] = f.iterations;
    out.diagnostics["top_singular_value"] = f.S(0);

    ScoreVector col_scores{score_source.transpose() * f.U.col(0), Axis::Columns};
    ScoreVector row_scores{score_source * f.V.col(0), Axis::Rows};
    const Split1d cols = split_1d(col_scores);
    const Split1d rows = split_1d(row_scores);
    out.diagnostics["row_gap"] = rows.gap;
    out.diagnostics["col_gap"] = cols.gap;
    if (rows.degenerate || cols.degenerate) {
        out.diagnostics["degenerate"] = 1.0;
        return out;
    }
    out.diagnostics["degenerate"] = 0.0;
    out.blocks.push_back({rows.inside, cols.inside});
    return out;
}

}  // namespace detail

/// Rank-one spectral projection localizer for a single dense block.
inline LocalizationResult localize_spectral(const Observation& obs, const SpectralOptions& opt = {}) {
    const Matrix& x = obs.data;
    if (x.rows() < 2 || x.cols() < 2) throw std::domain_error("localize_spectral: need m, n >= 2");
    if (!opt.clone) return detail::spectral_from(x, x, opt);
    if (!(opt.clone_sigma > 0.0)) throw std::domain_error("localize_spectral: clone_sigma must be > 0");
    const Matrix z = sample_noise(x.rows(), x.cols(), {NoiseFamily::Gaussian, opt.clone_sigma}, opt.clone_seed);
    auto res = detail::spectral_from(x + z, x - z, opt);
    res.diagnostics["clone"] = 1.0;
    return res;
}

struct DenoiseOptions {
    double t_mult = 1.0;
    /// Block sizes (k_m, k_n) when known; they sharpen the threshold.
    std::optional<std::pair<index_t, index_t>> sizes;
    SpectralOptions spectral;
};

/// Soft-threshold level for localize_denoised.
inline double denoise_threshold(index_t m, index_t n, double sigma, const DenoiseOptions& opt) {
    const double big = static_cast<double>(std::max(m, n));
    double arg = big;
    if (opt.sizes) arg = big / (static_cast<double>(opt.sizes->first) * static_cast<double>(opt.sizes->second));
    return opt.t_mult * sigma * std::sqrt(std::max(0.0, std::log(arg)));
}

/// Spectral projection on the soft-thresholded matrix eta_t(X).
inline LocalizationResult localize_denoised(const Observation& obs, double sigma, const DenoiseOptions& opt = {}) {
    if (!(sigma > 0.0)) throw std::domain_error("localize_denoised: sigma must be > 0");
    if (!(opt.t_mult > 0.0)) throw std::domain_error("localize_denoised: t_mult must be > 0");
    if (opt.sizes && (opt.sizes->first < 1 || opt.sizes->second < 1))
        throw std::domain_error("localize_denoised: block sizes must be positive");
    const double t = denoise_threshold(obs.m(), obs.n(), sigma, opt);
    auto res = localize_spectral(Observation{soft_threshold(obs.data, t)}, opt.spectral);
    res.diagnostics["threshold"] = t;
    return res;
}

struct MultiOptions {
    SvdOptions svd;
    KMeansOptions kmeans;
    std::uint64_t seed = 0;
};

/// Rank-r spectral localizer for r disjoint blocks.
///
/// Columns are projected onto span(U_r) and rows onto span(V_r); k-means with
/// r + 1 clusters runs on each set of projections (in the r-dimensional
/// coordinates, which preserves distances). The cluster whose center has the
/// smallest norm is background. Remaining row and column clusters are paired
/// greedily by the mean of X over their rectangle; blocks come out in
/// descending block-mean order.
inline LocalizationResult localize_multi(const Observation& obs, index_t r, const MultiOptions& opt = {}) {
    const Matrix& x = obs.data;
    if (r < 1) throw std::domain_error("localize_multi: r must be >= 1");
    if (r + 1 > std::min(x.rows(), x.cols())) throw std::domain_error("localize_multi: need r + 1 <= min(m, n)");

    LocalizationResult out;
    const SvdFactors f = top_singular(x, r, opt.svd);
    out.diagnostics["svd_converged"] = f.converged ? 1.0 : 0.0;
    out.diagnostics["svd_iterations"] = f.iterations;

    const Matrix col_points = x.transpose() * f.U;  // n x r, coordinates of U_r U_r^T X_{.j}
    const Matrix row_points = x * f.V;              // m x r, coordinates of V_r V_r^T X_{i.}^T
    const KMeansResult col_km = kmeans(col_points, r + 1, derive_seed(opt.seed, {0}), opt.kmeans);
    const KMeansResult row_km = kmeans(row_points, r + 1, derive_seed(opt.seed, {1}), opt.kmeans);
    out.diagnostics["kmeans_col_inertia"] = col_km.inertia;
    out.diagnostics["kmeans_row_inertia"] = row_km.inertia;

    auto groups = [&](const KMeansResult& km, index_t count) {
        index_t background = 0;
        km.centers.rowwise().norm().minCoeff(&background);
        std::vector<IndexSet> sets(static_cast<std::size_t>(r + 1));
        for (index_t i = 0; i < count; ++i) sets[km.assignments[i]].push_back(i);
        std::vector<IndexSet> fg;
        int empty = 0;
        for (index_t c = 0; c <= r; ++c) {
            if (c == background) continue;
            if (sets[c].empty()) ++empty;
            fg.push_back(std::move(sets[c]));
        }
        return std::pair{std::move(fg), empty};
    };
    auto [row_groups, row_empty] = groups(row_km, x.rows());
    auto [col_groups, col_empty] = groups(col_km, x.cols());
    if (row_empty + col_empty > 0) {
        out.diagnostics["degenerate"] = 1.0;
        out.diagnostics["empty_clusters"] = row_empty + col_empty;
        return out;
    }
    out.diagnostics["degenerate"] = 0.0;

    auto block_mean = [&](const IndexSet& rows, const IndexSet& cols) {
        double s = 0.0;
        for (index_t j : cols)
            for (index_t i : rows) s += x(i, j);
        return s / (double(rows.size()) * double(cols.size()));
    };
    std::vector<std::vector<double>> means(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r)));
    for (index_t a = 0; a < r; ++a)
        for (index_t b = 0; b < r; ++b) means[a][b] = block_mean(row_groups[a], col_groups[b]);

    std::vector<char> row_used(static_cast<std::size_t>(r), 0), col_used(static_cast<std::size_t>(r), 0);
    for (index_t s = 0; s < r; ++s) {
        index_t ba = -1, bb = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (index_t a = 0; a < r; ++a) {
            if (row_used[a]) continue;
            for (index_t b = 0; b < r; ++b) {
                if (col_used[b]) continue;
                if (means[a][b] > best) {
                    best = means[a][b];
                    ba = a;
                    bb = b;
                }
            }
        }
        row_used[ba] = col_used[bb] = 1;
        out.blocks.push_back({row_groups[ba], col_groups[bb]});
        out.diagnostics["block_mean_" + std::to_string(s)] = best;
    }
    return out;
}

}  // namespace subloc
