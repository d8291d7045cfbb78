#pragma once

// Hidden-clique machinery: instance generation, the bootstrap transform that
// turns a clique instance into a submatrix instance, block averaging for
// detection, and the degree-based clean-up that finishes clique recovery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subloc/localize.hpp"
#include "subloc/model.hpp"
#include "subloc/rng.hpp"

namespace subloc {

enum class CliqueMode { Fixed, Bernoulli };

inline std::string to_string(CliqueMode m) { return m == CliqueMode::Fixed ? "fixed" : "bernoulli"; }

inline CliqueMode clique_mode_from_string(const std::string& s) {
    if (s == "fixed" || s == "Fixed") return CliqueMode::Fixed;
    if (s == "bernoulli" || s == "Bernoulli") return CliqueMode::Bernoulli;
    throw validation_error("unknown clique mode '" + s + "'");
}

using Adjacency = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct CliqueInstance {
    index_t N = 0;
    Adjacency adjacency;  // symmetric, entries +-1, unit diagonal
    IndexSet clique;
    CliqueMode mode = CliqueMode::Bernoulli;
    double kappa = 0.0;
};

/// Clique membership only. Fixed: kappa nodes uniformly at random.
/// Bernoulli: each node independently with probability kappa / N.
inline IndexSet sample_clique_nodes(index_t N, double kappa, CliqueMode mode, Rng& rng) {
    IndexSet nodes;
    if (mode == CliqueMode::Fixed) {
        const auto k = static_cast<index_t>(kappa);
        IndexSet perm(static_cast<std::size_t>(N));
        std::iota(perm.begin(), perm.end(), index_t{0});
        for (index_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<index_t>(rng.uniform_index(static_cast<std::uint64_t>(N - i)));
            std::swap(perm[i], perm[j]);
        }
        nodes.assign(perm.begin(), perm.begin() + k);
        std::sort(nodes.begin(), nodes.end());
    } else {
        const double p = kappa / double(N);
        for (index_t i = 0; i < N; ++i)
            if (rng.uniform() < p) nodes.push_back(i);
    }
    return nodes;
}

inline void check_clique_args(index_t N, double kappa, CliqueMode mode) {
    if (N < 1) throw std::domain_error("generate_clique: N must be >= 1");
    if (!(kappa >= 1.0) || kappa > double(N)) throw std::domain_error("generate_clique: need 1 <= kappa <= N");
    if (mode == CliqueMode::Fixed && kappa != std::floor(kappa))
        throw std::domain_error("generate_clique: fixed mode needs an integer kappa");
}

inline IndexSet sample_clique_nodes(index_t N, double kappa, CliqueMode mode, std::uint64_t seed) {
    check_clique_args(N, kappa, mode);
    Rng rng(seed);
    return sample_clique_nodes(N, kappa, mode, rng);
}

/// Planted clique on N nodes. Off-clique edges are independent fair +-1.
inline CliqueInstance generate_clique(index_t N, double kappa, CliqueMode mode, std::uint64_t seed) {
    check_clique_args(N, kappa, mode);
    Rng rng(seed);
    CliqueInstance g;
    g.N = N;
    g.mode = mode;
    g.kappa = kappa;
    g.clique = sample_clique_nodes(N, kappa, mode, rng);
    g.adjacency.resize(N, N);
    std::uint64_t bits = 0;
    int left = 0;
    for (index_t i = 0; i < N; ++i) {
        g.adjacency(i, i) = 1;
        for (index_t j = i + 1; j < N; ++j) {
            if (left == 0) {
                bits = rng.next_u64();
                left = 64;
            }
            const std::int8_t e = (bits & 1) ? 1 : -1;
            bits >>= 1;
            --left;
            g.adjacency(i, j) = e;
            g.adjacency(j, i) = e;
        }
    }
    for (index_t a : g.clique)
        for (index_t b : g.clique) g.adjacency(a, b) = 1;
    return g;
}

struct BootstrapResult {
    Observation observation;  // n x n average
    IndexSet candidate_rows;  // R_l
    IndexSet candidate_cols;  // C_l
    IndexSet clique_rows;     // clique nodes in [0, n)
    IndexSet clique_cols;     // clique nodes in [n, 2n), shifted to [0, n)
    std::vector<IndexSet> psi;  // l row maps, psi[0] = identity
    std::vector<IndexSet> phi;  // l column maps, phi[0] = identity
};

namespace detail {

inline IndexSet bootstrap_candidates(const std::vector<IndexSet>& maps, const IndexSet& hits, index_t n) {
    std::vector<char> is_hit(static_cast<std::size_t>(n), 0);
    for (index_t h : hits) is_hit[static_cast<std::size_t>(h)] = 1;
    IndexSet out;
    for (index_t i = 0; i < n; ++i) {
        for (const auto& map : maps) {
            if (is_hit[static_cast<std::size_t>(map[i])]) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

}  // namespace detail

/// M_ij = (1/l) sum_{s,t < l} G_UR[psi_s(i), phi_t(j)] on the upper-right
/// n x n block of a 2n-node graph.
inline BootstrapResult bootstrap_transform(const CliqueInstance& g, index_t l, std::uint64_t seed) {
    if (l < 1) throw std::domain_error("bootstrap_transform: l must be >= 1");
    if (g.N < 2 || g.N % 2 != 0) throw std::domain_error("bootstrap_transform: node count must be even");
    const index_t n = g.N / 2;
    BootstrapResult out;
    Rng rng(seed);
    IndexSet identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), index_t{0});
    auto draw_maps = [&](std::vector<IndexSet>& maps) {
        maps.assign(1, identity);
        for (index_t s = 1; s < l; ++s) {
            IndexSet map(static_cast<std::size_t>(n));
            for (auto& v : map) v = static_cast<index_t>(rng.uniform_index(static_cast<std::uint64_t>(n)));
            maps.push_back(std::move(map));
        }
    };
    draw_maps(out.psi);
    draw_maps(out.phi);

    // H(i, j') = sum_s G_UR[psi_s(i), j'], then M(i, j) = sum_t H(i, phi_t(j)) / l
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> h = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    for (index_t j = 0; j < n; ++j)
        for (const auto& psi : out.psi)
            for (index_t i = 0; i < n; ++i) h(i, j) += g.adjacency(psi[i], n + j);
    Matrix m(n, n);
    for (index_t j = 0; j < n; ++j) {
        for (index_t i = 0; i < n; ++i) {
            std::int32_t acc = 0;
            for (const auto& phi : out.phi) acc += h(i, phi[j]);
            m(i, j) = double(acc) / double(l);
        }
    }
    out.observation.data = std::move(m);

    for (index_t c : g.clique) (c < n ? out.clique_rows : out.clique_cols).push_back(c < n ? c : c - n);
    out.candidate_rows = detail::bootstrap_candidates(out.psi, out.clique_rows, n);
    out.candidate_cols = detail::bootstrap_candidates(out.phi, out.clique_cols, n);
    return out;
}

struct BlockTransformResult {
    Observation observation;  // n x n
    index_t width = 1;        // w = round(n^beta)
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> block_sums;  // before division by w
    IndexSet signal_rows;     // row blocks holding >= 1 clique node
    IndexSet signal_cols;     // column blocks holding >= 1 clique node
};

inline index_t block_width(index_t n, double beta) {
    return static_cast<index_t>(std::llround(std::pow(double(n), beta)));
}

/// M_st = (1/w) * sum of G_UR over the w x w block (s, t). The graph must
/// have 2 n w nodes.
inline BlockTransformResult block_transform(const CliqueInstance& g, index_t n, double beta) {
    if (n < 1 || !(beta >= 0.0)) throw std::domain_error("block_transform: need n >= 1 and beta >= 0");
    const index_t w = block_width(n, beta);
    if (w < 1) throw std::domain_error("block_transform: block width must be >= 1");
    const index_t half = n * w;
    if (g.N != 2 * half)
        throw std::domain_error("block_transform: graph has " + std::to_string(g.N) + " nodes, need " +
                                std::to_string(2 * half));
    BlockTransformResult out;
    out.width = w;
    out.block_sums.setZero(n, n);
    for (index_t j = 0; j < half; ++j)
        for (index_t i = 0; i < half; ++i) out.block_sums(i / w, j / w) += g.adjacency(i, half + j);
    out.observation.data = out.block_sums.cast<double>() / double(w);
    for (index_t c : g.clique) {
        IndexSet& target = c < half ? out.signal_rows : out.signal_cols;
        const index_t b = (c < half ? c : c - half) / w;
        if (target.empty() || target.back() != b) target.push_back(b);
    }
    return out;
}

struct CleanupOptions {
    /// When set, keep nodes with score >= kappa - C/2 * sqrt(k log N) instead
    /// of splitting at the largest gap.
    std::optional<double> threshold_c;
    double kappa = 0.0;
};

struct CleanupResult {
    IndexSet nodes;
    bool degenerate = false;
    std::vector<double> scores;
};

/// Within-candidate degree scores s_i = sum_{j in S, j != i} G_ij; keep the
/// high cluster. Equal scores return the whole candidate set, flagged.
inline CleanupResult clique_cleanup(const CliqueInstance& g, const IndexSet& candidate, const CleanupOptions& opt = {}) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (candidate[i] < 0 || candidate[i] >= g.N) throw std::domain_error("clique_cleanup: node out of range");
        if (i > 0 && candidate[i] <= candidate[i - 1]) throw std::domain_error("clique_cleanup: candidate must be sorted");
    }
    CleanupResult out;
    const std::size_t k = candidate.size();
    out.scores.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        std::int64_t s = 0;
        for (std::size_t b = 0; b < k; ++b)
            if (a != b) s += g.adjacency(candidate[a], candidate[b]);
        out.scores[a] = double(s);
    }
    if (k == 0) return out;
    if (opt.threshold_c) {
        const double cut = opt.kappa - *opt.threshold_c / 2.0 * std::sqrt(double(k) * std::log(double(g.N)));
        for (std::size_t a = 0; a < k; ++a)
            if (out.scores[a] >= cut) out.nodes.push_back(candidate[a]);
        return out;
    }
    const Split1d sp = split_1d(std::span<const double>(out.scores));
    if (sp.degenerate) {
        out.degenerate = true;
        out.nodes = candidate;
        return out;
    }
    auto mean = [&](const IndexSet& idx) {
        double t = 0.0;
        for (index_t i : idx) t += out.scores[static_cast<std::size_t>(i)];
        return t / double(idx.size());
    };
    const IndexSet& high = mean(sp.inside) >= mean(sp.outside) ? sp.inside : sp.outside;
    for (index_t i : high) out.nodes.push_back(candidate[static_cast<std::size_t>(i)]);
    return out;
}

enum class ReductionLocalizer { Spectral, Denoised, Multi };

inline ReductionLocalizer reduction_localizer_from_string(const std::string& s) {
    if (s == "spectral") return ReductionLocalizer::Spectral;
    if (s == "denoised") return ReductionLocalizer::Denoised;
    if (s == "multi") return ReductionLocalizer::Multi;
    throw validation_error("localizer '" + s + "' is not usable in the clique reduction (use spectral, denoised or multi)");
}

struct ReductionOutcome {
    IndexSet recovered;
    IndexSet clique;
    bool success = false;
    std::string failure;  // empty on success
    std::map<std::string, double> diagnostics;
};

/// generate_clique (2N nodes, Bernoulli kappa/N) -> bootstrap_transform ->
/// localizer on M -> map row/column estimates back through all psi/phi ->
/// clique_cleanup. Success iff the recovered set equals the clique.
inline ReductionOutcome end_to_end_reduction(index_t N, double kappa, index_t l, ReductionLocalizer localizer,
                                             std::uint64_t seed) {
    if (N < 2) throw std::domain_error("end_to_end_reduction: N must be >= 2");
    if (!(kappa >= 1.0) || kappa > double(N)) throw std::domain_error("end_to_end_reduction: need 1 <= kappa <= N");
    if (l < 1) throw std::domain_error("end_to_end_reduction: l must be >= 1");

    const index_t total = 2 * N;
    // kappa/N per node on 2N nodes: about kappa clique nodes on each side
    const CliqueInstance g = generate_clique(total, 2.0 * kappa, CliqueMode::Bernoulli, derive_seed(seed, {0}));
    const BootstrapResult boot = bootstrap_transform(g, l, derive_seed(seed, {1}));

    ReductionOutcome out;
    out.clique = g.clique;
    out.diagnostics["clique_size"] = double(g.clique.size());
    out.diagnostics["candidate_rows"] = double(boot.candidate_rows.size());
    out.diagnostics["candidate_cols"] = double(boot.candidate_cols.size());

    LocalizationResult loc;
    switch (localizer) {
        case ReductionLocalizer::Spectral: loc = localize_spectral(boot.observation); break;
        case ReductionLocalizer::Denoised: {
            const double sigma = mad_sigma(boot.observation.data);
            out.diagnostics["sigma_hat"] = sigma;
            if (!(sigma > 0.0)) {
                out.failure = "zero noise estimate";
                return out;
            }
            loc = localize_denoised(boot.observation, sigma);
            break;
        }
        case ReductionLocalizer::Multi: {
            MultiOptions mo;
            mo.seed = derive_seed(seed, {2});
            loc = localize_multi(boot.observation, 1, mo);
            break;
        }
    }
    if (loc.flagged("degenerate") || loc.blocks.empty()) {
        out.failure = "localizer degenerate";
        return out;
    }
    std::vector<char> in_candidate(static_cast<std::size_t>(total), 0);
    for (index_t i : loc.blocks[0].rows)
        for (const auto& psi : boot.psi) in_candidate[static_cast<std::size_t>(psi[i])] = 1;
    for (index_t j : loc.blocks[0].cols)
        for (const auto& phi : boot.phi) in_candidate[static_cast<std::size_t>(N + phi[j])] = 1;
    IndexSet candidate;
    for (index_t v = 0; v < total; ++v)
        if (in_candidate[static_cast<std::size_t>(v)]) candidate.push_back(v);
    out.diagnostics["candidate_size"] = double(candidate.size());

    const CleanupResult clean = clique_cleanup(g, candidate);
    out.diagnostics["cleanup_degenerate"] = clean.degenerate ? 1.0 : 0.0;
    out.recovered = clean.nodes;
    out.success = out.recovered == out.clique;
    if (!out.success) out.failure = "recovered set differs from clique";
    return out;
}

}  // namespace subloc
