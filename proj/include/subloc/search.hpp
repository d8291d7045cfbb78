#pragma once

// Exhaustive maximum-sum submatrix search and its greedy multi-block form.
//
// For a fixed column subset J the best row subset is simply the k_m rows with
// the largest sums over J, so only one axis needs enumerating. The cheaper axis
// (smaller binomial coefficient) is enumerated and the other one is chosen by
// sorting; the result is the exact joint maximizer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <string>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "subloc/errors.hpp"
#include "subloc/model.hpp"

namespace subloc {

struct SearchBudget {
    std::uint64_t max_enumerations = 10'000'000;
};

struct SearchOptions {
    SearchBudget budget;
    unsigned threads = 1;  // enumeration chunks; the answer does not depend on it
};

/// C(n, k) as a double (exact below 2^53).
inline double binomial(index_t n, index_t k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (index_t i = 1; i <= k; ++i) c = c * double(n - k + i) / double(i);
    return std::round(c);
}

namespace detail {

struct Candidate {
    double sum = -std::numeric_limits<double>::infinity();
    IndexSet rows;
    IndexSet cols;
    bool valid = false;
};

// Larger sum wins; equal sums go to the lexicographically smaller (rows, cols).
inline bool better(const Candidate& a, const Candidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.sum != b.sum) return a.sum > b.sum;
    if (a.rows != b.rows) return a.rows < b.rows;
    return a.cols < b.cols;
}

// Lexicographic combination of `k` out of `p` with the given rank.
inline std::vector<index_t> unrank_combination(std::uint64_t rank, index_t p, index_t k) {
    std::vector<index_t> comb;
    comb.reserve(static_cast<std::size_t>(k));
    index_t next = 0;
    for (index_t slot = 0; slot < k; ++slot) {
        for (index_t v = next;; ++v) {
            const double count = binomial(p - v - 1, k - slot - 1);
            if (static_cast<double>(rank) < count) {
                comb.push_back(v);
                next = v + 1;
                break;
            }
            rank -= static_cast<std::uint64_t>(count);
        }
    }
    return comb;
}

inline bool next_combination(std::vector<index_t>& comb, index_t p) {
    const index_t k = static_cast<index_t>(comb.size());
    index_t i = k - 1;
    while (i >= 0 && comb[i] == p - k + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (index_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
    return true;
}

// Enumerate k_enum-subsets of the columns of `a` with ranks in [begin, end);
// pick k_sel rows of `a` by sorting. `a_is_transposed` says that rows of `a`
// are columns of X.
inline Candidate search_chunk(const Matrix& a, index_t k_sel, index_t k_enum, std::uint64_t begin, std::uint64_t end,
                              bool a_is_transposed) {
    const index_t p_sel = a.rows();
    const index_t p_enum = a.cols();
    Candidate best;
    if (begin >= end) return best;
    std::vector<index_t> comb = unrank_combination(begin, p_enum, k_enum);
    Vector sums(p_sel);
    std::vector<index_t> order(static_cast<std::size_t>(p_sel));
    Candidate cand;
    cand.valid = true;
    for (std::uint64_t rank = begin; rank < end; ++rank) {
        sums.setZero();
        for (index_t j : comb) sums += a.col(j);
        std::iota(order.begin(), order.end(), index_t{0});
        std::partial_sort(order.begin(), order.begin() + k_sel, order.end(), [&](index_t x, index_t y) {
            if (sums(x) != sums(y)) return sums(x) > sums(y);
            return x < y;
        });
        IndexSet picked(order.begin(), order.begin() + k_sel);
        std::sort(picked.begin(), picked.end());
        double total = 0.0;
        for (index_t i : picked) total += sums(i);
        cand.sum = total;
        if (a_is_transposed) {
            cand.rows.assign(comb.begin(), comb.end());
            cand.cols = std::move(picked);
        } else {
            cand.rows = std::move(picked);
            cand.cols.assign(comb.begin(), comb.end());
        }
        if (better(cand, best)) best = cand;
        if (rank + 1 < end) next_combination(comb, p_enum);
    }
    return best;
}

}  // namespace detail

/// Number of subset evaluations combinatorial_search performs.
inline double search_enumerations(index_t m, index_t n, index_t k_m, index_t k_n) {
    return std::min(binomial(m, k_m), binomial(n, k_n));
}

/// The k_m x k_n submatrix with the largest entry sum; ties go to the
/// lexicographically first (sorted rows, sorted cols).
inline LocalizationResult combinatorial_search(const Observation& obs, index_t k_m, index_t k_n,
                                               const SearchOptions& opt = {}) {
    const Matrix& x = obs.data;
    const index_t m = x.rows();
    const index_t n = x.cols();
    if (k_m < 1 || k_n < 1 || k_m > m || k_n > n) throw std::domain_error("combinatorial_search: need 1 <= k <= dimension");
    const double row_count = binomial(m, k_m);
    const double col_count = binomial(n, k_n);
    const double required = std::min(row_count, col_count);
    if (!(required <= static_cast<double>(opt.budget.max_enumerations)))
        throw budget_exceeded(required, opt.budget.max_enumerations);

    const bool enumerate_rows = row_count < col_count;
    const Matrix transposed = enumerate_rows ? Matrix(x.transpose()) : Matrix();
    const Matrix& a = enumerate_rows ? transposed : x;
    const index_t k_sel = enumerate_rows ? k_n : k_m;
    const index_t k_enum = enumerate_rows ? k_m : k_n;
    const std::uint64_t total = static_cast<std::uint64_t>(required);

    const unsigned chunks = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(std::min<std::uint64_t>(total, 1024))));
    std::vector<detail::Candidate> partial(chunks);
    auto run = [&](unsigned c) {
        const std::uint64_t b = total * c / chunks;
        const std::uint64_t e = total * (c + 1) / chunks;
        partial[c] = detail::search_chunk(a, k_sel, k_enum, b, e, enumerate_rows);
    };
    if (chunks == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned c = 0; c < chunks; ++c) pool.emplace_back(run, c);
        for (auto& t : pool) t.join();
    }
    detail::Candidate best;
    for (auto& c : partial)
        if (detail::better(c, best)) best = std::move(c);

    LocalizationResult out;
    out.blocks.push_back({best.rows, best.cols});
    out.diagnostics["sum"] = best.sum;
    out.diagnostics["enumerations"] = required;
    out.diagnostics["enumerated_axis_rows"] = enumerate_rows ? 1.0 : 0.0;
    return out;
}

/// r rounds of combinatorial_search, each on the rows and columns not taken
/// by earlier rounds. Blocks come back in extraction order.
inline LocalizationResult greedy_multi_search(const Observation& obs, index_t k_m, index_t k_n, index_t r,
                                              const SearchOptions& opt = {}) {
    const Matrix& x = obs.data;
    if (r < 1) throw std::domain_error("greedy_multi_search: r must be >= 1");
    if (r * k_m > x.rows() || r * k_n > x.cols()) throw std::domain_error("greedy_multi_search: r*k exceeds dimension");
    const double first_round = search_enumerations(x.rows(), x.cols(), k_m, k_n);
    if (!(first_round <= static_cast<double>(opt.budget.max_enumerations)))
        throw budget_exceeded(first_round, opt.budget.max_enumerations);

    IndexSet free_rows(static_cast<std::size_t>(x.rows()));
    IndexSet free_cols(static_cast<std::size_t>(x.cols()));
    std::iota(free_rows.begin(), free_rows.end(), index_t{0});
    std::iota(free_cols.begin(), free_cols.end(), index_t{0});

    LocalizationResult out;
    double enumerations = 0.0;
    for (index_t s = 0; s < r; ++s) {
        Matrix sub(static_cast<index_t>(free_rows.size()), static_cast<index_t>(free_cols.size()));
        for (index_t j = 0; j < sub.cols(); ++j)
            for (index_t i = 0; i < sub.rows(); ++i) sub(i, j) = x(free_rows[i], free_cols[j]);
        const auto round = combinatorial_search(Observation{std::move(sub)}, k_m, k_n, opt);
        enumerations += round.diagnostics.at("enumerations");
        LocalizationResult::Support blk;
        for (index_t i : round.blocks[0].rows) blk.rows.push_back(free_rows[i]);
        for (index_t j : round.blocks[0].cols) blk.cols.push_back(free_cols[j]);
        out.diagnostics["sum_" + std::to_string(s)] = round.diagnostics.at("sum");

        auto drop = [](IndexSet& pool, const IndexSet& taken) {
            IndexSet keep;
            std::set_difference(pool.begin(), pool.end(), taken.begin(), taken.end(), std::back_inserter(keep));
            pool.swap(keep);
        };
        drop(free_rows, blk.rows);
        drop(free_cols, blk.cols);
        out.blocks.push_back(std::move(blk));
    }
    out.diagnostics["enumerations"] = enumerations;
    return out;
}

}  // namespace subloc
