#pragma once

// Exhaustive k-means oracle: tries every labelling of at most 12 points.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Partition {
    std::vector<int> labels;
    double inertia = std::numeric_limits<double>::infinity();
};

/// points[i] is a d-vector. Labels are canonical: first occurrence order.
inline Partition best_partition(const std::vector<std::vector<double>>& points, int k) {
    const int p = static_cast<int>(points.size());
    if (p > 12) throw std::invalid_argument("partition oracle limited to 12 points");
    const std::size_t d = points.empty() ? 0 : points[0].size();
    Partition best;
    std::vector<int> labels(p, 0);
    std::uint64_t total = 1;
    for (int i = 0; i < p; ++i) total *= static_cast<std::uint64_t>(k);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        for (int i = 0; i < p; ++i) {
            labels[i] = static_cast<int>(c % k);
            c /= k;
        }
        std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0));
        std::vector<int> count(k, 0);
        for (int i = 0; i < p; ++i) {
            ++count[labels[i]];
            for (std::size_t t = 0; t < d; ++t) sum[labels[i]][t] += points[i][t];
        }
        double inertia = 0.0;
        for (int i = 0; i < p; ++i) {
            for (std::size_t t = 0; t < d; ++t) {
                const double diff = points[i][t] - sum[labels[i]][t] / count[labels[i]];
                inertia += diff * diff;
            }
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
        }
    }
    // canonical relabelling
    std::vector<int> map(k, -1);
    int next = 0;
    for (int& l : best.labels) {
        if (map[l] < 0) map[l] = next++;
        l = map[l];
    }
    return best;
}

/// Relabel so labels appear in first-occurrence order.
inline std::vector<int> canonical(const std::vector<int>& labels, int k) {
    std::vector<int> map(k, -1);
    std::vector<int> out(labels.size());
    int next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (map[labels[i]] < 0) map[labels[i]] = next++;
        out[i] = map[labels[i]];
    }
    return out;
}

}  // namespace oracle
