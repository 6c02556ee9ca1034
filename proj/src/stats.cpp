#include "kpforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kpforge/error.hpp"
#include "kpforge/rng.hpp"

namespace kpforge::stats {
namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("correlation inputs differ in length");
    if (xs.size() < 3) throw Error("degenerate sample: need at least 3 points");
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::vector<double> midranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys);
    const auto rx = midranks(xs);
    const auto ry = midranks(ys);
    const double n = static_cast<double>(rx.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw Error("zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys);
    const std::size_t n = xs.size();
    long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const int sx = sign(xs[i] - xs[j]);
            const int sy = sign(ys[i] - ys[j]);
            if (sx == 0 && sy == 0) continue;
            if (sx == 0) {
                ++tied_x;
            } else if (sy == 0) {
                ++tied_y;
            } else if (sx == sy) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    // tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)), where the bracketed terms
    // count pairs not tied in x and not tied in y respectively.
    const double untied_x = static_cast<double>(concordant + discordant + tied_y);
    const double untied_y = static_cast<double>(concordant + discordant + tied_x);
    if (untied_x == 0 || untied_y == 0) throw Error("zero variance");
    const double tau = static_cast<double>(concordant - discordant) / std::sqrt(untied_x * untied_y);
    return std::clamp(tau, -1.0, 1.0);
}

BootstrapResult paired_bootstrap(const PairedSample& sample, int iterations, std::uint64_t seed) {
    const std::size_t n = sample.a.size();
    if (sample.b.size() != n) throw Error("paired sample: systems have different document counts");
    if (n < 2) throw Error("paired bootstrap needs at least 2 documents");
    if (iterations < 100) throw Error("paired bootstrap needs at least 100 iterations");

    BootstrapResult result;
    result.iterations = iterations;
    result.mean_a = std::accumulate(sample.a.begin(), sample.a.end(), 0.0) / static_cast<double>(n);
    result.mean_b = std::accumulate(sample.b.begin(), sample.b.end(), 0.0) / static_cast<double>(n);

    int not_better = 0;
    for (int b = 0; b < iterations; ++b) {
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
        double sum_a = 0, sum_b = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = rng.below(n);
            sum_a += sample.a[idx];
            sum_b += sample.b[idx];
        }
        if (sum_b >= sum_a) ++not_better;
    }
    result.p_value = static_cast<double>(not_better) / static_cast<double>(iterations);
    return result;
}

}  // namespace kpforge::stats
