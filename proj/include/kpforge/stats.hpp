#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kpforge::stats {

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> xs);

/// Pearson correlation of midranks. Requires equal lengths >= 3; throws
/// kpforge::Error("zero variance") when either input is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Kendall tau-b by pair counting. Same preconditions as spearman.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

/// Per-document metric values for two systems, aligned by document.
struct PairedSample {
    std::vector<std::string> ids;
    std::vector<double> a;
    std::vector<double> b;
};

struct BootstrapResult {
    double p_value = 1.0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    int iterations = 0;
};

/// One-sided paired bootstrap for "A is better than B": p is the fraction of
/// resamples in which mean(B) >= mean(A). Resample b draws its indices from
/// SplitMix64(mix_seed(seed, b)).
BootstrapResult paired_bootstrap(const PairedSample& sample, int iterations = 1000, std::uint64_t seed = 7);

}  // namespace kpforge::stats
