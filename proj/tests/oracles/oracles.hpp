#pragma once

// Reference implementations used only by tests. Each one computes the same
// quantity as a library routine by a different route.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kpforge/decode.hpp"
#include "kpforge/rng.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// PageRank by repeated multiplication with the explicit Google matrix
// G[i][j] = d * T[i][j] + (1 - d) / N, where column j of T is row j of W
// normalized, or uniform when j has no out-weight.
inline std::vector<double> dense_pagerank(const Matrix& w, double d = 0.85, double tol = 1e-8, int max_iter = 200) {
    const std::size_t n = w.size();
    Matrix g(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double out = 0.0;
        for (double x : w[j]) out += x;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = out > 0.0 ? w[j][i] / out : 1.0 / static_cast<double>(n);
            g[i][j] = d * t + (1.0 - d) / static_cast<double>(n);
        }
    }
    std::vector<double> s(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> next(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) next[i] += g[i][j] * s[j];
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change += std::fabs(next[i] - s[i]);
        s = next;
        if (change < tol) break;
    }
    double total = 0.0;
    for (double x : s) total += x;
    for (double& x : s) x /= total;
    return s;
}

// Stationary vector of the same chain by solving (I - G) s = 0, sum s = 1
// with Gaussian elimination (one equation replaced by the normalization).
inline std::vector<double> exact_pagerank(const Matrix& w, double d = 0.85) {
    const std::size_t n = w.size();
    Matrix a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double out = 0.0;
        for (double x : w[j]) out += x;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = out > 0.0 ? w[j][i] / out : 1.0 / static_cast<double>(n);
            a[i][j] = (i == j ? 1.0 : 0.0) - (d * t + (1.0 - d) / static_cast<double>(n));
        }
    }
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    a[n - 1][n] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = a[i][n] / a[i][i];
    return s;
}

// Rank of x_i counted directly: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& xs) {
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double smaller = 0, equal = 0;
        for (double y : xs) {
            if (y < xs[i]) ++smaller;
            if (y == xs[i]) ++equal;
        }
        r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(counting_ranks(x), counting_ranks(y));
}

inline int sgn(double v) { return (v > 0) - (v < 0); }

// Tau-b as the cosine between the pairwise sign matrices of x and y.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    double num = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) {
            const int a = sgn(x[i] - x[j]), b = sgn(y[i] - y[j]);
            num += a * b;
            sx += a * a;
            sy += b * b;
        }
    return num / std::sqrt(sx * sy);
}

// Independent loop for the one-sided paired bootstrap: resample b draws n
// indices from SplitMix64(mix_seed(seed, b)) and counts mean(B) >= mean(A).
inline double bootstrap_p(const std::vector<double>& a, const std::vector<double>& b, int iterations,
                          std::uint64_t seed) {
    const std::size_t n = a.size();
    int count = 0;
    for (int it = 0; it < iterations; ++it) {
        kpforge::SplitMix64 rng(kpforge::mix_seed(seed, static_cast<std::uint64_t>(it)));
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
        double ma = 0, mb = 0;
        for (auto i : idx) ma += a[i];
        for (auto i : idx) mb += b[i];
        if (mb / static_cast<double>(n) >= ma / static_cast<double>(n)) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(iterations);
}

struct Sequence {
    std::vector<kpforge::decode::TokenId> tokens;
    double logprob = 0.0;
};

// Every finished output of length <= max_len: sequences ending in EOS, plus
// EOS-free sequences cut at max_len. Zero-probability steps are pruned.
inline std::vector<Sequence> enumerate_sequences(const kpforge::decode::LanguageModel& lm, int max_len) {
    std::vector<Sequence> out;
    std::function<void(Sequence&)> walk = [&](Sequence& cur) {
        if (static_cast<int>(cur.tokens.size()) == max_len) {
            out.push_back(cur);
            return;
        }
        const auto lp = lm.next_logprobs(cur.tokens);
        for (std::size_t v = 0; v < lp.size(); ++v) {
            if (std::isinf(lp[v])) continue;
            cur.tokens.push_back(static_cast<kpforge::decode::TokenId>(v));
            const double saved = cur.logprob;
            cur.logprob += lp[v];
            if (static_cast<kpforge::decode::TokenId>(v) == lm.eos())
                out.push_back(cur);
            else
                walk(cur);
            cur.logprob = saved;
            cur.tokens.pop_back();
        }
    };
    Sequence root;
    walk(root);
    std::sort(out.begin(), out.end(), [](const Sequence& a, const Sequence& b) {
        if (a.logprob != b.logprob) return a.logprob > b.logprob;
        return a.tokens < b.tokens;
    });
    return out;
}

// Average-linkage clustering recomputed from scratch at every merge: the
// linkage of two clusters is the mean of all member-pair distances. Clusters
// are keyed by their smallest member; ties go to the first pair in that order.
inline std::vector<std::vector<std::size_t>> naive_average_linkage(const Matrix& dist, double cut) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < dist.size(); ++i) clusters.push_back({i});
    for (;;) {
        double best = 0.0;
        std::size_t ba = 0, bb = 0;
        bool found = false;
        for (std::size_t a = 0; a < clusters.size(); ++a)
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                double sum = 0.0;
                for (auto i : clusters[a])
                    for (auto j : clusters[b]) sum += dist[i][j];
                const double link = sum / static_cast<double>(clusters[a].size() * clusters[b].size());
                if (!found || link < best - 1e-12) {
                    best = link;
                    ba = a;
                    bb = b;
                    found = true;
                }
            }
        if (!found || best > cut + 1e-12) break;
        clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
        std::sort(clusters[ba].begin(), clusters[ba].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    return clusters;
}

}  // namespace oracle
