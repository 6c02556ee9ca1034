#pragma once

// Seeded random inputs for property tests.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kpforge/decode.hpp"
#include "kpforge/desel.hpp"
#include "kpforge/rng.hpp"

namespace gen {

using kpforge::SplitMix64;

inline int between(SplitMix64& rng, int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline double real(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Values drawn from a small pool so ties are common.
inline std::vector<double> tied_vector(SplitMix64& rng, std::size_t n, int distinct) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(between(rng, 0, distinct - 1)) * 0.5 - 1.0;
    return v;
}

inline std::vector<double> non_constant_tied_vector(SplitMix64& rng, std::size_t n, int distinct) {
    for (;;) {
        auto v = tied_vector(rng, n, distinct);
        for (double x : v)
            if (x != v.front()) return v;
    }
}

// Dense weight matrix with zero diagonal; about a third of the entries are
// zero and some rows may be all zero (dangling nodes).
inline std::vector<std::vector<double>> random_graph(SplitMix64& rng, std::size_t n) {
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const bool dangling = rng.below(6) == 0;
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && !dangling && rng.below(3) != 0) w[i][j] = real(rng, 0.01, 3.0);
    }
    return w;
}

// Order-2 mock model over tokens t0..t{V-2} plus "</s>". Roughly one entry
// in eight is zero; every row keeps at least one positive entry.
inline kpforge::decode::NgramMockLm random_bigram_lm(SplitMix64& rng, int vocab, bool allow_zero = true) {
    std::vector<std::string> names;
    for (int i = 0; i + 1 < vocab; ++i) names.push_back("t" + std::to_string(i));
    names.push_back("</s>");
    std::vector<kpforge::decode::NgramMockLm::Row> rows;
    std::vector<std::string> contexts{"<s>"};
    for (int i = 0; i + 1 < vocab; ++i) contexts.push_back(names[static_cast<std::size_t>(i)]);
    for (const auto& ctx : contexts) {
        std::vector<double> w(names.size());
        double total = 0.0;
        for (auto& x : w) {
            x = (allow_zero && rng.below(8) == 0) ? 0.0 : real(rng, 0.05, 1.0);
            total += x;
        }
        if (total == 0.0) {
            w.back() = 1.0;
            total = 1.0;
        }
        kpforge::decode::NgramMockLm::Row row{{ctx}, {}};
        for (std::size_t i = 0; i < names.size(); ++i)
            if (w[i] > 0.0) row.probs[names[i]] = w[i] / total;
        rows.push_back(std::move(row));
    }
    return kpforge::decode::NgramMockLm(names, "</s>", 2, rows);
}

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words{
        "graph",   "graphs",   "ranking", "rankings", "neural", "network", "networks", "keyphrase", "generation",
        "model",   "models",   "topic",   "topics",   "search", "beam",    "sampling", "attention", "head"};
    return words;
}

inline std::string random_phrase(SplitMix64& rng) {
    const auto& pool = word_pool();
    const int len = between(rng, 1, 3);
    std::string p;
    for (int i = 0; i < len; ++i) {
        if (i) p.push_back(' ');
        p += pool[rng.below(pool.size())];
    }
    return p;
}

struct DeselFixture {
    std::vector<kpforge::desel::PhraseScore> greedy;
    std::vector<kpforge::desel::PhraseScore> samples;
    std::vector<std::string> gold;
};

// Greedy phrases are unique by stem; samples repeat phrases (and stem
// variants) and may repeat greedy phrases. Probabilities are drawn so a
// good share of samples lands on each side of the threshold.
inline DeselFixture random_desel_fixture(SplitMix64& rng) {
    DeselFixture f;
    const int g = between(rng, 0, 4);
    std::vector<std::string> keys;
    for (int i = 0; i < g; ++i) {
        auto p = random_phrase(rng);
        const auto key = kpforge::stem_key(p);
        bool dup = false;
        for (const auto& k : keys) dup |= k == key;
        if (dup) continue;
        keys.push_back(key);
        f.greedy.push_back({p, real(rng, 0.01, 0.5)});
    }
    const int s = between(rng, 0, 30);
    for (int i = 0; i < s; ++i) {
        if (!f.greedy.empty() && rng.below(5) == 0)
            f.samples.push_back({f.greedy[rng.below(f.greedy.size())].phrase, real(rng, 0.0, 0.5)});
        else if (!f.samples.empty() && rng.below(4) == 0)
            f.samples.push_back(f.samples[rng.below(f.samples.size())]);
        else
            f.samples.push_back({random_phrase(rng), real(rng, 0.0, 0.5)});
    }
    const int r = between(rng, 1, 6);
    for (int i = 0; i < r; ++i) f.gold.push_back(random_phrase(rng));
    return f;
}

}  // namespace gen
