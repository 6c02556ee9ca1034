#include "kpforge/mprank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "kpforge/error.hpp"

namespace kpforge::mprank {

std::size_t MultipartiteGraph::edge_count() const {
    return static_cast<std::size_t>(std::count_if(w_.begin(), w_.end(), [](double w) { return w > 0.0; }));
}

std::vector<std::tuple<std::size_t, std::size_t, double>> MultipartiteGraph::edges() const {
    std::vector<std::tuple<std::size_t, std::size_t, double>> out;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            if (weight(i, j) > 0.0) out.emplace_back(i, j, weight(i, j));
    return out;
}

double stem_distance(const PhraseCandidate& a, const PhraseCandidate& b) {
    const std::set<std::string> sa(a.stems.begin(), a.stems.end());
    const std::set<std::string> sb(b.stems.begin(), b.stems.end());
    std::size_t common = 0;
    for (const auto& s : sa) common += sb.count(s);
    const std::size_t uni = sa.size() + sb.size() - common;
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

TopicClusters cluster_topics(const std::vector<PhraseCandidate>& candidates, double cut_distance) {
    const std::size_t n = candidates.size();
    if (n == 0) throw Error("no candidates");

    // Lance-Williams update for average linkage on a dense matrix. Cluster c
    // is alive while size[c] > 0; it keeps the index of its first member.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i * n + j] = dist[j * n + i] = stem_distance(candidates[i], candidates[j]);

    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};

    while (true) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = n, bj = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (members[i].empty()) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (members[j].empty()) continue;
                if (dist[i * n + j] < best) {
                    best = dist[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi == n || best > cut_distance) break;

        const double si = static_cast<double>(members[bi].size());
        const double sj = static_cast<double>(members[bj].size());
        for (std::size_t k = 0; k < n; ++k) {
            if (members[k].empty() || k == bi || k == bj) continue;
            const double d = (si * dist[bi * n + k] + sj * dist[bj * n + k]) / (si + sj);
            dist[bi * n + k] = dist[k * n + bi] = d;
        }
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        std::sort(members[bi].begin(), members[bi].end());
        members[bj].clear();
    }

    TopicClusters out;
    out.cluster_of.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (members[i].empty()) continue;
        for (std::size_t m : members[i]) out.cluster_of[m] = out.clusters.size();
        out.clusters.push_back(std::move(members[i]));
    }
    return out;
}

MultipartiteGraph build_multipartite_graph(const std::vector<PhraseCandidate>& candidates,
                                           const TopicClusters& clusters) {
    const std::size_t n = candidates.size();
    if (clusters.cluster_of.size() != n) throw Error("clusters do not match the candidate list");
    MultipartiteGraph graph(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (clusters.cluster_of[i] == clusters.cluster_of[j]) continue;
            double w = 0.0;
            for (const auto& oi : candidates[i].occurrences) {
                for (const auto& oj : candidates[j].occurrences) {
                    const auto gap = oi.first > oj.first ? oi.first - oj.first : oj.first - oi.first;
                    if (gap > 0) w += 1.0 / static_cast<double>(gap);
                }
            }
            if (w > 0.0) {
                graph.set_weight(i, j, w);
                graph.set_weight(j, i, w);
            }
        }
    }
    return graph;
}

MultipartiteGraph adjust_weights(const MultipartiteGraph& graph, const TopicClusters& clusters,
                                 const std::vector<PhraseCandidate>& candidates, double alpha_boost) {
    MultipartiteGraph out = graph;
    const std::size_t n = graph.size();
    for (const auto& cluster : clusters.clusters) {
        if (cluster.size() < 2) continue;
        // Earliest first occurrence; the member list is sorted, so ties keep
        // the lower index.
        std::size_t first = cluster.front();
        for (std::size_t c : cluster)
            if (candidates[c].first_position() < candidates[first].first_position()) first = c;
        const double position = static_cast<double>(candidates[first].first_position() + 1);
        const double boost = alpha_boost * std::exp(1.0 / position);
        for (std::size_t v : cluster) {
            if (v == first) continue;
            for (std::size_t u = 0; u < n; ++u) {
                const double w = graph.weight(u, v);
                if (w > 0.0 && clusters.cluster_of[u] != clusters.cluster_of[first]) {
                    out.add_weight(u, first, boost * w);
                }
            }
        }
    }
    return out;
}

CentralityScores textrank_scores(const MultipartiteGraph& graph, double damping, double tol, int max_iter) {
    const std::size_t n = graph.size();
    CentralityScores result;
    if (n == 0) return result;

    std::vector<double> out_weight(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) out_weight[j] += graph.weight(j, i);

    // Incoming adjacency, normalized by the source's out-weight.
    std::vector<std::vector<std::pair<std::size_t, double>>> incoming(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (out_weight[j] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = graph.weight(j, i);
            if (w > 0.0) incoming[i].emplace_back(j, w / out_weight[j]);
        }
    }

    const double nn = static_cast<double>(n);
    std::vector<double> s(n, 1.0 / nn), next(n);
    for (int it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (out_weight[j] == 0.0) dangling += s[j];
        const double base = (1.0 - damping) / nn + damping * dangling / nn;
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (auto [j, p] : incoming[i]) acc += p * s[j];
            next[i] = base + damping * acc;
            change += std::abs(next[i] - s[i]);
        }
        s.swap(next);
        result.iterations = it + 1;
        if (change < tol) break;
    }
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    for (double& v : s) v /= total;
    result.scores = std::move(s);
    return result;
}

ScoredCandidates mprank_scores(const Document& doc, const MPRankConfig& config) {
    ScoredCandidates out;
    out.candidates = extract_candidates(doc, config.candidates);
    if (out.candidates.empty()) return out;
    const auto clusters = cluster_topics(out.candidates, config.cut_distance);
    const auto graph = build_multipartite_graph(out.candidates, clusters);
    const auto adjusted = adjust_weights(graph, clusters, out.candidates, config.alpha_boost);
    out.scores = textrank_scores(adjusted, config.damping, config.tol, config.max_iter).scores;
    return out;
}

std::vector<RankedPhrase> rank_candidates(const std::vector<PhraseCandidate>& candidates,
                                          const std::vector<double>& scores, std::size_t k) {
    if (scores.size() != candidates.size()) throw Error("score vector does not match candidates");
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a].first_position() != candidates[b].first_position())
            return candidates[a].first_position() < candidates[b].first_position();
        return candidates[a].key() < candidates[b].key();
    });
    if (order.size() > k) order.resize(k);
    std::vector<RankedPhrase> out;
    out.reserve(order.size());
    for (std::size_t i : order) out.push_back({candidates[i].surface(), scores[i], i});
    return out;
}

std::vector<RankedPhrase> mprank_extract(const Document& doc, std::size_t k, const MPRankConfig& config) {
    const auto scored = mprank_scores(doc, config);
    if (scored.candidates.empty()) return {};
    return rank_candidates(scored.candidates, scored.scores, k);
}

}  // namespace kpforge::mprank
