#pragma once

#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "kpforge/text.hpp"

namespace kpforge::mprank {

struct TopicClusters {
    /// Each cluster lists candidate indices in increasing order; clusters are
    /// ordered by their smallest member.
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::size_t> cluster_of;
};

/// Directed, weighted graph over candidate indices stored densely; a zero
/// weight means "no edge".
class MultipartiteGraph {
public:
    MultipartiteGraph() = default;
    explicit MultipartiteGraph(std::size_t nodes) : n_(nodes), w_(nodes * nodes, 0.0) {}

    std::size_t size() const { return n_; }
    double weight(std::size_t from, std::size_t to) const { return w_[from * n_ + to]; }
    void set_weight(std::size_t from, std::size_t to, double w) { w_[from * n_ + to] = w; }
    void add_weight(std::size_t from, std::size_t to, double w) { w_[from * n_ + to] += w; }
    bool has_edge(std::size_t from, std::size_t to) const { return weight(from, to) > 0.0; }
    std::size_t edge_count() const;

    /// (from, to, weight) for every edge, row-major.
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges() const;

private:
    std::size_t n_ = 0;
    std::vector<double> w_;
};

struct CentralityScores {
    std::vector<double> scores;
    int iterations = 0;
};

struct MPRankConfig {
    CandidateConfig candidates;
    double cut_distance = 0.74;
    double alpha_boost = 1.1;
    double damping = 0.85;
    double tol = 1e-8;
    int max_iter = 200;
};

/// 1 - |A ∩ B| / |A ∪ B| over the stem sets of two candidates.
double stem_distance(const PhraseCandidate& a, const PhraseCandidate& b);

/// Average-linkage agglomerative clustering cut at `cut_distance`. Merges
/// continue while the closest pair of clusters is within the cut; ties go
/// to the pair with the lowest member indices. Throws on empty input.
TopicClusters cluster_topics(const std::vector<PhraseCandidate>& candidates, double cut_distance = 0.74);

/// weight(i -> j) = sum over occurrence starts p_i, p_j of 1 / |p_i - p_j|
/// for candidates in different clusters.
MultipartiteGraph build_multipartite_graph(const std::vector<PhraseCandidate>& candidates,
                                           const TopicClusters& clusters);

/// Promotes the earliest candidate c* of every multi-member cluster: for each
/// other member v and each u with an edge u -> v,
///   weight(u -> c*) += alpha_boost * exp(1 / p(c*)) * weight(u -> v)
/// with p(c*) the 1-based first position of c*. Boosts are computed from the
/// input weights, so cluster order does not matter.
MultipartiteGraph adjust_weights(const MultipartiteGraph& graph, const TopicClusters& clusters,
                                 const std::vector<PhraseCandidate>& candidates, double alpha_boost = 1.1);

/// Weighted PageRank by power iteration. Dangling nodes spread their mass
/// uniformly. Stops once the L1 change drops below tol or after max_iter.
CentralityScores textrank_scores(const MultipartiteGraph& graph, double damping = 0.85, double tol = 1e-8,
                                 int max_iter = 200);

struct RankedPhrase {
    std::string phrase;
    double score = 0.0;
    std::size_t candidate = 0;  // index into the candidate list
};

/// Candidates with their centrality, before ranking.
struct ScoredCandidates {
    std::vector<PhraseCandidate> candidates;
    std::vector<double> scores;
};

ScoredCandidates mprank_scores(const Document& doc, const MPRankConfig& config = {});

/// Sorts candidate indices by descending score, then earliest occurrence,
/// then stem order, and keeps the first k.
std::vector<RankedPhrase> rank_candidates(const std::vector<PhraseCandidate>& candidates,
                                          const std::vector<double>& scores, std::size_t k);

/// Full pipeline: candidates, clusters, graph, weight adjustment, TextRank.
std::vector<RankedPhrase> mprank_extract(const Document& doc, std::size_t k, const MPRankConfig& config = {});

}  // namespace kpforge::mprank
