#include "kpforge/attnprobe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "kpforge/error.hpp"
#include "kpforge/stats.hpp"

namespace kpforge::attnprobe {

void AttentionMatrix::validate(double tolerance) const {
    const std::string where = "attention layer " + std::to_string(layer) + " head " + std::to_string(head);
    if (rows.size() != size * size) throw Error(where + ": expected " + std::to_string(size * size) + " entries");
    for (std::size_t k = 0; k < size; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < size; ++j) {
            const double v = at(k, j);
            if (!(v >= 0.0)) throw Error(where + ": negative or NaN entry in row " + std::to_string(k));
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance)
            throw Error(where + ": row " + std::to_string(k) + " sums to " + std::to_string(sum));
    }
}

std::vector<double> global_token_attention(const AttentionMatrix& m) {
    std::vector<double> global(m.size, 0.0);
    for (std::size_t k = 0; k < m.size; ++k)
        for (std::size_t j = 0; j < m.size; ++j) global[j] += m.at(k, j);
    return global;
}

double candidate_attention_weight(const std::vector<double>& global, const PhraseCandidate& candidate,
                                  const Alignment& alignment) {
    double total = 0.0;
    std::size_t model_tokens = 0;
    bool first = true;
    for (const auto& [start, end] : candidate.occurrences) {
        std::set<std::size_t> positions;
        for (std::size_t w = start; w < end; ++w) {
            if (w >= alignment.size() || alignment[w].empty())
                throw Error("alignment gap: word " + std::to_string(w) + " of '" + candidate.surface() +
                            "' has no model tokens");
            for (std::size_t t : alignment[w]) {
                if (t >= global.size())
                    throw Error("alignment gap: token index " + std::to_string(t) + " outside the attention matrix");
                positions.insert(t);
            }
        }
        for (std::size_t t : positions) total += global[t];
        if (first) {
            model_tokens = positions.size();
            first = false;
        }
    }
    return static_cast<double>(model_tokens) * total;
}

std::vector<double> candidate_attention_weights(const std::vector<double>& global,
                                                const std::vector<PhraseCandidate>& candidates,
                                                const Alignment& alignment) {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(candidate_attention_weight(global, c, alignment));
    return out;
}

HeadReport correlate_head(const std::vector<double>& attention_weights, const std::vector<double>& centrality,
                          int layer, int head) {
    if (attention_weights.size() != centrality.size())
        throw Error("attention weights and centrality cover different candidate sets");
    if (attention_weights.size() < 3) throw Error("degenerate sample");
    HeadReport r;
    r.layer = layer;
    r.head = head;
    r.spearman_rho = stats::spearman(attention_weights, centrality);
    r.kendall_tau = stats::kendall_tau(attention_weights, centrality);
    return r;
}

ProbeResult best_heads(const std::vector<Document>& corpus, const std::vector<DocumentExport>& exports,
                       std::size_t top, const mprank::MPRankConfig& config) {
    std::unordered_map<std::string, const DocumentExport*> by_id;
    for (const auto& e : exports) {
        if (!by_id.emplace(e.doc_id, &e).second) throw Error("duplicate attention export for document " + e.doc_id);
    }
    {
        std::set<std::string> corpus_ids;
        for (const auto& d : corpus) corpus_ids.insert(d.id);
        for (const auto& e : exports)
            if (!corpus_ids.count(e.doc_id)) throw Error("attention export for unknown document " + e.doc_id);
    }

    std::vector<std::pair<int, int>> grid;
    bool grid_known = false;
    struct Accumulator {
        double rho = 0.0;
        double tau = 0.0;
        std::size_t n = 0;
    };
    std::vector<Accumulator> acc;
    ProbeResult result;

    for (const auto& doc : corpus) {
        auto it = by_id.find(doc.id);
        if (it == by_id.end()) {
            ++result.documents_skipped;
            continue;
        }
        const DocumentExport& ex = *it->second;

        std::vector<std::pair<int, int>> doc_grid;
        for (const auto& m : ex.heads) doc_grid.emplace_back(m.layer, m.head);
        std::sort(doc_grid.begin(), doc_grid.end());
        if (std::adjacent_find(doc_grid.begin(), doc_grid.end()) != doc_grid.end())
            throw Error("document " + doc.id + " exports the same head twice");
        if (!grid_known) {
            grid_known = true;
            grid = doc_grid;
            acc.assign(grid.size(), {});
        } else if (doc_grid != grid) {
            throw Error("document " + doc.id + " exports a different (layer, head) grid");
        }

        const auto scored = mprank::mprank_scores(doc, config);
        if (scored.candidates.size() < 3) {
            ++result.documents_skipped;
            continue;
        }
        ++result.documents_used;
        for (const auto& m : ex.heads) {
            const auto idx = static_cast<std::size_t>(
                std::lower_bound(grid.begin(), grid.end(), std::make_pair(m.layer, m.head)) - grid.begin());
            const auto weights = candidate_attention_weights(global_token_attention(m), scored.candidates,
                                                             ex.word_to_tokens);
            try {
                const auto r = correlate_head(weights, scored.scores, m.layer, m.head);
                acc[idx].rho += r.spearman_rho;
                acc[idx].tau += r.kendall_tau;
                ++acc[idx].n;
            } catch (const Error&) {
                // Constant weights or constant centrality: correlation undefined.
            }
        }
    }

    std::vector<HeadSummary> summaries;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        HeadSummary s;
        s.layer = grid[i].first;
        s.head = grid[i].second;
        s.documents = acc[i].n;
        if (acc[i].n > 0) {
            s.mean_rho = acc[i].rho / static_cast<double>(acc[i].n);
            s.mean_tau = acc[i].tau / static_cast<double>(acc[i].n);
        }
        summaries.push_back(s);
    }

    // Heads with no defined correlation sort last; remaining ties keep grid order.
    auto ranked = [&](auto key) {
        std::vector<HeadSummary> v = summaries;
        std::stable_sort(v.begin(), v.end(), [&](const HeadSummary& a, const HeadSummary& b) {
            if ((a.documents > 0) != (b.documents > 0)) return a.documents > 0;
            return key(a) > key(b);
        });
        return v;
    };
    result.by_rho = ranked([](const HeadSummary& s) { return s.mean_rho; });
    result.by_tau = ranked([](const HeadSummary& s) { return s.mean_tau; });

    auto rank_of = [](const std::vector<HeadSummary>& v, int layer, int head) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i].layer == layer && v[i].head == head) return i + 1;
        return std::size_t{0};
    };
    for (auto* list : {&result.by_rho, &result.by_tau}) {
        for (auto& s : *list) {
            s.rank_by_rho = rank_of(result.by_rho, s.layer, s.head);
            s.rank_by_tau = rank_of(result.by_tau, s.layer, s.head);
        }
    }
    if (top > 0) {
        if (result.by_rho.size() > top) result.by_rho.resize(top);
        if (result.by_tau.size() > top) result.by_tau.resize(top);
    }
    return result;
}

std::vector<mprank::RankedPhrase> attention_rank_extract(const Document& doc, const AttentionMatrix& matrix,
                                                         const Alignment& alignment, std::size_t k,
                                                         const CandidateConfig& config) {
    const auto candidates = extract_candidates(doc, config);
    if (candidates.empty()) return {};
    const auto weights = candidate_attention_weights(global_token_attention(matrix), candidates, alignment);
    return mprank::rank_candidates(candidates, weights, k);
}

}  // namespace kpforge::attnprobe
