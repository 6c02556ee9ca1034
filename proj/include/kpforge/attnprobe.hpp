#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kpforge/mprank.hpp"
#include "kpforge/text.hpp"

namespace kpforge::attnprobe {

/// One exported attention head for one document. Entry (k, j) is the
/// attention paid by token k to token j.
struct AttentionMatrix {
    int layer = 0;
    int head = 0;
    std::size_t size = 0;
    std::vector<double> rows;  // size * size, row-major

    double at(std::size_t k, std::size_t j) const { return rows[k * size + j]; }

    /// Throws kpforge::Error unless the matrix is square, nonnegative and every
    /// row sums to 1 within `tolerance`.
    void validate(double tolerance = 1e-4) const;
};

/// word_to_tokens[w] lists the model-token indices covering document word w.
using Alignment = std::vector<std::vector<std::size_t>>;

/// Column sums: entry j is the total attention received by token j.
std::vector<double> global_token_attention(const AttentionMatrix& m);

/// |n_i| times the summed global attention over every aligned model token of
/// every occurrence; |n_i| counts model tokens of the first occurrence.
/// Throws kpforge::Error("alignment gap") when a word has no usable tokens.
double candidate_attention_weight(const std::vector<double>& global, const PhraseCandidate& candidate,
                                  const Alignment& alignment);

std::vector<double> candidate_attention_weights(const std::vector<double>& global,
                                                const std::vector<PhraseCandidate>& candidates,
                                                const Alignment& alignment);

struct HeadReport {
    int layer = 0;
    int head = 0;
    double spearman_rho = 0.0;
    double kendall_tau = 0.0;
};

/// Rank correlation between per-candidate attention weights and centrality.
/// Throws kpforge::Error("degenerate sample") for fewer than 3 candidates.
HeadReport correlate_head(const std::vector<double>& attention_weights, const std::vector<double>& centrality,
                          int layer = 0, int head = 0);

/// Every exported head for one document, plus its word alignment.
struct DocumentExport {
    std::string doc_id;
    Alignment word_to_tokens;
    std::vector<AttentionMatrix> heads;
};

struct HeadSummary {
    int layer = 0;
    int head = 0;
    double mean_rho = 0.0;
    double mean_tau = 0.0;
    std::size_t documents = 0;  // documents where both correlations were defined
    std::size_t rank_by_rho = 0;
    std::size_t rank_by_tau = 0;
};

struct ProbeResult {
    std::vector<HeadSummary> by_rho;  // best mean Spearman first
    std::vector<HeadSummary> by_tau;  // best mean Kendall first
    std::size_t documents_used = 0;
    std::size_t documents_skipped = 0;  // fewer than 3 candidates
};

/// Correlates every head with MPRank centrality document by document and
/// averages per head. Documents with fewer than 3 candidates are skipped;
/// a (document, head) pair whose attention weights are constant contributes
/// nothing to that head. Throws when documents disagree on the head grid.
ProbeResult best_heads(const std::vector<Document>& corpus, const std::vector<DocumentExport>& exports,
                       std::size_t top = 0, const mprank::MPRankConfig& config = {});

/// Candidates ranked by attention weight (ties by earlier first occurrence).
std::vector<mprank::RankedPhrase> attention_rank_extract(const Document& doc, const AttentionMatrix& matrix,
                                                         const Alignment& alignment, std::size_t k,
                                                         const CandidateConfig& config = {});

}  // namespace kpforge::attnprobe
