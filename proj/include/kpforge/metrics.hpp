#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kpforge/text.hpp"

namespace kpforge::metrics {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// 2PR / (P + R), or 0 when P + R is 0.
double harmonic(double p, double r);

/// Phrases after stemming and order-preserving deduplication.
struct StemmedPhrases {
    std::vector<std::string> phrases;  // first surface form of each key
    std::vector<std::string> keys;     // stem keys, unique
};

StemmedPhrases dedupe_by_stem(const std::vector<std::string>& phrases);

/// True when the phrase's stem sequence occurs contiguously in the document.
bool is_present(const Document& doc, std::string_view phrase);

std::pair<std::vector<std::string>, std::vector<std::string>> split_present_absent(
    const Document& doc, const std::vector<std::string>& phrases);

/// Exact match on stem keys after deduplicating both sides. Both sides empty
/// scores (1, 1, 1); exactly one side empty scores (0, 0, 0).
PRF f1_at_m(const std::vector<std::string>& preds, const std::vector<std::string>& refs);

/// f1_at_m on the first k deduplicated predictions.
PRF f1_at_k(const std::vector<std::string>& preds, const std::vector<std::string>& refs, std::size_t k);

/// Maps a phrase to a unit-norm vector of fixed dimension.
class PhraseEmbedder {
public:
    virtual ~PhraseEmbedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view phrase) const = 0;
};

/// Bag of hashed character trigrams of " phrase " (lowercased, whitespace
/// collapsed), FNV-1a into 256 buckets, L2-normalized. A phrase with no
/// trigram maps to the constant vector 1/16.
class TrigramEmbedder final : public PhraseEmbedder {
public:
    static constexpr std::size_t kDimension = 256;
    std::size_t dimension() const override { return kDimension; }
    std::vector<double> embed(std::string_view phrase) const override;
};

/// Word vectors in the plain-text word2vec/GloVe layout ("word v1 ... vd",
/// optional "count dim" header). A phrase embeds as the normalized mean of
/// its known words; with no known word it maps to the constant unit vector.
class WordVectorEmbedder final : public PhraseEmbedder {
public:
    static WordVectorEmbedder from_file(const std::string& path);
    WordVectorEmbedder(std::unordered_map<std::string, std::vector<double>> vectors, std::size_t dim);

    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed(std::string_view phrase) const override;

private:
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::size_t dim_;
};

std::shared_ptr<const PhraseEmbedder> default_embedder();

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// similarity[i][j] between prediction i and reference j.
using SimilarityMatrix = std::vector<std::vector<double>>;

/// SemP = mean row maximum, SemR = mean column maximum, SemF1 harmonic.
/// Maxima below zero count as zero. An empty side scores (0, 0, 0).
PRF sem_scores(const SimilarityMatrix& similarity);

/// Deduplicates both lists by stem, embeds, then scores by max cosine.
PRF sem_scores(const std::vector<std::string>& preds, const std::vector<std::string>& refs,
               const PhraseEmbedder& embedder);

struct Counts {
    std::size_t num_preds = 0;
    std::size_t num_refs = 0;
    std::size_t num_present_refs = 0;
    std::size_t num_absent_refs = 0;
    std::size_t num_present_preds = 0;
    std::size_t num_absent_preds = 0;
    std::size_t present_matches = 0;
    std::size_t absent_matches = 0;
};

struct MetricReport {
    std::string id;
    PRF present;
    PRF absent;
    double at5_present = 0.0;
    PRF semantic;
    Counts counts;
};

MetricReport evaluate_document(const Document& doc, const std::vector<std::string>& preds,
                               const PhraseEmbedder& embedder);

enum class Aggregation { kMacro, kMicro };

/// Corpus-level scores. Macro averages the per-document values; micro pools
/// the lexical match counts (semantic and F1@5 stay macro-averaged).
MetricReport aggregate(const std::vector<MetricReport>& rows, Aggregation mode = Aggregation::kMacro);

}  // namespace kpforge::metrics
