#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kpforge/decode.hpp"
#include "kpforge/metrics.hpp"
#include "kpforge/text.hpp"

namespace kpforge::desel {

struct PhraseScore {
    std::string phrase;
    double prob = 0.0;
};

enum class ScorerMode { kSelf, kOne2One };

struct DeselConfig {
    int m = 10;          // at most this many phrases appended to G
    int n = 10;          // sampled sequences consulted
    double alpha = 0.78;
    ScorerMode scorer_mode = ScorerMode::kSelf;

    void validate() const;
};

/// Splits a one2seq output on ';', trims, lowercases and collapses inner
/// whitespace, drops empty segments and later stem-duplicates.
std::vector<std::string> parse_phrase_sequence(std::string_view text);
std::vector<std::string> parse_phrase_sequence(const std::vector<std::string>& tokens);

/// Estimates Pr(phrase | document).
class PhraseScorer {
public:
    virtual ~PhraseScorer() = default;
    virtual double prob(const std::string& doc_id, const std::string& phrase) const = 0;
};

/// Scores a phrase with the sequence model itself: the product of the
/// probabilities of its whitespace-separated tokens followed by EOS. Words
/// outside the vocabulary make the phrase impossible (probability 0).
class SelfScorer final : public PhraseScorer {
public:
    explicit SelfScorer(const decode::LanguageModel& lm, bool length_normalize = false)
        : lm_(lm), length_normalize_(length_normalize) {}
    double prob(const std::string& doc_id, const std::string& phrase) const override;

private:
    const decode::LanguageModel& lm_;
    bool length_normalize_;
};

/// Probabilities read from an external scores file (one2one role). Phrases
/// are looked up after the same normalization parse_phrase_sequence applies.
class TableScorer final : public PhraseScorer {
public:
    void add(const std::string& doc_id, const std::string& phrase, double prob);
    /// Throws kpforge::Error("unscored phrase ...") on a miss.
    double prob(const std::string& doc_id, const std::string& phrase) const override;
    std::size_t size() const { return table_.size(); }

private:
    std::map<std::pair<std::string, std::string>, double> table_;
};

std::vector<PhraseScore> score_phrases(const PhraseScorer& scorer, const std::string& doc_id,
                                       const std::vector<std::string>& phrases);

struct Selection {
    std::vector<std::string> phrases;  // G in order, then the appended phrases
    std::vector<double> probs;         // aligned with phrases
    std::size_t appended = 0;
    double threshold = 0.0;
    bool flagged = false;  // G was empty; the threshold was not applied
};

/// Decode-select: appends up to m candidates from S whose probability
/// reaches alpha * mean(Pr(g) for g in G), most probable first (ties keep
/// sample order). S is deduplicated by stem keeping the maximum probability
/// and anything already in G is removed.
Selection desel_select(const std::vector<PhraseScore>& greedy, const std::vector<PhraseScore>& samples,
                       const DeselConfig& config);

enum class BaselineMethod { kRandom, kFreq, kOverlap };

BaselineMethod parse_baseline(std::string_view name);

struct BaselineContext {
    std::uint64_t seed = 0;
    const metrics::PhraseEmbedder* embedder = nullptr;  // required for kOverlap
    std::string document_text;                          // required for kOverlap
};

/// Table 5 selectors. `samples` lists every phrase of every sample sequence
/// in order, repeats included; frequency counts repeats by stem.
///   random:  m distinct phrases drawn uniformly without replacement
///   freq:    top m by sample frequency, ties by probability then order
///   overlap: top m by cosine(phrase, document), ties by order
Selection baseline_select(const std::vector<PhraseScore>& greedy, const std::vector<PhraseScore>& samples,
                          BaselineMethod method, int m, const BaselineContext& context);

}  // namespace kpforge::desel
