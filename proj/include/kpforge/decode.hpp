#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kpforge/rng.hpp"

namespace kpforge::decode {

using TokenId = std::int32_t;

/// Next-token distribution over a finite vocabulary that contains an
/// end-of-sequence symbol. Implementations must be deterministic for a fixed
/// prefix and safe for concurrent const calls.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual std::size_t vocab_size() const = 0;
    virtual TokenId eos() const = 0;
    /// Log-probabilities for every token id; exp() of the result sums to 1.
    virtual std::vector<double> next_logprobs(std::span<const TokenId> prefix) const = 0;

    virtual const std::string& token_text(TokenId id) const = 0;
    virtual std::optional<TokenId> token_id(std::string_view text) const = 0;
};

/// Finite-order Markov model backed by an explicit probability table.
/// Contexts are the last (order - 1) tokens, left-padded with "<s>"; a
/// context missing from the table falls back to the uniform distribution.
class NgramMockLm final : public LanguageModel {
public:
    struct Row {
        std::vector<std::string> context;
        std::map<std::string, double> probs;
    };

    /// Throws kpforge::Error on an empty vocabulary, unknown tokens, wrong
    /// context lengths, negative entries or rows that do not sum to 1 (1e-9).
    NgramMockLm(std::vector<std::string> vocab, std::string eos, int order, const std::vector<Row>& rows);

    /// Parses {"vocab": [...], "eos": "...", "order": n,
    ///         "table": [{"context": [...], "probs": {token: p}}]}.
    static NgramMockLm from_json_text(std::string_view text);
    static NgramMockLm from_file(const std::string& path);

    std::size_t vocab_size() const override { return vocab_.size(); }
    TokenId eos() const override { return eos_; }
    std::vector<double> next_logprobs(std::span<const TokenId> prefix) const override;
    const std::string& token_text(TokenId id) const override { return vocab_.at(static_cast<std::size_t>(id)); }
    std::optional<TokenId> token_id(std::string_view text) const override;

    int order() const { return order_; }

    static constexpr const char* kBos = "<s>";

private:
    std::string context_key(std::span<const TokenId> prefix) const;

    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> ids_;
    TokenId eos_ = 0;
    int order_ = 2;
    std::unordered_map<std::string, std::vector<double>> rows_;  // context key -> logprobs
    std::vector<double> uniform_;
};

enum class Strategy { kGreedy, kBeam, kDiverseBeam, kSample, kTopK, kNucleus };

std::string_view strategy_name(Strategy s);
/// Accepts greedy, beam, diverse_beam, sample (alias vanilla), top_k, nucleus.
Strategy parse_strategy(std::string_view name);

struct DecodeConfig {
    Strategy strategy = Strategy::kGreedy;
    int num_samples = 10;   // n for sampling strategies
    int beam_width = 10;
    int num_groups = 10;
    double lambda_g = 0.1;
    double temperature = 1.0;
    int k = 2;
    double p = 0.95;
    int max_len = 64;
    std::uint64_t seed = 0;

    /// Throws kpforge::Error when a parameter is out of range.
    void validate() const;

    /// Hyperparameters used for each strategy unless overridden:
    /// vanilla and top-k use temperature 0.7 (top-k with k = 2), nucleus
    /// p = 0.95 with temperature 0.5, diverse beam lambda_g = 0.1.
    static DecodeConfig defaults_for(Strategy s);
};

struct DecodeResult {
    std::vector<TokenId> tokens;
    std::vector<double> token_logprobs;
    double total_logprob = 0.0;

    bool operator==(const DecodeResult&) const = default;
};

DecodeResult decode_greedy(const LanguageModel& lm, std::span<const TokenId> prompt, int max_len);

/// Beam search on cumulative log-probability without length normalization.
/// Hypotheses that emit EOS retire to a pool. Returns up to beam_width
/// results, best first; equal scores are ordered lexicographically by ids.
std::vector<DecodeResult> decode_beam(const LanguageModel& lm, std::span<const TokenId> prompt, int beam_width,
                                      int max_len);

/// Grouped beam search with one hypothesis per group and a Hamming diversity
/// penalty: at step t group g scores token v as
///   logp(v) - lambda_g * |{g' < g : group g' chose v at step t}|.
/// Reported log-probabilities are the unpenalized model values.
std::vector<DecodeResult> decode_diverse_beam(const LanguageModel& lm, std::span<const TokenId> prompt,
                                              int num_groups, double lambda_g, int max_len);

/// The truncated distribution a sampling step draws from: token ids with
/// their renormalized probabilities, most probable first (ties by id).
struct SamplingSupport {
    std::vector<TokenId> ids;
    std::vector<double> probs;
};

/// Temperature first, then top-k or nucleus truncation, then renormalize.
SamplingSupport sampling_support(std::span<const double> logprobs, const DecodeConfig& config);

/// One sampled sequence. Strategy must be kSample, kTopK or kNucleus.
/// Reported log-probabilities are the raw model values.
DecodeResult sample_sequence(const LanguageModel& lm, std::span<const TokenId> prompt, const DecodeConfig& config,
                             SplitMix64& rng);

/// Dispatches on config.strategy: greedy yields 1 result, beam yields up to
/// beam_width, diverse beam num_groups, sampling num_samples drawn from a
/// SplitMix64 seeded with config.seed.
std::vector<DecodeResult> run_decode(const LanguageModel& lm, std::span<const TokenId> prompt,
                                     const DecodeConfig& config);

/// Sum of log p(token_i | prompt, tokens_<i) under `lm`.
DecodeResult rescore(const LanguageModel& lm, std::span<const TokenId> prompt, std::span<const TokenId> tokens);

/// Token texts joined with spaces, EOS dropped.
std::string detokenize(const LanguageModel& lm, const DecodeResult& r);

}  // namespace kpforge::decode
