#include "kpforge/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "kpforge/error.hpp"

namespace kpforge::decode {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> log_softmax(std::vector<double> v) {
    double hi = kNegInf;
    for (double x : v) hi = std::max(hi, x);
    if (hi == kNegInf) return v;
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - hi);
    const double log_z = hi + std::log(sum);
    for (double& x : v) x -= log_z;
    return v;
}

TokenId argmax(const std::vector<double>& scores) {
    TokenId best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(i);
    return best;
}

std::vector<TokenId> with_prompt(std::span<const TokenId> prompt, const std::vector<TokenId>& tokens) {
    std::vector<TokenId> prefix(prompt.begin(), prompt.end());
    prefix.insert(prefix.end(), tokens.begin(), tokens.end());
    return prefix;
}

void push(DecodeResult& r, TokenId t, double lp) {
    r.tokens.push_back(t);
    r.token_logprobs.push_back(lp);
    r.total_logprob += lp;
}

bool better(const DecodeResult& a, const DecodeResult& b) {
    if (a.total_logprob != b.total_logprob) return a.total_logprob > b.total_logprob;
    return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end());
}

}  // namespace

NgramMockLm::NgramMockLm(std::vector<std::string> vocab, std::string eos, int order, const std::vector<Row>& rows)
    : vocab_(std::move(vocab)), order_(order) {
    if (vocab_.empty()) throw Error("mock lm: empty vocabulary");
    if (order_ < 1) throw Error("mock lm: order must be >= 1");
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        if (vocab_[i] == kBos) throw Error("mock lm: '<s>' is reserved for context padding");
        if (!ids_.emplace(vocab_[i], static_cast<TokenId>(i)).second)
            throw Error("mock lm: duplicate vocabulary entry '" + vocab_[i] + "'");
    }
    auto eos_it = ids_.find(eos);
    if (eos_it == ids_.end()) throw Error("mock lm: eos symbol '" + eos + "' not in vocabulary");
    eos_ = eos_it->second;

    uniform_.assign(vocab_.size(), -std::log(static_cast<double>(vocab_.size())));

    for (const Row& row : rows) {
        if (static_cast<int>(row.context.size()) != order_ - 1)
            throw Error("mock lm: context length " + std::to_string(row.context.size()) + " does not match order " +
                        std::to_string(order_));
        std::string key;
        for (const auto& c : row.context) {
            if (c != kBos && !ids_.count(c)) throw Error("mock lm: unknown context token '" + c + "'");
            key += c;
            key.push_back('\x1f');
        }
        std::vector<double> probs(vocab_.size(), 0.0);
        double sum = 0.0;
        for (const auto& [tok, p] : row.probs) {
            auto it = ids_.find(tok);
            if (it == ids_.end()) throw Error("mock lm: unknown token '" + tok + "' in table row");
            if (!(p >= 0.0)) throw Error("mock lm: negative probability for '" + tok + "'");
            probs[static_cast<std::size_t>(it->second)] = p;
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error("mock lm: row sums to " + std::to_string(sum));
        std::vector<double> lp(vocab_.size());
        for (std::size_t i = 0; i < probs.size(); ++i) lp[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
        if (!rows_.emplace(key, std::move(lp)).second) throw Error("mock lm: duplicate context row");
    }
}

NgramMockLm NgramMockLm::from_json_text(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("mock lm: ") + e.what());
    }
    try {
        std::vector<std::string> vocab = j.at("vocab").get<std::vector<std::string>>();
        std::string eos = j.at("eos").get<std::string>();
        int order = j.value("order", 2);
        std::vector<Row> rows;
        for (const auto& r : j.at("table")) {
            Row row;
            row.context = r.at("context").get<std::vector<std::string>>();
            for (auto it = r.at("probs").begin(); it != r.at("probs").end(); ++it)
                row.probs[it.key()] = it.value().get<double>();
            rows.push_back(std::move(row));
        }
        return NgramMockLm(std::move(vocab), std::move(eos), order, rows);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("mock lm: malformed table: ") + e.what());
    }
}

NgramMockLm NgramMockLm::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mock lm table " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string NgramMockLm::context_key(std::span<const TokenId> prefix) const {
    const std::size_t width = static_cast<std::size_t>(order_ - 1);
    std::string key;
    for (std::size_t i = 0; i < width; ++i) {
        // Position i of the context window, counted from the oldest token.
        const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(prefix.size()) - static_cast<std::ptrdiff_t>(width) +
                                   static_cast<std::ptrdiff_t>(i);
        key += idx < 0 ? std::string(kBos) : vocab_.at(static_cast<std::size_t>(prefix[static_cast<std::size_t>(idx)]));
        key.push_back('\x1f');
    }
    return key;
}

std::vector<double> NgramMockLm::next_logprobs(std::span<const TokenId> prefix) const {
    auto it = rows_.find(context_key(prefix));
    return it == rows_.end() ? uniform_ : it->second;
}

std::optional<TokenId> NgramMockLm::token_id(std::string_view text) const {
    auto it = ids_.find(std::string(text));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::kGreedy: return "greedy";
        case Strategy::kBeam: return "beam";
        case Strategy::kDiverseBeam: return "diverse_beam";
        case Strategy::kSample: return "sample";
        case Strategy::kTopK: return "top_k";
        case Strategy::kNucleus: return "nucleus";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "greedy") return Strategy::kGreedy;
    if (name == "beam") return Strategy::kBeam;
    if (name == "diverse_beam" || name == "diverse") return Strategy::kDiverseBeam;
    if (name == "sample" || name == "vanilla") return Strategy::kSample;
    if (name == "top_k" || name == "topk") return Strategy::kTopK;
    if (name == "nucleus" || name == "top_p") return Strategy::kNucleus;
    throw Error("unknown decoding strategy '" + std::string(name) + "'");
}

void DecodeConfig::validate() const {
    if (!(temperature > 0.0)) throw Error("temperature must be > 0");
    if (!(p > 0.0 && p <= 1.0)) throw Error("nucleus p must be in (0, 1]");
    if (k < 1) throw Error("top-k k must be >= 1");
    if (!(lambda_g >= 0.0)) throw Error("lambda_g must be >= 0");
    if (num_samples < 1) throw Error("number of samples must be >= 1");
    if (beam_width < 1) throw Error("beam width must be >= 1");
    if (num_groups < 1) throw Error("number of groups must be >= 1");
    if (max_len < 0) throw Error("max_len must be >= 0");
}

DecodeConfig DecodeConfig::defaults_for(Strategy s) {
    DecodeConfig c;
    c.strategy = s;
    switch (s) {
        case Strategy::kSample:
            c.temperature = 0.7;
            break;
        case Strategy::kTopK:
            c.temperature = 0.7;
            c.k = 2;
            break;
        case Strategy::kNucleus:
            c.temperature = 0.5;
            c.p = 0.95;
            break;
        case Strategy::kDiverseBeam:
            c.lambda_g = 0.1;
            break;
        default:
            break;
    }
    return c;
}

DecodeResult decode_greedy(const LanguageModel& lm, std::span<const TokenId> prompt, int max_len) {
    DecodeResult r;
    for (int t = 0; t < max_len; ++t) {
        const auto lp = lm.next_logprobs(with_prompt(prompt, r.tokens));
        const TokenId best = argmax(lp);
        push(r, best, lp[static_cast<std::size_t>(best)]);
        if (best == lm.eos()) break;
    }
    return r;
}

std::vector<DecodeResult> decode_beam(const LanguageModel& lm, std::span<const TokenId> prompt, int beam_width,
                                      int max_len) {
    if (beam_width < 1) throw Error("beam width must be >= 1");
    const auto width = static_cast<std::size_t>(beam_width);
    std::vector<DecodeResult> live{DecodeResult{}};
    std::vector<DecodeResult> finished;

    for (int t = 0; t < max_len && !live.empty(); ++t) {
        std::vector<DecodeResult> expansions;
        for (const auto& hyp : live) {
            const auto lp = lm.next_logprobs(with_prompt(prompt, hyp.tokens));
            for (std::size_t v = 0; v < lp.size(); ++v) {
                if (lp[v] == kNegInf) continue;
                DecodeResult next = hyp;
                push(next, static_cast<TokenId>(v), lp[v]);
                expansions.push_back(std::move(next));
            }
        }
        std::sort(expansions.begin(), expansions.end(), better);
        if (expansions.size() > width) expansions.resize(width);

        live.clear();
        for (auto& e : expansions) {
            if (e.tokens.back() == lm.eos()) {
                finished.push_back(std::move(e));
            } else {
                live.push_back(std::move(e));
            }
        }

        // Scores never increase, so once the pool's worst kept entry beats
        // every live hypothesis nothing can displace it.
        if (finished.size() >= width && !live.empty()) {
            std::sort(finished.begin(), finished.end(), better);
            finished.resize(width);
            if (finished.back().total_logprob > live.front().total_logprob) live.clear();
        }
    }
    for (auto& h : live) finished.push_back(std::move(h));
    std::sort(finished.begin(), finished.end(), better);
    finished.erase(std::unique(finished.begin(), finished.end(),
                               [](const DecodeResult& a, const DecodeResult& b) { return a.tokens == b.tokens; }),
                   finished.end());
    if (finished.size() > width) finished.resize(width);
    return finished;
}

std::vector<DecodeResult> decode_diverse_beam(const LanguageModel& lm, std::span<const TokenId> prompt,
                                              int num_groups, double lambda_g, int max_len) {
    if (num_groups < 1) throw Error("number of groups must be >= 1");
    std::vector<DecodeResult> groups(static_cast<std::size_t>(num_groups));
    std::vector<bool> done(groups.size(), false);
    for (int t = 0; t < max_len; ++t) {
        std::vector<int> chosen_count(lm.vocab_size(), 0);
        bool any = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (done[g]) continue;
            any = true;
            const auto lp = lm.next_logprobs(with_prompt(prompt, groups[g].tokens));
            std::vector<double> penalized(lp.size());
            for (std::size_t v = 0; v < lp.size(); ++v) penalized[v] = lp[v] - lambda_g * chosen_count[v];
            const TokenId best = argmax(penalized);
            push(groups[g], best, lp[static_cast<std::size_t>(best)]);
            ++chosen_count[static_cast<std::size_t>(best)];
            if (best == lm.eos()) done[g] = true;
        }
        if (!any) break;
    }
    return groups;
}

SamplingSupport sampling_support(std::span<const double> logprobs, const DecodeConfig& config) {
    std::vector<double> scaled(logprobs.begin(), logprobs.end());
    for (double& x : scaled) x /= config.temperature;
    scaled = log_softmax(std::move(scaled));

    std::vector<TokenId> order(scaled.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
        return scaled[static_cast<std::size_t>(a)] > scaled[static_cast<std::size_t>(b)];
    });

    std::size_t keep = order.size();
    if (config.strategy == Strategy::kTopK) {
        keep = std::min(keep, static_cast<std::size_t>(config.k));
    } else if (config.strategy == Strategy::kNucleus) {
        double cumulative = 0.0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            cumulative += std::exp(scaled[static_cast<std::size_t>(order[i])]);
            if (cumulative >= config.p - 1e-12) {
                keep = i + 1;
                break;
            }
        }
    }

    SamplingSupport s;
    double mass = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        const double p = std::exp(scaled[static_cast<std::size_t>(order[i])]);
        s.ids.push_back(order[i]);
        s.probs.push_back(p);
        mass += p;
    }
    for (double& p : s.probs) p /= mass;
    return s;
}

DecodeResult sample_sequence(const LanguageModel& lm, std::span<const TokenId> prompt, const DecodeConfig& config,
                             SplitMix64& rng) {
    if (config.strategy != Strategy::kSample && config.strategy != Strategy::kTopK &&
        config.strategy != Strategy::kNucleus)
        throw Error("sample_sequence needs a sampling strategy");
    DecodeResult r;
    for (int t = 0; t < config.max_len; ++t) {
        const auto lp = lm.next_logprobs(with_prompt(prompt, r.tokens));
        const auto support = sampling_support(lp, config);
        const double u = rng.uniform();
        std::size_t pick = support.ids.size();
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < support.ids.size(); ++i) {
            if (support.probs[i] > 0.0) last_positive = i;
            cumulative += support.probs[i];
            if (u < cumulative && support.probs[i] > 0.0) {
                pick = i;
                break;
            }
        }
        if (pick == support.ids.size()) pick = last_positive;
        const TokenId tok = support.ids[pick];
        push(r, tok, lp[static_cast<std::size_t>(tok)]);
        if (tok == lm.eos()) break;
    }
    return r;
}

std::vector<DecodeResult> run_decode(const LanguageModel& lm, std::span<const TokenId> prompt,
                                     const DecodeConfig& config) {
    config.validate();
    switch (config.strategy) {
        case Strategy::kGreedy:
            return {decode_greedy(lm, prompt, config.max_len)};
        case Strategy::kBeam:
            return decode_beam(lm, prompt, config.beam_width, config.max_len);
        case Strategy::kDiverseBeam:
            return decode_diverse_beam(lm, prompt, config.num_groups, config.lambda_g, config.max_len);
        default:
            break;
    }
    SplitMix64 rng(config.seed);
    std::vector<DecodeResult> out;
    out.reserve(static_cast<std::size_t>(config.num_samples));
    for (int i = 0; i < config.num_samples; ++i) out.push_back(sample_sequence(lm, prompt, config, rng));
    return out;
}

DecodeResult rescore(const LanguageModel& lm, std::span<const TokenId> prompt, std::span<const TokenId> tokens) {
    DecodeResult r;
    std::vector<TokenId> prefix(prompt.begin(), prompt.end());
    for (TokenId t : tokens) {
        const auto lp = lm.next_logprobs(prefix);
        push(r, t, lp.at(static_cast<std::size_t>(t)));
        prefix.push_back(t);
    }
    return r;
}

std::string detokenize(const LanguageModel& lm, const DecodeResult& r) {
    std::string out;
    for (TokenId t : r.tokens) {
        if (t == lm.eos()) continue;
        if (!out.empty()) out.push_back(' ');
        out += lm.token_text(t);
    }
    return out;
}

}  // namespace kpforge::decode
