#include "kpforge/desel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "kpforge/error.hpp"
#include "kpforge/rng.hpp"

namespace kpforge::desel {
namespace {

std::string normalize_phrase(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return to_lower(out);
}

// A deduplicated candidate pool drawn from S.
struct Candidate {
    std::string phrase;
    double prob = 0.0;
    std::size_t order = 0;  // first appearance in S
    std::size_t count = 0;  // appearances in S
};

std::vector<Candidate> candidate_pool(const std::vector<PhraseScore>& greedy, const std::vector<PhraseScore>& samples) {
    std::unordered_set<std::string> in_greedy;
    for (const auto& g : greedy) in_greedy.insert(stem_key(g.phrase));

    std::vector<Candidate> pool;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string key = stem_key(samples[i].phrase);
        if (key.empty() || in_greedy.count(key)) continue;
        auto [it, inserted] = index.emplace(key, pool.size());
        if (inserted) {
            pool.push_back({samples[i].phrase, samples[i].prob, i, 1});
        } else {
            Candidate& c = pool[it->second];
            c.prob = std::max(c.prob, samples[i].prob);
            ++c.count;
        }
    }
    return pool;
}

Selection start_with_greedy(const std::vector<PhraseScore>& greedy) {
    Selection s;
    for (const auto& g : greedy) {
        s.phrases.push_back(g.phrase);
        s.probs.push_back(g.prob);
    }
    return s;
}

void append(Selection& s, const std::vector<Candidate>& chosen) {
    for (const auto& c : chosen) {
        s.phrases.push_back(c.phrase);
        s.probs.push_back(c.prob);
    }
    s.appended = chosen.size();
}

}  // namespace

void DeselConfig::validate() const {
    if (m < 0) throw Error("desel: m must be >= 0");
    if (n < 1) throw Error("desel: n must be >= 1");
    if (!(alpha >= 0.0)) throw Error("desel: alpha must be >= 0");
}

std::vector<std::string> parse_phrase_sequence(std::string_view text) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(';', start);
        if (end == std::string_view::npos) end = text.size();
        std::string phrase = normalize_phrase(text.substr(start, end - start));
        if (!phrase.empty()) {
            std::string key = stem_key(phrase);
            if (!key.empty() && seen.insert(key).second) out.push_back(std::move(phrase));
        }
        start = end + 1;
    }
    return out;
}

std::vector<std::string> parse_phrase_sequence(const std::vector<std::string>& tokens) {
    std::string joined;
    for (const auto& t : tokens) {
        if (!joined.empty()) joined.push_back(' ');
        joined += t;
    }
    return parse_phrase_sequence(joined);
}

double SelfScorer::prob(const std::string& /*doc_id*/, const std::string& phrase) const {
    std::vector<decode::TokenId> ids;
    for (std::size_t i = 0; i < phrase.size();) {
        while (i < phrase.size() && phrase[i] == ' ') ++i;
        std::size_t j = i;
        while (j < phrase.size() && phrase[j] != ' ') ++j;
        if (j > i) {
            const auto id = lm_.token_id(std::string_view(phrase).substr(i, j - i));
            if (!id) return 0.0;
            ids.push_back(*id);
        }
        i = j;
    }
    ids.push_back(lm_.eos());
    const auto scored = decode::rescore(lm_, {}, ids);
    const double logp = length_normalize_ ? scored.total_logprob / static_cast<double>(ids.size())
                                          : scored.total_logprob;
    return std::exp(logp);
}

void TableScorer::add(const std::string& doc_id, const std::string& phrase, double prob) {
    if (!(prob >= 0.0)) throw Error("scores: negative probability for '" + phrase + "'");
    table_[{doc_id, normalize_phrase(phrase)}] = prob;
}

double TableScorer::prob(const std::string& doc_id, const std::string& phrase) const {
    auto it = table_.find({doc_id, normalize_phrase(phrase)});
    if (it == table_.end()) throw Error("unscored phrase '" + phrase + "' in document " + doc_id);
    return it->second;
}

std::vector<PhraseScore> score_phrases(const PhraseScorer& scorer, const std::string& doc_id,
                                       const std::vector<std::string>& phrases) {
    std::vector<PhraseScore> out;
    out.reserve(phrases.size());
    for (const auto& p : phrases) out.push_back({p, scorer.prob(doc_id, p)});
    return out;
}

Selection desel_select(const std::vector<PhraseScore>& greedy, const std::vector<PhraseScore>& samples,
                       const DeselConfig& config) {
    config.validate();
    Selection s = start_with_greedy(greedy);
    auto pool = candidate_pool(greedy, samples);
    std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.prob > b.prob; });

    std::vector<Candidate> chosen;
    if (greedy.empty()) {
        s.flagged = true;
        for (const auto& c : pool) {
            if (chosen.size() >= static_cast<std::size_t>(config.m)) break;
            chosen.push_back(c);
        }
    } else {
        double total = 0.0;
        for (const auto& g : greedy) total += g.prob;
        s.threshold = config.alpha / static_cast<double>(greedy.size()) * total;
        for (const auto& c : pool) {
            if (chosen.size() >= static_cast<std::size_t>(config.m) || c.prob < s.threshold) break;
            chosen.push_back(c);
        }
    }
    append(s, chosen);
    return s;
}

BaselineMethod parse_baseline(std::string_view name) {
    if (name == "random") return BaselineMethod::kRandom;
    if (name == "freq" || name == "freqfs") return BaselineMethod::kFreq;
    if (name == "overlap") return BaselineMethod::kOverlap;
    throw Error("unknown selection method '" + std::string(name) + "'");
}

Selection baseline_select(const std::vector<PhraseScore>& greedy, const std::vector<PhraseScore>& samples,
                          BaselineMethod method, int m, const BaselineContext& context) {
    if (m < 0) throw Error("selection budget m must be >= 0");
    const auto budget = static_cast<std::size_t>(m);
    Selection s = start_with_greedy(greedy);
    auto pool = candidate_pool(greedy, samples);

    std::vector<Candidate> chosen;
    switch (method) {
        case BaselineMethod::kRandom: {
            SplitMix64 rng(context.seed);
            const std::size_t take = std::min(budget, pool.size());
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                chosen.push_back(pool[i]);
            }
            break;
        }
        case BaselineMethod::kFreq: {
            std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
                if (a.count != b.count) return a.count > b.count;
                return a.prob > b.prob;
            });
            for (std::size_t i = 0; i < pool.size() && i < budget; ++i) chosen.push_back(pool[i]);
            break;
        }
        case BaselineMethod::kOverlap: {
            if (context.embedder == nullptr) throw Error("overlap selection needs an embedder");
            const auto doc_vec = context.embedder->embed(context.document_text);
            std::vector<std::pair<double, std::size_t>> ranked;
            for (std::size_t i = 0; i < pool.size(); ++i)
                ranked.emplace_back(metrics::cosine(context.embedder->embed(pool[i].phrase), doc_vec), i);
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) chosen.push_back(pool[ranked[i].second]);
            break;
        }
    }
    append(s, chosen);
    return s;
}

}  // namespace kpforge::desel
