#include "kpforge/perturb.hpp"

#include <algorithm>
#include <unordered_set>

#include "kpforge/error.hpp"
#include "kpforge/metrics.hpp"
#include "kpforge/rng.hpp"

namespace kpforge::perturb {
namespace {

struct Span {
    Substitution::Field field;
    std::size_t begin = 0;  // byte offsets in the original field
    std::size_t end = 0;
    const std::string* replacement = nullptr;
};

struct FieldTokens {
    Substitution::Field field;
    const std::string* text;
    std::vector<Token> tokens;
    std::vector<std::string> stems;
    std::vector<bool> used;
};

// Non-overlapping left-to-right matches of `needle` among unused tokens.
std::size_t mark_matches(FieldTokens& f, const std::vector<std::string>& needle, const std::string& replacement,
                         std::vector<Span>& spans) {
    std::size_t found = 0;
    if (needle.empty() || needle.size() > f.stems.size()) return 0;
    for (std::size_t i = 0; i + needle.size() <= f.stems.size();) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size() && hit; ++j)
            hit = !f.used[i + j] && f.stems[i + j] == needle[j];
        if (!hit) {
            ++i;
            continue;
        }
        const Token& last = f.tokens[i + needle.size() - 1];
        spans.push_back({f.field, f.tokens[i].offset, last.offset + last.surface.size(), &replacement});
        for (std::size_t j = 0; j < needle.size(); ++j) f.used[i + j] = true;
        i += needle.size();
        ++found;
    }
    return found;
}

std::string splice(const std::string& text, Substitution::Field field, std::vector<Span> spans,
                   std::vector<Substitution>& log) {
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
    std::string out;
    std::size_t cursor = 0;
    for (const Span& s : spans) {
        if (s.field != field) continue;
        out.append(text, cursor, s.begin - cursor);
        log.push_back({field, out.size(), s.replacement->size(), text.substr(s.begin, s.end - s.begin)});
        out += *s.replacement;
        cursor = s.end;
    }
    out.append(text, cursor, std::string::npos);
    return out;
}

FieldTokens field_tokens(Substitution::Field field, const std::string& text) {
    FieldTokens f{field, &text, tokenize(text), {}, {}};
    f.stems = stem_tokens(f.tokens);
    f.used.assign(f.tokens.size(), false);
    return f;
}

}  // namespace

void VariationMap::add(const std::string& canonical, std::vector<std::string> variants) {
    const std::string lowered = to_lower(canonical);
    const std::string key = stem_key(lowered);
    if (key.empty()) throw Error("variation map: empty canonical phrase");
    if (variants.empty()) throw Error("variation map: no variants for '" + canonical + "'");
    for (auto& v : variants) {
        v = to_lower(v);
        if (stem_key(v).empty()) throw Error("variation map: empty variant for '" + canonical + "'");
        if (stem_key(v) == key) throw Error("variation map: variant '" + v + "' equals its canonical form");
    }
    if (!by_key_.emplace(key, lowered).second)
        throw Error("variation map: duplicate canonical '" + canonical + "'");
    entries_.emplace(lowered, std::move(variants));
}

const std::vector<std::string>* VariationMap::variants_for(const std::string& phrase) const {
    auto it = by_key_.find(stem_key(phrase));
    if (it == by_key_.end()) return nullptr;
    return &entries_.at(it->second);
}

PerturbedDocument substitute_variations(const Document& doc, const VariationMap& varmap, std::uint64_t seed) {
    PerturbedDocument out;
    out.doc = doc;
    if (varmap.empty()) return out;

    SplitMix64 rng(mix_seed(seed, fnv1a(doc.id)));
    FieldTokens title = field_tokens(Substitution::Field::kTitle, doc.title);
    FieldTokens abstract = field_tokens(Substitution::Field::kAbstract, doc.abstract);
    std::vector<Span> spans;
    std::vector<std::string> gold = doc.gold_keyphrases;
    std::unordered_set<std::string> done;

    for (std::string& g : gold) {
        const auto* variants = varmap.variants_for(g);
        if (variants == nullptr) continue;
        const std::string key = stem_key(g);
        if (!done.insert(key).second) continue;
        if (!metrics::is_present(doc, g)) {
            out.warnings.push_back("document " + doc.id + ": canonical '" + g + "' not present, skipped");
            continue;
        }
        const std::string& chosen = (*variants)[rng.below(variants->size())];
        const auto needle = stem_tokens(tokenize(g));
        const std::size_t hits = mark_matches(title, needle, chosen, spans) + mark_matches(abstract, needle, chosen, spans);
        if (hits == 0) {
            out.warnings.push_back("document " + doc.id + ": canonical '" + g + "' only spans the title boundary, skipped");
            continue;
        }
        out.targets.push_back({g, chosen});
        g = chosen;
    }
    if (out.targets.empty()) return out;

    const std::string new_title = splice(doc.title, Substitution::Field::kTitle, spans, out.log);
    const std::string new_abstract = splice(doc.abstract, Substitution::Field::kAbstract, spans, out.log);
    out.doc = make_document(doc.id, new_title, new_abstract, std::move(gold));
    return out;
}

Document revert_substitutions(const Document& perturbed, const std::vector<Substitution>& log) {
    std::string title = perturbed.title;
    std::string abstract = perturbed.abstract;
    std::vector<const Substitution*> order;
    for (const auto& s : log) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](const Substitution* a, const Substitution* b) { return a->offset > b->offset; });
    for (const Substitution* s : order) {
        std::string& text = s->field == Substitution::Field::kTitle ? title : abstract;
        if (s->offset + s->length > text.size()) throw Error("substitution log does not fit document " + perturbed.id);
        text.replace(s->offset, s->length, s->original);
    }
    return make_document(perturbed.id, title, abstract, perturbed.gold_keyphrases);
}

std::vector<Target> paraphrase_targets(const Document& original, const Document& paraphrased) {
    std::vector<Target> out;
    for (const auto& g : metrics::dedupe_by_stem(original.gold_keyphrases).phrases)
        if (metrics::is_present(original, g) && metrics::is_present(paraphrased, g)) out.push_back({g, g});
    return out;
}

PerturbReport recall_delta(const std::vector<DocumentTargets>& targets,
                           const std::map<std::string, std::vector<std::string>>& preds_before,
                           const std::map<std::string, std::vector<std::string>>& preds_after) {
    auto keys_of = [](const std::map<std::string, std::vector<std::string>>& preds, const std::string& id) {
        std::unordered_set<std::string> keys;
        auto it = preds.find(id);
        if (it != preds.end())
            for (const auto& p : it->second) keys.insert(stem_key(p));
        return keys;
    };

    PerturbReport r;
    double before_sum = 0.0, after_sum = 0.0;
    for (const auto& d : targets) {
        if (d.targets.empty()) continue;
        const auto before = keys_of(preds_before, d.id);
        const auto after = keys_of(preds_after, d.id);
        std::size_t hit_before = 0, hit_after = 0;
        for (const auto& t : d.targets) {
            hit_before += before.count(stem_key(t.before));
            hit_after += after.count(stem_key(t.after));
        }
        const double n = static_cast<double>(d.targets.size());
        before_sum += static_cast<double>(hit_before) / n;
        after_sum += static_cast<double>(hit_after) / n;
        ++r.documents;
        r.targets += d.targets.size();
    }
    if (r.documents == 0) throw Error("nothing perturbed");
    r.before_recall = before_sum / static_cast<double>(r.documents);
    r.after_recall = after_sum / static_cast<double>(r.documents);
    r.delta = r.after_recall - r.before_recall;
    r.pct_drop = r.before_recall > 0.0 ? -r.delta / r.before_recall * 100.0 : 0.0;
    return r;
}

}  // namespace kpforge::perturb
