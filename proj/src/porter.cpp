#include "kpforge/text.hpp"

#include <array>
#include <string>
#include <string_view>

namespace kpforge {
namespace {

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// A letter is a consonant unless it is a vowel, or a 'y' preceded by a
// consonant. Status depends only on earlier letters, so a prefix can be
// classified on its own.
bool is_consonant(std::string_view w, std::size_t i) {
    if (is_vowel_letter(w[i])) return false;
    if (w[i] != 'y') return true;
    // Walk back over a run of 'y's; each one flips the status of the next.
    bool flip = false;
    while (i > 0 && w[i] == 'y') {
        flip = !flip;
        --i;
    }
    return (w[i] == 'y' || !is_vowel_letter(w[i])) != flip;
}

// m in [C](VC){m}[V].
int measure(std::string_view stem) {
    int m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < stem.size(); ++i) {
        const bool cons = is_consonant(stem, i);
        if (cons && prev_vowel) ++m;
        prev_vowel = !cons;
    }
    return m;
}

bool contains_vowel(std::string_view stem) {
    for (std::size_t i = 0; i < stem.size(); ++i)
        if (!is_consonant(stem, i)) return true;
    return false;
}

bool ends_double_consonant(std::string_view w) {
    const std::size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: ends consonant-vowel-consonant and the last letter is not w, x or y.
bool ends_cvc(std::string_view w) {
    const std::size_t n = w.size();
    return n >= 3 && is_consonant(w, n - 3) && !is_consonant(w, n - 2) && is_consonant(w, n - 1) &&
           w[n - 1] != 'w' && w[n - 1] != 'x' && w[n - 1] != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

struct Rule {
    std::string_view suffix;
    std::string_view replacement;
};

enum class Condition { kNone, kMeasureAbove0, kMeasureAbove1, kMeasureAbove1AndST };

bool holds(Condition c, std::string_view stem) {
    switch (c) {
        case Condition::kNone:
            return true;
        case Condition::kMeasureAbove0:
            return measure(stem) > 0;
        case Condition::kMeasureAbove1:
            return measure(stem) > 1;
        case Condition::kMeasureAbove1AndST:
            return measure(stem) > 1 && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
    }
    return false;
}

// The first rule whose suffix matches decides; if its condition fails the
// word is left alone. Rule tables are ordered so this equals longest match.
template <std::size_t N>
void apply_first(std::string& w, const std::array<Rule, N>& rules, Condition cond) {
    for (const Rule& r : rules) {
        if (!ends_with(w, r.suffix)) continue;
        std::string_view stem(w.data(), w.size() - r.suffix.size());
        if (holds(cond, stem)) w = std::string(stem) + std::string(r.replacement);
        return;
    }
}

void step1a(std::string& w) {
    static constexpr std::array<Rule, 4> rules{{{"sses", "ss"}, {"ies", "i"}, {"ss", "ss"}, {"s", ""}}};
    apply_first(w, rules, Condition::kNone);
}

void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
        if (measure(std::string_view(w).substr(0, w.size() - 3)) > 0) w.pop_back();
        return;
    }
    std::size_t cut = 0;
    if (ends_with(w, "ed") && contains_vowel(std::string_view(w).substr(0, w.size() - 2))) {
        cut = 2;
    } else if (ends_with(w, "ing") && contains_vowel(std::string_view(w).substr(0, w.size() - 3))) {
        cut = 3;
    }
    if (cut == 0) return;
    w.resize(w.size() - cut);

    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
        w.push_back('e');
    } else if (ends_double_consonant(w)) {
        const char last = w.back();
        if (last != 'l' && last != 's' && last != 'z') w.pop_back();
    } else if (measure(w) == 1 && ends_cvc(w)) {
        w.push_back('e');
    }
}

void step1c(std::string& w) {
    if (ends_with(w, "y") && contains_vowel(std::string_view(w).substr(0, w.size() - 1))) w.back() = 'i';
}

void step2(std::string& w) {
    static constexpr std::array<Rule, 20> rules{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
    }};
    apply_first(w, rules, Condition::kMeasureAbove0);
}

void step3(std::string& w) {
    static constexpr std::array<Rule, 7> rules{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    }};
    apply_first(w, rules, Condition::kMeasureAbove0);
}

void step4(std::string& w) {
    static constexpr std::array<Rule, 19> rules{{
        {"al", ""},    {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},  {"able", ""}, {"ible", ""},
        {"ant", ""},   {"ement", ""}, {"ment", ""}, {"ent", ""}, {"ion", ""}, {"ou", ""},   {"ism", ""},
        {"ate", ""},   {"iti", ""},  {"ous", ""},  {"ive", ""}, {"ize", ""},
    }};
    for (const Rule& r : rules) {
        if (!ends_with(w, r.suffix)) continue;
        std::string_view stem(w.data(), w.size() - r.suffix.size());
        const Condition cond = r.suffix == "ion" ? Condition::kMeasureAbove1AndST : Condition::kMeasureAbove1;
        if (holds(cond, stem)) w.resize(stem.size());
        return;
    }
}

void step5a(std::string& w) {
    if (!ends_with(w, "e")) return;
    std::string_view stem(w.data(), w.size() - 1);
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !ends_cvc(stem))) w.pop_back();
}

void step5b(std::string& w) {
    if (ends_with(w, "ll") && measure(std::string_view(w).substr(0, w.size() - 1)) > 1) w.pop_back();
}

}  // namespace

std::string porter_stem(std::string_view word) {
    std::string w(word);
    if (w.empty()) return w;
    step1a(w);
    step1b(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5a(w);
    step5b(w);
    return w;
}

}  // namespace kpforge
