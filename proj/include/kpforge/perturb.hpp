#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kpforge/text.hpp"

namespace kpforge::perturb {

/// canonical phrase -> variant phrases. Keys are stored lowercased.
class VariationMap {
public:
    /// Throws kpforge::Error when a variant stems to its canonical form or
    /// the variant list is empty.
    void add(const std::string& canonical, std::vector<std::string> variants);

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    /// Lookup by stem key; nullptr when absent.
    const std::vector<std::string>* variants_for(const std::string& phrase) const;
    const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

private:
    std::map<std::string, std::vector<std::string>> entries_;
    std::map<std::string, std::string> by_key_;  // stem key -> canonical
};

/// A phrase before and after substitution.
struct Target {
    std::string before;
    std::string after;
};

/// One replaced span. `offset` and `length` locate the new text in the
/// perturbed field; `original` is what stood there before.
struct Substitution {
    enum class Field { kTitle, kAbstract };
    Field field = Field::kAbstract;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::string original;
};

struct PerturbedDocument {
    Document doc;
    std::vector<Target> targets;
    std::vector<Substitution> log;
    std::vector<std::string> warnings;
};

/// Replaces every occurrence of each gold keyphrase that has variations and
/// is present in the document. One variant per canonical is drawn with a
/// generator seeded from (seed, document id); all its occurrences use it and
/// the gold list swaps to it. Occurrences are matched on stemmed token
/// boundaries within the title or the abstract. POS tags are dropped since
/// they no longer align.
PerturbedDocument substitute_variations(const Document& doc, const VariationMap& varmap, std::uint64_t seed);

/// Undoes a substitution log. Gold keyphrases and POS tags are not restored.
Document revert_substitutions(const Document& perturbed, const std::vector<Substitution>& log);

/// Paraphrase mode: gold keyphrases present in both versions become targets
/// that keep their own surface on both sides.
std::vector<Target> paraphrase_targets(const Document& original, const Document& paraphrased);

struct DocumentTargets {
    std::string id;
    std::vector<Target> targets;
};

struct PerturbReport {
    double before_recall = 0.0;
    double after_recall = 0.0;
    double delta = 0.0;
    double pct_drop = 0.0;  // percent
    std::size_t documents = 0;
    std::size_t targets = 0;
};

/// Recall of each document's targets (stem match against `before` phrases in
/// the original predictions and `after` phrases in the perturbed ones),
/// macro-averaged over documents that have targets. Documents missing from a
/// prediction map count as empty predictions. Throws "nothing perturbed" when
/// no document has a target.
PerturbReport recall_delta(const std::vector<DocumentTargets>& targets,
                           const std::map<std::string, std::vector<std::string>>& preds_before,
                           const std::map<std::string, std::vector<std::string>>& preds_after);

}  // namespace kpforge::perturb
