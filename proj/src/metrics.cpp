#include "kpforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "kpforge/error.hpp"
#include "kpforge/rng.hpp"

namespace kpforge::metrics {
namespace {

std::vector<double> constant_unit(std::size_t dim) {
    return std::vector<double>(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
}

bool normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return false;
    for (double& x : v) x /= norm;
    return true;
}

std::size_t count_matches(const std::vector<std::string>& pred_keys, const std::vector<std::string>& ref_keys) {
    const std::unordered_set<std::string> refs(ref_keys.begin(), ref_keys.end());
    return static_cast<std::size_t>(
        std::count_if(pred_keys.begin(), pred_keys.end(), [&](const std::string& k) { return refs.count(k) > 0; }));
}

PRF prf_from_counts(std::size_t matches, std::size_t num_preds, std::size_t num_refs) {
    if (num_preds == 0 && num_refs == 0) return {1.0, 1.0, 1.0};
    if (num_preds == 0 || num_refs == 0) return {};
    PRF s;
    s.precision = static_cast<double>(matches) / static_cast<double>(num_preds);
    s.recall = static_cast<double>(matches) / static_cast<double>(num_refs);
    s.f1 = harmonic(s.precision, s.recall);
    return s;
}

}  // namespace

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

StemmedPhrases dedupe_by_stem(const std::vector<std::string>& phrases) {
    StemmedPhrases out;
    std::unordered_set<std::string> seen;
    for (const auto& p : phrases) {
        std::string key = stem_key(p);
        if (key.empty() || !seen.insert(key).second) continue;
        out.phrases.push_back(p);
        out.keys.push_back(std::move(key));
    }
    return out;
}

bool is_present(const Document& doc, std::string_view phrase) {
    const auto tokens = tokenize(phrase);
    if (tokens.empty() || tokens.size() > doc.stems.size()) return false;
    const auto needle = stem_tokens(tokens);
    return std::search(doc.stems.begin(), doc.stems.end(), needle.begin(), needle.end()) != doc.stems.end();
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_present_absent(
    const Document& doc, const std::vector<std::string>& phrases) {
    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    for (const auto& p : phrases) (is_present(doc, p) ? out.first : out.second).push_back(p);
    return out;
}

PRF f1_at_m(const std::vector<std::string>& preds, const std::vector<std::string>& refs) {
    const auto p = dedupe_by_stem(preds);
    const auto r = dedupe_by_stem(refs);
    return prf_from_counts(count_matches(p.keys, r.keys), p.keys.size(), r.keys.size());
}

PRF f1_at_k(const std::vector<std::string>& preds, const std::vector<std::string>& refs, std::size_t k) {
    auto p = dedupe_by_stem(preds).phrases;
    if (p.size() > k) p.resize(k);
    return f1_at_m(p, refs);
}

std::vector<double> TrigramEmbedder::embed(std::string_view phrase) const {
    std::string padded = " ";
    bool pending_space = false;
    for (char c : to_lower(phrase)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = padded.size() > 1;
            continue;
        }
        if (pending_space) padded.push_back(' ');
        pending_space = false;
        padded.push_back(c);
    }
    padded.push_back(' ');

    std::vector<double> v(kDimension, 0.0);
    if (padded.size() < 3 || padded == "  ") return constant_unit(kDimension);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
        v[fnv1a(std::string_view(padded).substr(i, 3)) % kDimension] += 1.0;
    if (!normalize(v)) return constant_unit(kDimension);
    return v;
}

WordVectorEmbedder::WordVectorEmbedder(std::unordered_map<std::string, std::vector<double>> vectors,
                                       std::size_t dim)
    : vectors_(std::move(vectors)), dim_(dim) {
    if (dim_ == 0) throw Error("word vectors: zero dimension");
}

WordVectorEmbedder WordVectorEmbedder::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open word vector file " + path);
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        std::vector<double> v;
        double x;
        while (ls >> x) v.push_back(x);
        if (line_no == 1 && v.size() == 1) continue;  // "count dim" header
        if (v.empty()) throw Error(path + ":" + std::to_string(line_no) + ": word without a vector");
        if (dim == 0) dim = v.size();
        if (v.size() != dim) throw Error(path + ":" + std::to_string(line_no) + ": inconsistent vector dimension");
        vectors.emplace(to_lower(word), std::move(v));
    }
    if (dim == 0) throw Error("word vector file " + path + " is empty");
    return WordVectorEmbedder(std::move(vectors), dim);
}

std::vector<double> WordVectorEmbedder::embed(std::string_view phrase) const {
    std::vector<double> sum(dim_, 0.0);
    std::size_t known = 0;
    for (const Token& t : tokenize(phrase)) {
        auto it = vectors_.find(t.surface);
        if (it == vectors_.end()) continue;
        for (std::size_t i = 0; i < dim_; ++i) sum[i] += it->second[i];
        ++known;
    }
    if (known == 0 || !normalize(sum)) return constant_unit(dim_);
    return sum;
}

std::shared_ptr<const PhraseEmbedder> default_embedder() {
    static const auto instance = std::make_shared<const TrigramEmbedder>();
    return instance;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

PRF sem_scores(const SimilarityMatrix& similarity) {
    const std::size_t rows = similarity.size();
    const std::size_t cols = rows == 0 ? 0 : similarity.front().size();
    if (rows == 0 || cols == 0) return {};
    std::vector<double> col_max(cols, 0.0);
    double row_sum = 0.0;
    for (const auto& row : similarity) {
        if (row.size() != cols) throw Error("similarity matrix is ragged");
        double best = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            best = std::max(best, row[j]);
            col_max[j] = std::max(col_max[j], row[j]);
        }
        row_sum += best;
    }
    double col_sum = 0.0;
    for (double m : col_max) col_sum += m;
    PRF s;
    s.precision = std::min(1.0, row_sum / static_cast<double>(rows));
    s.recall = std::min(1.0, col_sum / static_cast<double>(cols));
    s.f1 = harmonic(s.precision, s.recall);
    return s;
}

PRF sem_scores(const std::vector<std::string>& preds, const std::vector<std::string>& refs,
               const PhraseEmbedder& embedder) {
    const auto p = dedupe_by_stem(preds).phrases;
    const auto r = dedupe_by_stem(refs).phrases;
    if (p.empty() || r.empty()) return {};
    std::vector<std::vector<double>> pe, re;
    for (const auto& x : p) pe.push_back(embedder.embed(x));
    for (const auto& x : r) re.push_back(embedder.embed(x));
    SimilarityMatrix sim(p.size(), std::vector<double>(r.size()));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) sim[i][j] = cosine(pe[i], re[j]);
    return sem_scores(sim);
}

MetricReport evaluate_document(const Document& doc, const std::vector<std::string>& preds,
                               const PhraseEmbedder& embedder) {
    MetricReport m;
    m.id = doc.id;
    const auto p = dedupe_by_stem(preds);
    const auto r = dedupe_by_stem(doc.gold_keyphrases);
    const auto [pred_present, pred_absent] = split_present_absent(doc, p.phrases);
    const auto [ref_present, ref_absent] = split_present_absent(doc, r.phrases);

    m.present = f1_at_m(pred_present, ref_present);
    m.absent = f1_at_m(pred_absent, ref_absent);
    m.at5_present = f1_at_k(pred_present, ref_present, 5).f1;
    m.semantic = sem_scores(p.phrases, r.phrases, embedder);

    auto keys = [](const std::vector<std::string>& v) { return dedupe_by_stem(v).keys; };
    m.counts.num_preds = p.phrases.size();
    m.counts.num_refs = r.phrases.size();
    m.counts.num_present_refs = ref_present.size();
    m.counts.num_absent_refs = ref_absent.size();
    m.counts.num_present_preds = pred_present.size();
    m.counts.num_absent_preds = pred_absent.size();
    m.counts.present_matches = count_matches(keys(pred_present), keys(ref_present));
    m.counts.absent_matches = count_matches(keys(pred_absent), keys(ref_absent));
    return m;
}

MetricReport aggregate(const std::vector<MetricReport>& rows, Aggregation mode) {
    MetricReport out;
    out.id = "corpus";
    if (rows.empty()) return out;
    const double n = static_cast<double>(rows.size());
    auto add = [](PRF& acc, const PRF& x) {
        acc.precision += x.precision;
        acc.recall += x.recall;
        acc.f1 += x.f1;
    };
    auto scale = [n](PRF& acc) {
        acc.precision /= n;
        acc.recall /= n;
        acc.f1 /= n;
    };
    for (const auto& r : rows) {
        add(out.present, r.present);
        add(out.absent, r.absent);
        add(out.semantic, r.semantic);
        out.at5_present += r.at5_present;
        out.counts.num_preds += r.counts.num_preds;
        out.counts.num_refs += r.counts.num_refs;
        out.counts.num_present_refs += r.counts.num_present_refs;
        out.counts.num_absent_refs += r.counts.num_absent_refs;
        out.counts.num_present_preds += r.counts.num_present_preds;
        out.counts.num_absent_preds += r.counts.num_absent_preds;
        out.counts.present_matches += r.counts.present_matches;
        out.counts.absent_matches += r.counts.absent_matches;
    }
    scale(out.present);
    scale(out.absent);
    scale(out.semantic);
    out.at5_present /= n;
    if (mode == Aggregation::kMicro) {
        const auto& c = out.counts;
        out.present = prf_from_counts(c.present_matches, c.num_present_preds, c.num_present_refs);
        out.absent = prf_from_counts(c.absent_matches, c.num_absent_preds, c.num_absent_refs);
    }
    return out;
}

}  // namespace kpforge::metrics
