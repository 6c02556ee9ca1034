#include "kpforge/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <CLI11.hpp>

#include "kpforge/attnprobe.hpp"
#include "kpforge/decode.hpp"
#include "kpforge/desel.hpp"
#include "kpforge/error.hpp"
#include "kpforge/io.hpp"
#include "kpforge/metrics.hpp"
#include "kpforge/mprank.hpp"
#include "kpforge/parallel.hpp"
#include "kpforge/perturb.hpp"
#include "kpforge/rng.hpp"
#include "kpforge/stats.hpp"
#include "kpforge/version.hpp"

namespace kpforge::cli {
namespace {

using io::json;

struct Globals {
    std::uint64_t seed = 7;
    int threads = 0;
    bool skip_bad = false;
    int verbosity = 0;
};

class Context {
public:
    Context(const Globals& g, std::ostream& out, std::ostream& err) : globals(g), out(out), err(err) {}

    const Globals& globals;
    std::ostream& out;
    std::ostream& err;

    std::size_t threads() const {
        if (globals.threads > 0) return static_cast<std::size_t>(globals.threads);
        if (const char* env = std::getenv("KPFORGE_THREADS")) {
            char* end = nullptr;
            const long n = std::strtol(env, &end, 10);
            if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
            throw Error("KPFORGE_THREADS must be a positive integer");
        }
        return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    }

    void info(const std::string& msg) const {
        if (globals.verbosity > 0) err << "kpforge: " << msg << "\n";
    }
    void warn(const std::string& msg) const { err << "kpforge: warning: " << msg << "\n"; }

    io::ReadOptions read_options() const {
        return {globals.skip_bad, [this](const std::string& m) { warn(m); }};
    }

    /// Writes `content` to `path`, or to the output stream when path is empty.
    void emit(const std::string& path, const std::string& content) const {
        if (path.empty() || path == "-") {
            out << content;
            out.flush();
            return;
        }
        io::Writer w(path);
        w.write(content);
        w.close();
        info("wrote " + path);
    }
};

std::string jsonl(const json& header, const std::vector<json>& records) {
    std::string s = header.dump();
    s.push_back('\n');
    for (const auto& r : records) {
        s += r.dump();
        s.push_back('\n');
    }
    return s;
}

std::unique_ptr<metrics::PhraseEmbedder> load_embedder(const std::string& path) {
    if (path.empty()) return std::make_unique<metrics::TrigramEmbedder>();
    return std::make_unique<metrics::WordVectorEmbedder>(metrics::WordVectorEmbedder::from_file(path));
}

std::string fixed(double x, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
    std::string method = "mprank";
    std::string corpus;
    std::string attn;
    std::string out;
    std::string stopwords;
    std::size_t k = 10;
    std::size_t max_len = 5;
    int layer = -1;
    int head = -1;
};

mprank::MPRankConfig candidate_config(std::size_t max_len, const std::string& stopwords) {
    mprank::MPRankConfig cfg;
    cfg.candidates.max_len = max_len;
    if (!stopwords.empty())
        cfg.candidates.stopwords = std::make_shared<const StopwordSet>(StopwordSet::from_file(stopwords));
    return cfg;
}

void run_extract(const ExtractArgs& a, const Context& ctx) {
    if (a.method != "mprank" && a.method != "attention") throw Error("unknown extraction method '" + a.method + "'");
    const auto cfg = candidate_config(a.max_len, a.stopwords);
    const auto corpus = io::read_corpus(a.corpus, ctx.read_options());
    ctx.info("read " + std::to_string(corpus.size()) + " documents");

    json config = {{"method", a.method}, {"corpus", a.corpus}, {"k", a.k}, {"max_len", a.max_len},
                   {"stopwords", a.stopwords.empty() ? "builtin" : a.stopwords}};
    auto to_prediction = [](const std::string& id, const std::vector<mprank::RankedPhrase>& ranked) {
        io::Prediction p{id, {}, {}};
        for (const auto& r : ranked) {
            p.phrases.push_back(r.phrase);
            p.scores.push_back(r.score);
        }
        return io::prediction_record(p);
    };

    std::vector<json> records;
    if (a.method == "mprank") {
        config["cut_distance"] = cfg.cut_distance;
        config["alpha_boost"] = cfg.alpha_boost;
        config["damping"] = cfg.damping;
        records = parallel_map(
            corpus, [&](const Document& d) { return to_prediction(d.id, mprank::mprank_extract(d, a.k, cfg)); },
            ctx.threads());
    } else {
        if (a.attn.empty() || a.layer < 0 || a.head < 0)
            throw Error("attention extraction needs --attn, --layer and --head");
        config["attn"] = a.attn;
        config["layer"] = a.layer;
        config["head"] = a.head;
        const auto exports = io::read_attention(a.attn, ctx.read_options());
        std::unordered_map<std::string, const attnprobe::DocumentExport*> by_id;
        for (const auto& e : exports) by_id[e.doc_id] = &e;
        records = parallel_map(
            corpus,
            [&](const Document& d) {
                auto it = by_id.find(d.id);
                if (it == by_id.end()) throw Error("no attention export for document '" + d.id + "'");
                for (const auto& m : it->second->heads)
                    if (m.layer == a.layer && m.head == a.head)
                        return to_prediction(d.id, attnprobe::attention_rank_extract(d, m, it->second->word_to_tokens,
                                                                                     a.k, cfg.candidates));
                throw Error("document '" + d.id + "' has no head " + std::to_string(a.layer) + ":" +
                            std::to_string(a.head));
            },
            ctx.threads());
    }
    ctx.emit(a.out, jsonl(io::header_record("extract", config), records));
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
    std::string corpus;
    std::string attn;
    std::string out;
    std::size_t top = 0;
    std::size_t max_len = 5;
};

void run_probe(const ProbeArgs& a, const Context& ctx) {
    const auto corpus = io::read_corpus(a.corpus, ctx.read_options());
    const auto exports = io::read_attention(a.attn, ctx.read_options());
    mprank::MPRankConfig cfg;
    cfg.candidates.max_len = a.max_len;
    const auto result = attnprobe::best_heads(corpus, exports, a.top, cfg);

    const json config = {{"corpus", a.corpus}, {"attn", a.attn}, {"top", a.top}, {"max_len", a.max_len}};
    std::ostringstream s;
    s << std::setprecision(17);
    s << "# " << io::header_record("probe", config).dump() << "\n";
    s << "# documents_used=" << result.documents_used << " documents_skipped=" << result.documents_skipped << "\n";
    s << "rank_rho\trank_tau\tlayer\thead\tmean_rho\tmean_tau\tdocuments\n";
    for (const auto& h : result.by_rho)
        s << h.rank_by_rho << '\t' << h.rank_by_tau << '\t' << h.layer << '\t' << h.head << '\t' << h.mean_rho << '\t'
          << h.mean_tau << '\t' << h.documents << '\n';
    ctx.emit(a.out, s.str());
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
    std::string mock;
    std::string corpus;
    std::string out;
    std::string strategy = "greedy";
    double p = 0.95;
    double temperature = 1.0;
    int k = 2;
    int n = 10;
    int beam = 10;
    int groups = 10;
    double lambda = 0.1;
    int max_len = 64;
    CLI::Option* p_opt = nullptr;
    CLI::Option* temp_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* beam_opt = nullptr;
    CLI::Option* groups_opt = nullptr;
    CLI::Option* lambda_opt = nullptr;
    CLI::Option* max_len_opt = nullptr;
};

decode::DecodeConfig resolve_decode_config(const DecodeArgs& a) {
    auto cfg = decode::DecodeConfig::defaults_for(decode::parse_strategy(a.strategy));
    if (a.p_opt->count()) cfg.p = a.p;
    if (a.temp_opt->count()) cfg.temperature = a.temperature;
    if (a.k_opt->count()) cfg.k = a.k;
    if (a.n_opt->count()) cfg.num_samples = a.n;
    if (a.beam_opt->count()) cfg.beam_width = a.beam;
    if (a.groups_opt->count()) cfg.num_groups = a.groups;
    if (a.lambda_opt->count()) cfg.lambda_g = a.lambda;
    if (a.max_len_opt->count()) cfg.max_len = a.max_len;
    cfg.validate();
    return cfg;
}

json decode_config_json(const decode::DecodeConfig& c) {
    json j = {{"strategy", std::string(decode::strategy_name(c.strategy))}, {"max_len", c.max_len}};
    switch (c.strategy) {
        case decode::Strategy::kGreedy:
            break;
        case decode::Strategy::kBeam:
            j["beam_width"] = c.beam_width;
            break;
        case decode::Strategy::kDiverseBeam:
            j["num_groups"] = c.num_groups;
            j["lambda_g"] = c.lambda_g;
            break;
        case decode::Strategy::kSample:
            j["num_samples"] = c.num_samples;
            j["temperature"] = c.temperature;
            break;
        case decode::Strategy::kTopK:
            j["num_samples"] = c.num_samples;
            j["temperature"] = c.temperature;
            j["k"] = c.k;
            break;
        case decode::Strategy::kNucleus:
            j["num_samples"] = c.num_samples;
            j["temperature"] = c.temperature;
            j["p"] = c.p;
            break;
    }
    return j;
}

void run_decode_cmd(const DecodeArgs& a, const Context& ctx) {
    const auto lm = decode::NgramMockLm::from_file(a.mock);
    const auto cfg = resolve_decode_config(a);
    const auto corpus = io::read_corpus(a.corpus, ctx.read_options());
    json params = decode_config_json(cfg);
    json config = params;
    config["mock"] = a.mock;
    config["corpus"] = a.corpus;
    config["seed"] = ctx.globals.seed;
    const std::string eos = lm.token_text(lm.eos());

    auto records = parallel_map(
        corpus,
        [&](const Document& d) {
            auto c = cfg;
            c.seed = mix_seed(ctx.globals.seed, fnv1a(d.id));
            io::DecodeRecord r{d.id, std::string(decode::strategy_name(cfg.strategy)), params, eos, {}};
            for (const auto& res : decode::run_decode(lm, {}, c)) {
                io::DecodedSequence s;
                for (auto id : res.tokens) s.tokens.push_back(lm.token_text(id));
                s.token_logprobs = res.token_logprobs;
                s.text = decode::detokenize(lm, res);
                r.sequences.push_back(std::move(s));
            }
            return io::decode_record(r);
        },
        ctx.threads());
    ctx.emit(a.out, jsonl(io::header_record("decode", config), records));
}

// ---------------------------------------------------------------- desel

struct DeselArgs {
    std::string greedy;
    std::string samples;
    std::string scores;
    std::string mock;
    std::string method = "desel";
    std::string corpus;
    std::string embeddings;
    std::string out;
    double alpha = 0.78;
    int m = 10;
    int n = 10;
};

void run_desel(const DeselArgs& a, const Context& ctx) {
    if (a.scores.empty() == a.mock.empty()) throw Error("desel needs exactly one of --scores or --mock");
    desel::DeselConfig dcfg;
    dcfg.alpha = a.alpha;
    dcfg.m = a.m;
    dcfg.n = a.n;
    dcfg.scorer_mode = a.mock.empty() ? desel::ScorerMode::kOne2One : desel::ScorerMode::kSelf;
    dcfg.validate();
    const bool is_desel = a.method == "desel";
    const auto baseline = is_desel ? desel::BaselineMethod::kRandom : desel::parse_baseline(a.method);

    std::unique_ptr<decode::NgramMockLm> lm;
    std::unique_ptr<desel::PhraseScorer> scorer;
    if (!a.mock.empty()) {
        lm = std::make_unique<decode::NgramMockLm>(decode::NgramMockLm::from_file(a.mock));
        scorer = std::make_unique<desel::SelfScorer>(*lm);
    } else {
        scorer = std::make_unique<desel::TableScorer>(io::read_scores(a.scores, ctx.read_options()));
    }

    std::unique_ptr<metrics::PhraseEmbedder> embedder;
    std::unordered_map<std::string, std::string> doc_text;
    if (!is_desel && baseline == desel::BaselineMethod::kOverlap) {
        if (a.corpus.empty()) throw Error("overlap selection needs --corpus");
        embedder = load_embedder(a.embeddings);
        for (const auto& d : io::read_corpus(a.corpus, ctx.read_options())) doc_text[d.id] = d.text();
    }

    const auto greedy = io::read_decodes(a.greedy, ctx.read_options());
    const auto samples = io::read_decodes(a.samples, ctx.read_options());
    std::unordered_map<std::string, const io::DecodeRecord*> sample_by_id;
    for (const auto& s : samples)
        if (!sample_by_id.emplace(s.doc_id, &s).second) throw Error("duplicate sample record for '" + s.doc_id + "'");

    std::vector<const io::DecodeRecord*> work;
    for (const auto& g : greedy) {
        if (!sample_by_id.count(g.doc_id)) {
            if (!ctx.globals.skip_bad) throw Error("no sample record for document '" + g.doc_id + "'");
            ctx.warn("skipped document '" + g.doc_id + "': no sample record");
            continue;
        }
        work.push_back(&g);
    }

    auto records = parallel_map(
        work,
        [&](const io::DecodeRecord* g) {
            const io::DecodeRecord& s = *sample_by_id.at(g->doc_id);
            std::vector<std::string> g_phrases;
            if (!g->sequences.empty()) g_phrases = desel::parse_phrase_sequence(g->sequences.front().joined(g->eos));
            std::vector<std::string> s_phrases;
            const std::size_t used = std::min<std::size_t>(s.sequences.size(), static_cast<std::size_t>(dcfg.n));
            for (std::size_t i = 0; i < used; ++i)
                for (auto& p : desel::parse_phrase_sequence(s.sequences[i].joined(s.eos))) s_phrases.push_back(std::move(p));

            const auto gs = desel::score_phrases(*scorer, g->doc_id, g_phrases);
            const auto ss = desel::score_phrases(*scorer, g->doc_id, s_phrases);
            desel::Selection sel;
            if (is_desel) {
                sel = desel::desel_select(gs, ss, dcfg);
            } else {
                desel::BaselineContext bctx;
                bctx.seed = mix_seed(ctx.globals.seed, fnv1a(g->doc_id));
                bctx.embedder = embedder.get();
                if (embedder) {
                    auto it = doc_text.find(g->doc_id);
                    if (it == doc_text.end()) throw Error("document '" + g->doc_id + "' missing from --corpus");
                    bctx.document_text = it->second;
                }
                sel = desel::baseline_select(gs, ss, baseline, dcfg.m, bctx);
            }
            return io::prediction_record({g->doc_id, sel.phrases, sel.probs});
        },
        ctx.threads());

    json config = {{"method", a.method},
                   {"greedy", a.greedy},
                   {"samples", a.samples},
                   {"scorer", a.mock.empty() ? "one2one" : "self"},
                   {"scores", a.mock.empty() ? a.scores : a.mock},
                   {"alpha", dcfg.alpha},
                   {"m", dcfg.m},
                   {"n", dcfg.n},
                   {"seed", ctx.globals.seed}};
    if (embedder) {
        config["corpus"] = a.corpus;
        config["embeddings"] = a.embeddings.empty() ? "trigram" : a.embeddings;
    }
    ctx.emit(a.out, jsonl(io::header_record("desel", config), records));
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string corpus;
    std::string preds;
    std::string embeddings;
    std::string aggregate = "macro";
    std::string out;
};

json prf_fields(json& j, const std::string& prefix, const metrics::PRF& s) {
    j[prefix + "_p"] = s.precision;
    j[prefix + "_r"] = s.recall;
    j[prefix + "_f1"] = s.f1;
    return j;
}

json report_row(const metrics::MetricReport& r, bool with_id) {
    json j;
    if (with_id) j["id"] = r.id;
    prf_fields(j, "present", r.present);
    prf_fields(j, "absent", r.absent);
    j["present_f1_at_5"] = r.at5_present;
    prf_fields(j, "sem", r.semantic);
    const auto& c = r.counts;
    j["counts"] = {{"num_preds", c.num_preds},
                   {"num_refs", c.num_refs},
                   {"num_present_preds", c.num_present_preds},
                   {"num_absent_preds", c.num_absent_preds},
                   {"num_present_refs", c.num_present_refs},
                   {"num_absent_refs", c.num_absent_refs},
                   {"present_matches", c.present_matches},
                   {"absent_matches", c.absent_matches}};
    return j;
}

void run_eval(const EvalArgs& a, const Context& ctx) {
    metrics::Aggregation mode;
    if (a.aggregate == "macro")
        mode = metrics::Aggregation::kMacro;
    else if (a.aggregate == "micro")
        mode = metrics::Aggregation::kMicro;
    else
        throw Error("--aggregate must be macro or micro");
    const auto embedder = load_embedder(a.embeddings);
    const auto corpus = io::read_corpus(a.corpus, ctx.read_options());
    std::unordered_map<std::string, std::vector<std::string>> preds;
    for (auto& p : io::read_predictions(a.preds, ctx.read_options()))
        if (!preds.emplace(p.id, std::move(p.phrases)).second) throw Error("duplicate predictions for '" + p.id + "'");

    std::set<std::string> corpus_ids;
    std::vector<const Document*> docs;
    for (const auto& d : corpus) {
        corpus_ids.insert(d.id);
        if (!preds.count(d.id)) {
            if (!ctx.globals.skip_bad) throw Error("no predictions for document '" + d.id + "'");
            ctx.warn("skipped document '" + d.id + "': no predictions");
            continue;
        }
        docs.push_back(&d);
    }
    for (const auto& [id, _] : preds)
        if (!corpus_ids.count(id)) throw Error("predictions for unknown document '" + id + "'");

    const auto rows = parallel_map(
        docs, [&](const Document* d) { return metrics::evaluate_document(*d, preds.at(d->id), *embedder); },
        ctx.threads());

    const json config = {{"corpus", a.corpus},
                         {"preds", a.preds},
                         {"embeddings", a.embeddings.empty() ? "trigram" : a.embeddings},
                         {"aggregate", a.aggregate}};
    json report;
    report["kpforge"] = io::provenance("eval", config);
    report["documents_evaluated"] = rows.size();
    report["corpus"] = report_row(metrics::aggregate(rows, mode), false);
    json per_doc = json::array();
    for (const auto& r : rows) per_doc.push_back(report_row(r, true));
    report["documents"] = std::move(per_doc);
    ctx.emit(a.out, report.dump(2) + "\n");
}

// ---------------------------------------------------------------- perturb

struct PerturbArgs {
    std::string corpus;
    std::string varmap;
    std::string paraphrased;
    std::string out;
    std::string targets_out;
};

void run_perturb(const PerturbArgs& a, const Context& ctx) {
    if (a.varmap.empty() == a.paraphrased.empty()) throw Error("perturb needs exactly one of --varmap or --paraphrased");
    const auto corpus = io::read_corpus(a.corpus, ctx.read_options());
    json config = {{"corpus", a.corpus}, {"seed", ctx.globals.seed}};

    if (!a.paraphrased.empty()) {
        if (a.targets_out.empty()) throw Error("paraphrase mode needs --targets-out");
        config["paraphrased"] = a.paraphrased;
        std::unordered_map<std::string, Document> para;
        for (auto& d : io::read_corpus(a.paraphrased, ctx.read_options())) para.emplace(d.id, std::move(d));
        std::vector<json> records;
        for (const auto& d : corpus) {
            auto it = para.find(d.id);
            if (it == para.end()) {
                if (!ctx.globals.skip_bad) throw Error("document '" + d.id + "' missing from the paraphrased corpus");
                ctx.warn("skipped document '" + d.id + "': no paraphrase");
                continue;
            }
            io::TargetRecord t{{d.id, perturb::paraphrase_targets(d, it->second)}, {}};
            records.push_back(io::target_record(t));
        }
        ctx.emit(a.targets_out, jsonl(io::header_record("perturb", config), records));
        return;
    }

    config["varmap"] = a.varmap;
    const auto varmap = io::read_varmap(a.varmap, ctx.read_options());
    const auto results = parallel_map(
        corpus, [&](const Document& d) { return perturb::substitute_variations(d, varmap, ctx.globals.seed); },
        ctx.threads());
    std::vector<json> docs, targets;
    std::size_t total = 0;
    for (const auto& r : results) {
        for (const auto& w : r.warnings) ctx.warn(w);
        docs.push_back(io::corpus_record(r.doc));
        targets.push_back(io::target_record({{r.doc.id, r.targets}, r.log}));
        total += r.targets.size();
    }
    ctx.info("substituted " + std::to_string(total) + " targets");
    ctx.emit(a.out, jsonl(io::header_record("perturb", config), docs));
    if (!a.targets_out.empty()) ctx.emit(a.targets_out, jsonl(io::header_record("perturb", config), targets));
}

// ---------------------------------------------------------------- perturb-report

struct PerturbReportArgs {
    std::string targets;
    std::string before;
    std::string after;
    std::string out;
};

std::map<std::string, std::vector<std::string>> prediction_map(const std::string& path, const Context& ctx) {
    std::map<std::string, std::vector<std::string>> m;
    for (auto& p : io::read_predictions(path, ctx.read_options()))
        if (!m.emplace(p.id, std::move(p.phrases)).second) throw Error(path + ": duplicate predictions for '" + p.id + "'");
    return m;
}

void run_perturb_report(const PerturbReportArgs& a, const Context& ctx) {
    std::vector<perturb::DocumentTargets> targets;
    for (auto& t : io::read_targets(a.targets, ctx.read_options())) targets.push_back(std::move(t.targets));
    const auto r = perturb::recall_delta(targets, prediction_map(a.before, ctx), prediction_map(a.after, ctx));

    json report;
    report["kpforge"] = io::provenance("perturb-report", {{"targets", a.targets}, {"before", a.before}, {"after", a.after}});
    report["documents"] = r.documents;
    report["targets"] = r.targets;
    report["before_recall"] = r.before_recall;
    report["after_recall"] = r.after_recall;
    report["delta"] = r.delta;
    report["pct_drop"] = r.pct_drop;
    report["table"] = {{"before", fixed(r.before_recall, 3)},
                       {"after", fixed(r.after_recall, 3)},
                       {"delta", fixed(r.delta, 3)},
                       {"pct_drop", fixed(r.pct_drop, 1) + "%"}};
    ctx.emit(a.out, report.dump(2) + "\n");
}

// ---------------------------------------------------------------- bootstrap

struct BootstrapArgs {
    std::string a;
    std::string b;
    std::string metric = "sem_f1";
    std::string out;
    int iters = 1000;
};

std::vector<std::pair<std::string, double>> metric_column(const std::string& path, const std::string& metric) {
    const json report = io::read_json_file(path);
    if (!report.contains("documents") || !report["documents"].is_array())
        throw Error(path + ": not an eval report (no documents list)");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& row : report["documents"]) {
        if (!row.contains("id") || !row["id"].is_string()) throw Error(path + ": document row without id");
        if (!row.contains(metric) || !row[metric].is_number())
            throw Error(path + ": metric '" + metric + "' missing for document '" + row["id"].get<std::string>() + "'");
        out.emplace_back(row["id"].get<std::string>(), row[metric].get<double>());
    }
    return out;
}

void run_bootstrap(const BootstrapArgs& a, const Context& ctx) {
    const auto col_a = metric_column(a.a, a.metric);
    const auto col_b = metric_column(a.b, a.metric);
    std::unordered_map<std::string, double> b_by_id;
    for (const auto& [id, v] : col_b)
        if (!b_by_id.emplace(id, v).second) throw Error(a.b + ": duplicate document '" + id + "'");
    if (col_a.size() != col_b.size()) throw Error("reports cover different documents");
    stats::PairedSample sample;
    for (const auto& [id, v] : col_a) {
        auto it = b_by_id.find(id);
        if (it == b_by_id.end()) throw Error("document '" + id + "' missing from " + a.b);
        sample.ids.push_back(id);
        sample.a.push_back(v);
        sample.b.push_back(it->second);
    }
    const auto r = stats::paired_bootstrap(sample, a.iters, ctx.globals.seed);

    json report;
    report["kpforge"] = io::provenance(
        "bootstrap", {{"a", a.a}, {"b", a.b}, {"metric", a.metric}, {"iters", a.iters}, {"seed", ctx.globals.seed}});
    report["metric"] = a.metric;
    report["documents"] = sample.ids.size();
    report["mean_a"] = r.mean_a;
    report["mean_b"] = r.mean_b;
    report["p_value"] = r.p_value;
    report["iterations"] = r.iterations;
    report["significant_at_0_05"] = r.p_value < 0.05;
    ctx.emit(a.out, report.dump(2) + "\n");
}

json error_record(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Keyphrase generation toolkit: extraction, attention probing, decoding, selection and evaluation.",
                 "kpforge"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (default: KPFORGE_THREADS, else hardware)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--skip-bad", g.skip_bad, "Skip malformed input records with a warning instead of failing");
    app.add_flag("-v,--verbose", g.verbosity, "Log progress to stderr");

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "Rank candidate phrases per document");
    extract->add_option("--method", ex.method, "mprank or attention")->capture_default_str();
    extract->add_option("--corpus", ex.corpus, "corpus.jsonl")->required();
    extract->add_option("--k", ex.k, "Phrases per document")->capture_default_str();
    extract->add_option("--out", ex.out, "predictions.jsonl (default stdout)");
    extract->add_option("--attn", ex.attn, "attn.jsonl, for --method attention");
    extract->add_option("--layer", ex.layer, "Layer, for --method attention");
    extract->add_option("--head", ex.head, "Head, for --method attention");
    extract->add_option("--max-len", ex.max_len, "Longest candidate in tokens")->capture_default_str();
    extract->add_option("--stopwords", ex.stopwords, "Stopword file, one word per line");

    ProbeArgs pr;
    auto* probe = app.add_subcommand("probe", "Rank attention heads by correlation with phrase centrality");
    probe->add_option("--corpus", pr.corpus)->required();
    probe->add_option("--attn", pr.attn)->required();
    probe->add_option("--out", pr.out, "heads.tsv (default stdout)");
    probe->add_option("--top", pr.top, "Keep only the best N heads (0 keeps all)")->capture_default_str();
    probe->add_option("--max-len", pr.max_len)->capture_default_str();

    DecodeArgs de;
    auto* dec = app.add_subcommand("decode", "Decode with a mock language model");
    dec->add_option("--mock", de.mock, "Mock model table (JSON)")->required();
    dec->add_option("--corpus", de.corpus)->required();
    dec->add_option("--out", de.out, "decodes.jsonl (default stdout)");
    dec->add_option("--strategy", de.strategy, "greedy, beam, diverse_beam, sample, top_k or nucleus")
        ->capture_default_str();
    de.p_opt = dec->add_option("--p", de.p, "Nucleus mass");
    de.temp_opt = dec->add_option("--temp", de.temperature, "Sampling temperature");
    de.k_opt = dec->add_option("--k", de.k, "Top-k cutoff");
    de.n_opt = dec->add_option("--n", de.n, "Samples per document");
    de.beam_opt = dec->add_option("--beam", de.beam, "Beam width");
    de.groups_opt = dec->add_option("--groups", de.groups, "Diverse beam groups");
    de.lambda_opt = dec->add_option("--lambda", de.lambda, "Diverse beam penalty");
    de.max_len_opt = dec->add_option("--max-len", de.max_len, "Maximum generated tokens");

    DeselArgs ds;
    auto* dsel = app.add_subcommand("desel", "Augment greedy output with selected sampled phrases");
    dsel->add_option("--greedy", ds.greedy, "Greedy decodes.jsonl")->required();
    dsel->add_option("--samples", ds.samples, "Sampled decodes.jsonl")->required();
    dsel->add_option("--scores", ds.scores, "scores.jsonl (one2one scorer)");
    dsel->add_option("--mock", ds.mock, "Mock model table, scoring phrases with the model itself");
    dsel->add_option("--method", ds.method, "desel, random, freq or overlap")->capture_default_str();
    dsel->add_option("--alpha", ds.alpha)->capture_default_str();
    dsel->add_option("--m", ds.m, "Most phrases appended")->capture_default_str();
    dsel->add_option("--n", ds.n, "Sample sequences used")->capture_default_str();
    dsel->add_option("--corpus", ds.corpus, "corpus.jsonl, for --method overlap");
    dsel->add_option("--embeddings", ds.embeddings, "Word vectors, for --method overlap");
    dsel->add_option("--out", ds.out, "predictions.jsonl (default stdout)");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Score predictions against gold keyphrases");
    eval->add_option("--corpus", ev.corpus)->required();
    eval->add_option("--preds", ev.preds, "predictions.jsonl or decodes.jsonl")->required();
    eval->add_option("--embeddings", ev.embeddings, "Word vectors for semantic scores (default: hashed trigrams)");
    eval->add_option("--aggregate", ev.aggregate, "macro or micro")->capture_default_str();
    eval->add_option("--out", ev.out, "report.json (default stdout)");

    PerturbArgs pt;
    auto* pert = app.add_subcommand("perturb", "Substitute name variations or pair paraphrased documents");
    pert->add_option("--corpus", pt.corpus)->required();
    pert->add_option("--varmap", pt.varmap, "varmap.jsonl");
    pert->add_option("--paraphrased", pt.paraphrased, "Paraphrased corpus with matching ids");
    pert->add_option("--out", pt.out, "Perturbed corpus (default stdout)");
    pert->add_option("--targets-out", pt.targets_out, "targets.jsonl");

    PerturbReportArgs prr;
    auto* prep = app.add_subcommand("perturb-report", "Recall on perturbed targets before and after");
    prep->add_option("--targets", prr.targets)->required();
    prep->add_option("--before", prr.before)->required();
    prep->add_option("--after", prr.after)->required();
    prep->add_option("--out", prr.out, "report (default stdout)");

    BootstrapArgs bs;
    auto* boot = app.add_subcommand("bootstrap", "Paired bootstrap test between two eval reports");
    boot->add_option("--a", bs.a, "report.json of system A")->required();
    boot->add_option("--b", bs.b, "report.json of system B")->required();
    boot->add_option("--metric", bs.metric)->capture_default_str();
    boot->add_option("--iters", bs.iters)->capture_default_str();
    boot->add_option("--out", bs.out, "result (default stdout)");

    std::vector<const char*> argv{"kpforge"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_record("usage", e.what()).dump() << "\n";
        err << "Run with --help for usage.\n";
        return 2;
    }

    const Context ctx(g, out, err);
    try {
        if (*extract) run_extract(ex, ctx);
        if (*probe) run_probe(pr, ctx);
        if (*dec) run_decode_cmd(de, ctx);
        if (*dsel) run_desel(ds, ctx);
        if (*eval) run_eval(ev, ctx);
        if (*pert) run_perturb(pt, ctx);
        if (*prep) run_perturb_report(prr, ctx);
        if (*boot) run_bootstrap(bs, ctx);
    } catch (const io::RecordError& e) {
        json rec = error_record("record", e.detail());
        rec["error"]["file"] = e.file();
        rec["error"]["line"] = e.line();
        err << rec.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << error_record("runtime", e.what()).dump() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace kpforge::cli
