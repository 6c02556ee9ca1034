#include "kpforge/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <zlib.h>

#include "kpforge/version.hpp"

namespace kpforge::io {
namespace {

const json& field(const json& obj, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end()) throw Error(std::string("missing field '") + name + "'");
    return *it;
}

std::string get_string(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_string()) throw Error(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::string> get_strings(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_array()) throw Error(std::string("field '") + name + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
        if (!x.is_string()) throw Error(std::string("field '") + name + "' must be a list of strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

double as_real(const json& v, const char* name) {
    if (!v.is_number()) throw Error(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

std::vector<double> get_reals(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_array()) throw Error(std::string("field '") + name + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(as_real(x, name));
    return out;
}

long long get_int(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_number_integer()) throw Error(std::string("field '") + name + "' must be an integer");
    return v.get<long long>();
}

std::string field_name(perturb::Substitution::Field f) {
    return f == perturb::Substitution::Field::kTitle ? "title" : "abstract";
}

// Exporters emit {doc_id, error} for a document they could not process.
bool skip_failed_export(const json& r, const std::string& path, const ReadOptions& options) {
    auto it = r.find("error");
    if (it == r.end() || it->is_null()) return false;
    if (options.warn) {
        const std::string id = r.contains("doc_id") && r["doc_id"].is_string() ? r["doc_id"].get<std::string>() : "?";
        options.warn(path + ": document " + id + " has an export error, skipped: " +
                     (it->is_string() ? it->get<std::string>() : it->dump()));
    }
    return true;
}

}  // namespace

RecordError::RecordError(std::string file, std::size_t line, const std::string& message)
    : Error(file + ":" + std::to_string(line) + ": " + message), file_(std::move(file)), line_(line), detail_(message) {}

LineReader::LineReader(const std::string& path) : path_(path) {
    handle_ = gzopen(path.c_str(), "rb");
    if (handle_ == nullptr) throw Error("cannot open " + path);
}

LineReader::~LineReader() {
    if (handle_ != nullptr) gzclose(static_cast<gzFile>(handle_));
}

bool LineReader::next(std::string& line) {
    line.clear();
    char buf[65536];
    auto* gz = static_cast<gzFile>(handle_);
    bool any = false;
    while (gzgets(gz, buf, sizeof buf) != nullptr) {
        any = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
    }
    int err = 0;
    const char* msg = gzerror(gz, &err);
    if (err != Z_OK && err != Z_STREAM_END) throw Error(path_ + ": read error: " + msg);
    if (!any) return false;
    ++line_no_;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    return true;
}

Writer::Writer(const std::string& path) : path_(path) {
    if (path.empty() || path == "-") {
        file_ = stdout;
    } else if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        gz_ = gzopen(path.c_str(), "wb");
        if (gz_ == nullptr) throw Error("cannot write " + path);
    } else {
        file_ = std::fopen(path.c_str(), "wb");
        if (file_ == nullptr) throw Error("cannot write " + path);
        owns_file_ = true;
    }
}

Writer::~Writer() {
    try {
        close();
    } catch (...) {
    }
}

void Writer::write(std::string_view s) {
    if (gz_ != nullptr) {
        if (!s.empty() && gzwrite(static_cast<gzFile>(gz_), s.data(), static_cast<unsigned>(s.size())) == 0)
            throw Error("write failed: " + path_);
    } else if (file_ != nullptr) {
        if (std::fwrite(s.data(), 1, s.size(), file_) != s.size()) throw Error("write failed: " + path_);
    } else {
        throw Error("write after close: " + path_);
    }
}

void Writer::line(const json& record) {
    write(record.dump());
    write("\n");
}

void Writer::close() {
    if (gz_ != nullptr) {
        const int rc = gzclose(static_cast<gzFile>(gz_));
        gz_ = nullptr;
        if (rc != Z_OK) throw Error("close failed: " + path_);
    }
    if (file_ != nullptr) {
        const int rc = owns_file_ ? std::fclose(file_) : std::fflush(file_);
        file_ = nullptr;
        if (rc != 0) throw Error("close failed: " + path_);
    }
}

json provenance(const std::string& command, const json& config) {
    json p;
    p["version"] = kVersion;
    p["schema_version"] = kSchemaVersion;
    p["command"] = command;
    p["config"] = config;
    return p;
}

json header_record(const std::string& command, const json& config) {
    json h;
    h["kpforge_header"] = provenance(command, config);
    return h;
}

void read_jsonl(const std::string& path, const ReadOptions& options, const std::function<void(const json&)>& visit) {
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::size_t n = reader.line_number();
        json record;
        try {
            record = json::parse(line);
            if (!record.is_object()) throw Error("record is not a JSON object");
        } catch (const std::exception& e) {
            RecordError err(path, n, std::string("malformed record: ") + e.what());
            if (!options.skip_bad) throw err;
            if (options.warn) options.warn(std::string("skipped ") + err.what());
            continue;
        }
        if (auto h = record.find("kpforge_header"); h != record.end()) {
            if (!h->is_object() || !h->contains("schema_version") || !(*h)["schema_version"].is_number_integer())
                throw RecordError(path, n, "malformed header");
            const int v = (*h)["schema_version"].get<int>();
            if (v != kSchemaVersion)
                throw RecordError(path, n,
                                  "schema version mismatch: file has " + std::to_string(v) + ", expected " +
                                      std::to_string(kSchemaVersion));
            continue;
        }
        try {
            visit(record);
        } catch (const RecordError&) {
            throw;
        } catch (const std::exception& e) {
            RecordError err(path, n, e.what());
            if (!options.skip_bad) throw err;
            if (options.warn) options.warn(std::string("skipped ") + err.what());
        }
    }
}

std::vector<Document> read_corpus(const std::string& path, const ReadOptions& options) {
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    read_jsonl(path, options, [&](const json& r) {
        std::string id = get_string(r, "id");
        if (seen.count(id)) throw Error("duplicate document id '" + id + "'");
        std::optional<std::vector<std::string>> tags;
        if (r.contains("pos_tags") && !r["pos_tags"].is_null()) tags = get_strings(r, "pos_tags");
        std::string title = get_string(r, "title");
        std::string abstract = get_string(r, "abstract");
        auto gold = get_strings(r, "keyphrases");
        docs.push_back(make_document(id, std::move(title), std::move(abstract), std::move(gold), std::move(tags)));
        seen.emplace(std::move(id), docs.size() - 1);
    });
    return docs;
}

json corpus_record(const Document& doc) {
    json r;
    r["id"] = doc.id;
    r["title"] = doc.title;
    r["abstract"] = doc.abstract;
    r["keyphrases"] = doc.gold_keyphrases;
    if (doc.pos_tags) r["pos_tags"] = *doc.pos_tags;
    return r;
}

std::vector<attnprobe::DocumentExport> read_attention(const std::string& path, const ReadOptions& options) {
    std::vector<attnprobe::DocumentExport> out;
    std::unordered_map<std::string, std::size_t> index;
    read_jsonl(path, options, [&](const json& r) {
        attnprobe::AttentionMatrix m;
        const std::string doc_id = get_string(r, "doc_id");
        m.layer = static_cast<int>(get_int(r, "layer"));
        m.head = static_cast<int>(get_int(r, "head"));
        const long long size = get_int(r, "L");
        if (size <= 0) throw Error("L must be positive");
        m.size = static_cast<std::size_t>(size);
        const json& rows = field(r, "rows");
        if (!rows.is_array() || rows.size() != m.size) throw Error("rows must be a list of L rows");
        m.rows.reserve(m.size * m.size);
        for (const auto& row : rows) {
            if (!row.is_array() || row.size() != m.size) throw Error("every row must have L entries");
            for (const auto& x : row) m.rows.push_back(as_real(x, "rows"));
        }
        m.validate();

        attnprobe::Alignment alignment;
        const json& w2t = field(r, "word_to_tokens");
        if (!w2t.is_array()) throw Error("word_to_tokens must be a list of lists");
        for (const auto& word : w2t) {
            if (!word.is_array()) throw Error("word_to_tokens must be a list of lists");
            std::vector<std::size_t> idx;
            for (const auto& t : word) {
                if (!t.is_number_integer() || t.get<long long>() < 0)
                    throw Error("token indices must be nonnegative integers");
                idx.push_back(t.get<std::size_t>());
            }
            alignment.push_back(std::move(idx));
        }

        auto [it, inserted] = index.emplace(doc_id, out.size());
        if (inserted) {
            out.push_back({doc_id, std::move(alignment), {}});
        } else if (out[it->second].word_to_tokens != alignment) {
            throw Error("word_to_tokens differs between heads of document '" + doc_id + "'");
        }
        out[it->second].heads.push_back(std::move(m));
    });
    return out;
}

json attention_record(const std::string& doc_id, const attnprobe::AttentionMatrix& m,
                      const attnprobe::Alignment& alignment) {
    json r;
    r["doc_id"] = doc_id;
    r["layer"] = m.layer;
    r["head"] = m.head;
    r["L"] = m.size;
    json rows = json::array();
    for (std::size_t k = 0; k < m.size; ++k) {
        json row = json::array();
        for (std::size_t j = 0; j < m.size; ++j) row.push_back(m.at(k, j));
        rows.push_back(std::move(row));
    }
    r["rows"] = std::move(rows);
    r["word_to_tokens"] = alignment;
    return r;
}

std::string DecodedSequence::joined(const std::string& eos) const {
    if (text) return *text;
    std::string out;
    for (const auto& t : tokens) {
        if (!eos.empty() && t == eos) continue;
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::vector<DecodeRecord> read_decodes(const std::string& path, const ReadOptions& options) {
    std::vector<DecodeRecord> out;
    read_jsonl(path, options, [&](const json& r) {
        if (skip_failed_export(r, path, options)) return;
        DecodeRecord d;
        d.doc_id = get_string(r, "doc_id");
        d.strategy = get_string(r, "strategy");
        if (r.contains("config")) d.config = r["config"];
        if (r.contains("eos")) d.eos = get_string(r, "eos");
        const json& seqs = field(r, "sequences");
        if (!seqs.is_array()) throw Error("sequences must be a list");
        for (const auto& s : seqs) {
            if (!s.is_object()) throw Error("every sequence must be an object");
            DecodedSequence q;
            q.tokens = get_strings(s, "tokens");
            if (s.contains("token_logprobs")) q.token_logprobs = get_reals(s, "token_logprobs");
            if (!q.token_logprobs.empty() && q.token_logprobs.size() != q.tokens.size())
                throw Error("token_logprobs and tokens differ in length");
            if (s.contains("text")) q.text = get_string(s, "text");
            d.sequences.push_back(std::move(q));
        }
        out.push_back(std::move(d));
    });
    return out;
}

json decode_record(const DecodeRecord& d) {
    json r;
    r["doc_id"] = d.doc_id;
    r["strategy"] = d.strategy;
    r["config"] = d.config;
    if (!d.eos.empty()) r["eos"] = d.eos;
    json seqs = json::array();
    for (const auto& s : d.sequences) {
        json q;
        q["tokens"] = s.tokens;
        q["token_logprobs"] = s.token_logprobs;
        if (s.text) q["text"] = *s.text;
        seqs.push_back(std::move(q));
    }
    r["sequences"] = std::move(seqs);
    return r;
}

desel::TableScorer read_scores(const std::string& path, const ReadOptions& options) {
    desel::TableScorer table;
    read_jsonl(path, options, [&](const json& r) {
        const double p = as_real(field(r, "prob"), "prob");
        if (!(p >= 0.0 && p <= 1.0)) throw Error("prob must lie in [0, 1]");
        const std::string doc_id = get_string(r, "doc_id");
        table.add(doc_id, get_string(r, "phrase"), p);
    });
    return table;
}

json score_record(const std::string& doc_id, const std::string& phrase, double prob) {
    json r;
    r["doc_id"] = doc_id;
    r["phrase"] = phrase;
    r["prob"] = prob;
    return r;
}

std::vector<Prediction> read_predictions(const std::string& path, const ReadOptions& options) {
    std::vector<Prediction> out;
    read_jsonl(path, options, [&](const json& r) {
        if (skip_failed_export(r, path, options)) return;
        Prediction p;
        if (r.contains("sequences")) {
            p.id = get_string(r, "doc_id");
            const json& seqs = r["sequences"];
            if (!seqs.is_array()) throw Error("sequences must be a list");
            if (!seqs.empty()) {
                DecodedSequence q;
                q.tokens = get_strings(seqs[0], "tokens");
                if (seqs[0].contains("text")) q.text = get_string(seqs[0], "text");
                p.phrases = desel::parse_phrase_sequence(q.joined(r.contains("eos") ? get_string(r, "eos") : ""));
            }
        } else {
            p.id = get_string(r, "id");
            p.phrases = get_strings(r, "phrases");
            if (r.contains("scores")) p.scores = get_reals(r, "scores");
            if (!p.scores.empty() && p.scores.size() != p.phrases.size())
                throw Error("scores and phrases differ in length");
        }
        out.push_back(std::move(p));
    });
    return out;
}

json prediction_record(const Prediction& p) {
    json r;
    r["id"] = p.id;
    r["phrases"] = p.phrases;
    r["scores"] = p.scores;
    return r;
}

perturb::VariationMap read_varmap(const std::string& path, const ReadOptions& options) {
    perturb::VariationMap map;
    read_jsonl(path, options, [&](const json& r) {
        const std::string canonical = get_string(r, "canonical");
        map.add(canonical, get_strings(r, "variants"));
    });
    return map;
}

std::vector<TargetRecord> read_targets(const std::string& path, const ReadOptions& options) {
    std::vector<TargetRecord> out;
    read_jsonl(path, options, [&](const json& r) {
        TargetRecord t;
        t.targets.id = get_string(r, "id");
        const json& list = field(r, "targets");
        if (!list.is_array()) throw Error("targets must be a list");
        for (const auto& x : list) {
            if (!x.is_object()) throw Error("every target must be an object");
            t.targets.targets.push_back({get_string(x, "before"), get_string(x, "after")});
        }
        if (r.contains("substitutions")) {
            for (const auto& s : r["substitutions"]) {
                perturb::Substitution sub;
                const std::string f = get_string(s, "field");
                if (f == "title")
                    sub.field = perturb::Substitution::Field::kTitle;
                else if (f == "abstract")
                    sub.field = perturb::Substitution::Field::kAbstract;
                else
                    throw Error("substitution field must be title or abstract");
                const long long off = get_int(s, "offset"), len = get_int(s, "length");
                if (off < 0 || len < 0) throw Error("substitution offsets must be nonnegative");
                sub.offset = static_cast<std::size_t>(off);
                sub.length = static_cast<std::size_t>(len);
                sub.original = get_string(s, "original");
                t.substitutions.push_back(std::move(sub));
            }
        }
        out.push_back(std::move(t));
    });
    return out;
}

json target_record(const TargetRecord& t) {
    json r;
    r["id"] = t.targets.id;
    json list = json::array();
    for (const auto& x : t.targets.targets) list.push_back({{"before", x.before}, {"after", x.after}});
    r["targets"] = std::move(list);
    json subs = json::array();
    for (const auto& s : t.substitutions)
        subs.push_back({{"field", field_name(s.field)}, {"offset", s.offset}, {"length", s.length}, {"original", s.original}});
    r["substitutions"] = std::move(subs);
    return r;
}

json read_json_file(const std::string& path) {
    LineReader reader(path);
    std::string text, line;
    while (reader.next(line)) {
        text += line;
        text.push_back('\n');
    }
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
}

}  // namespace kpforge::io
