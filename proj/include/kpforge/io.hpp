#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpforge/attnprobe.hpp"
#include "kpforge/desel.hpp"
#include "kpforge/error.hpp"
#include "kpforge/perturb.hpp"
#include "kpforge/text.hpp"

namespace kpforge::io {

using json = nlohmann::ordered_json;

/// A malformed input record.
class RecordError : public Error {
public:
    RecordError(std::string file, std::size_t line, const std::string& message);
    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::string file_;
    std::size_t line_;
    std::string detail_;
};

/// Reads lines from a plain or gzip-compressed file (detected from content).
class LineReader {
public:
    explicit LineReader(const std::string& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next(std::string& line);
    std::size_t line_number() const { return line_no_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    void* handle_ = nullptr;
    std::size_t line_no_ = 0;
};

/// Writes to a file, gzip-compressed when the path ends in ".gz", or to
/// stdout when the path is empty or "-".
class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void write(std::string_view s);
    void line(const json& record);
    void close();

private:
    std::string path_;
    void* gz_ = nullptr;
    std::FILE* file_ = nullptr;
    bool owns_file_ = false;
};

/// Provenance block embedded in every output: toolkit version, schema
/// version, subcommand and the resolved configuration.
json provenance(const std::string& command, const json& config);

/// {"kpforge_header": provenance(...)}
json header_record(const std::string& command, const json& config);

struct ReadOptions {
    bool skip_bad = false;
    /// Receives one message per skipped record or other recoverable issue.
    std::function<void(const std::string&)> warn;
};

/// Calls `visit` for every JSON object line. Blank lines are ignored and a
/// leading header record is checked for schema compatibility and consumed.
/// Errors thrown from `visit` become RecordErrors carrying the line number;
/// with skip_bad they are reported through `warn` and the line is skipped.
void read_jsonl(const std::string& path, const ReadOptions& options,
                const std::function<void(const json&)>& visit);

std::vector<Document> read_corpus(const std::string& path, const ReadOptions& options = {});
json corpus_record(const Document& doc);

/// Attention records grouped by document in order of first appearance.
std::vector<attnprobe::DocumentExport> read_attention(const std::string& path, const ReadOptions& options = {});
json attention_record(const std::string& doc_id, const attnprobe::AttentionMatrix& m,
                      const attnprobe::Alignment& alignment);

struct DecodedSequence {
    std::vector<std::string> tokens;
    std::vector<double> token_logprobs;
    std::optional<std::string> text;

    /// `text` when given, otherwise the tokens joined with spaces after
    /// dropping every token equal to `eos`.
    std::string joined(const std::string& eos) const;
};

struct DecodeRecord {
    std::string doc_id;
    std::string strategy;
    json config;
    std::string eos;  // optional in the file; empty when absent
    std::vector<DecodedSequence> sequences;
};

std::vector<DecodeRecord> read_decodes(const std::string& path, const ReadOptions& options = {});
json decode_record(const DecodeRecord& r);

desel::TableScorer read_scores(const std::string& path, const ReadOptions& options = {});
json score_record(const std::string& doc_id, const std::string& phrase, double prob);

struct Prediction {
    std::string id;
    std::vector<std::string> phrases;
    std::vector<double> scores;
};

/// Accepts prediction records {id, phrases, scores} and decode records
/// (phrases parsed from the first sequence).
std::vector<Prediction> read_predictions(const std::string& path, const ReadOptions& options = {});
json prediction_record(const Prediction& p);

perturb::VariationMap read_varmap(const std::string& path, const ReadOptions& options = {});

struct TargetRecord {
    perturb::DocumentTargets targets;
    std::vector<perturb::Substitution> substitutions;
};

std::vector<TargetRecord> read_targets(const std::string& path, const ReadOptions& options = {});
json target_record(const TargetRecord& r);

json read_json_file(const std::string& path);

}  // namespace kpforge::io
