#include <doctest.h>

#include <cstdlib>
#include <set>

#include "kpforge/io.hpp"
#include "kpforge/version.hpp"
#include "workspace.hpp"

using namespace kpforge;
using kpforge::io::json;

namespace {

std::vector<json> records(const std::string& path) {
    std::vector<json> out;
    io::LineReader r(path);
    std::string line;
    while (r.next(line))
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

json first_error(const std::string& err) {
    std::size_t at = 0;
    while (at < err.size() && err[at] != '{') at = err.find('\n', at) + 1;
    return json::parse(err.substr(at, err.find('\n', at) - at));
}

}  // namespace

TEST_CASE("usage errors exit 2 with a JSON record") {
    auto o = ws::cli({"eval", "--corpus", "x", "--preds", "y", "--bogus"});
    CHECK(o.code == 2);
    CHECK(first_error(o.err)["error"]["kind"] == "usage");
    CHECK(ws::cli({}).code == 2);
    CHECK(ws::cli({"frobnicate"}).code == 2);
    CHECK(ws::cli({"extract"}).code == 2);
    CHECK(ws::cli({"--threads", "0", "extract", "--corpus", "x"}).code == 2);

    o = ws::cli({"--version"});
    CHECK(o.code == 0);
    CHECK(o.out == std::string(kVersion) + "\n");
    CHECK(ws::cli({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit 1") {
    auto o = ws::cli({"extract", "--corpus", "/nonexistent/corpus.jsonl"});
    CHECK(o.code == 1);
    CHECK(first_error(o.err)["error"]["kind"] == "runtime");

    o = ws::cli({"desel", "--greedy", "a", "--samples", "b"});
    CHECK(o.code == 1);
    CHECK(first_error(o.err)["error"]["message"].get<std::string>().find("exactly one") != std::string::npos);
}

TEST_CASE("every pipeline reruns byte-identically, independent of thread count") {
    ws::TempDir dir("det");
    const auto first = ws::run_pipeline(dir, "1");
    dir.clear();
    const auto second = ws::run_pipeline(dir, "4");
    CHECK(first.size() >= 19);
    REQUIRE(first.size() == second.size());
    for (const auto& [name, content] : first) {
        INFO(name);
        CHECK(second.at(name) == content);
    }
}

TEST_CASE("pipeline outputs: headers, superset, reports") {
    ws::TempDir dir("out");
    const auto files = ws::run_pipeline(dir);

    for (const std::string name : {"mprank.jsonl", "greedy.jsonl", "desel.jsonl", "perturbed.jsonl", "targets.jsonl"}) {
        const auto recs = records(dir.file(name));
        REQUIRE_FALSE(recs.empty());
        CHECK(recs[0].contains("kpforge_header"));
        CHECK(recs[0]["kpforge_header"]["version"] == std::string(kVersion));
        CHECK(recs[0]["kpforge_header"]["config"].is_object());
    }
    CHECK(records(dir.file("nucleus.jsonl.gz"))[0]["kpforge_header"]["config"]["p"] == 0.95);
    CHECK(records(dir.file("nucleus.jsonl.gz"))[0]["kpforge_header"]["config"]["temperature"] == 0.5);
    CHECK(records(dir.file("nucleus.jsonl.gz"))[1]["sequences"].size() == 10);
    CHECK(records(dir.file("mprank.jsonl")).size() == 6);

    // DeSel output is a superset of the greedy phrases, which come first.
    const auto greedy = io::read_predictions(dir.file("greedy.jsonl"));
    const auto desel = io::read_predictions(dir.file("desel.jsonl"));
    REQUIRE(greedy.size() == 5);
    REQUIRE(desel.size() == 5);
    for (std::size_t i = 0; i < greedy.size(); ++i) {
        CHECK(desel[i].id == greedy[i].id);
        REQUIRE(desel[i].phrases.size() >= greedy[i].phrases.size());
        for (std::size_t j = 0; j < greedy[i].phrases.size(); ++j) CHECK(desel[i].phrases[j] == greedy[i].phrases[j]);
        CHECK(desel[i].phrases.size() - greedy[i].phrases.size() <= 10);
    }

    const auto report = json::parse(files.at("report_desel.json"));
    CHECK(report["kpforge"]["command"] == "eval");
    CHECK(report["documents"].size() == 5);
    const auto greedy_report = json::parse(files.at("report_greedy.json"));
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& a = report["documents"][i];
        const auto& b = greedy_report["documents"][i];
        CHECK(a["present_r"].get<double>() >= b["present_r"].get<double>());
        CHECK(a["absent_r"].get<double>() >= b["absent_r"].get<double>());
    }

    const auto boot = json::parse(files.at("bootstrap.json"));
    CHECK(boot["p_value"].get<double>() >= 0.0);
    CHECK(boot["p_value"].get<double>() <= 1.0);
    CHECK(boot["kpforge"]["config"]["seed"] == 7);

    const auto pr = json::parse(files.at("perturb_report.json"));
    CHECK(pr["targets"].get<int>() >= 1);
    CHECK(pr["table"]["pct_drop"].get<std::string>().back() == '%');

    const auto& tsv = files.at("heads.tsv");
    CHECK(tsv.rfind("# ", 0) == 0);
    CHECK(tsv.find("rank_rho\trank_tau\tlayer\thead\tmean_rho\tmean_tau\tdocuments") != std::string::npos);
}

TEST_CASE("eval report is byte-identical across runs") {
    ws::TempDir dir("eval");
    std::string first;
    for (int run = 0; run < 2; ++run) {
        REQUIRE(ws::cli({"extract", "--corpus", ws::fixture("corpus.jsonl"), "--out", dir.file("p.jsonl")}).code == 0);
        REQUIRE(ws::cli({"eval", "--corpus", ws::fixture("corpus.jsonl"), "--preds", dir.file("p.jsonl"), "--out",
                         dir.file("report.json")})
                    .code == 0);
        const auto text = ws::slurp(dir.file("report.json"));
        if (run == 0)
            first = text;
        else
            CHECK(text == first);
    }
    const auto micro = ws::cli({"eval", "--corpus", ws::fixture("corpus.jsonl"), "--preds", dir.file("p.jsonl"),
                                "--aggregate", "micro"});
    CHECK(micro.code == 0);
    CHECK(json::parse(micro.out)["kpforge"]["config"]["aggregate"] == "micro");
}

TEST_CASE("malformed records fail fast with a line number unless skipped") {
    ws::TempDir dir("bad");
    const auto corpus = ws::slurp(ws::fixture("corpus.jsonl"));
    const auto cut = corpus.find('\n') + 1;
    ws::write_text(dir.file("c.jsonl"), corpus.substr(0, cut) + "{\"id\": 5\n" + corpus.substr(cut));
    auto o = ws::cli({"extract", "--corpus", dir.file("c.jsonl")});
    CHECK(o.code == 1);
    const auto e = first_error(o.err);
    CHECK(e["error"]["kind"] == "record");
    CHECK(e["error"]["line"] == 2);
    CHECK(e["error"]["file"] == dir.file("c.jsonl"));

    o = ws::cli({"--skip-bad", "extract", "--corpus", dir.file("c.jsonl")});
    CHECK(o.code == 0);
    CHECK(o.err.find("warning") != std::string::npos);
    std::size_t lines = 0;
    for (char c : o.out) lines += c == '\n';
    CHECK(lines == 6);  // header plus the five valid documents
}

TEST_CASE("schema version mismatch is an error even with --skip-bad") {
    ws::TempDir dir("schema");
    auto h = io::header_record("extract", json::object());
    h["kpforge_header"]["schema_version"] = kSchemaVersion + 1;
    ws::write_text(dir.file("c.jsonl"), h.dump() + "\n" + ws::slurp(ws::fixture("corpus.jsonl")));
    const auto o = ws::cli({"--skip-bad", "extract", "--corpus", dir.file("c.jsonl")});
    CHECK(o.code == 1);
    CHECK(first_error(o.err)["error"]["message"].get<std::string>().find("schema version") != std::string::npos);
}

TEST_CASE("eval requires predictions for every document unless --skip-bad") {
    ws::TempDir dir("miss");
    ws::write_text(dir.file("p.jsonl"), R"({"id":"d1","phrases":["keyphrase generation"],"scores":[1.0]})" "\n");
    CHECK(ws::cli({"eval", "--corpus", ws::fixture("corpus.jsonl"), "--preds", dir.file("p.jsonl")}).code == 1);
    const auto o = ws::cli({"--skip-bad", "eval", "--corpus", ws::fixture("corpus.jsonl"), "--preds", dir.file("p.jsonl")});
    CHECK(o.code == 0);
    const auto r = json::parse(o.out);
    CHECK(r["documents_evaluated"] == 1);
    CHECK(r["corpus"]["present_p"] == 1.0);
    CHECK(r["corpus"]["present_r"] == 0.2);
}

TEST_CASE("externally produced exports: decodes with error records and a scores file") {
    ws::TempDir dir("ext");
    // Adapter-shaped records: no eos field, text omitted, EOS left in the tokens.
    ws::write_text(dir.file("g.jsonl"),
                   R"({"doc_id":"d1","strategy":"greedy","config":{},"sequences":[{"tokens":["keyphrase","generation",";","beam","search"],"token_logprobs":[-0.1,-0.2,-0.3,-0.4,-0.5]}]})"
                   "\n"
                   R"({"doc_id":"d2","error":"CUDA out of memory"})"
                   "\n");
    ws::write_text(dir.file("s.jsonl"),
                   R"({"doc_id":"d1","strategy":"nucleus","config":{},"sequences":[{"tokens":["graph","ranking",";","beam","search"],"token_logprobs":[-1,-1,-1,-1,-1]},{"tokens":["attention","heads"],"token_logprobs":[-1,-1]}]})"
                   "\n");
    ws::write_text(dir.file("scores.jsonl"),
                   R"({"doc_id":"d1","phrase":"keyphrase generation","prob":0.2})" "\n"
                   R"({"doc_id":"d1","phrase":"beam search","prob":0.1})" "\n"
                   R"({"doc_id":"d1","phrase":"graph ranking","prob":0.118})" "\n"
                   R"({"doc_id":"d1","phrase":"attention heads","prob":0.116})" "\n");
    const auto o = ws::cli({"desel", "--greedy", dir.file("g.jsonl"), "--samples", dir.file("s.jsonl"), "--scores",
                            dir.file("scores.jsonl")});
    REQUIRE(o.code == 0);
    CHECK(o.err.find("export error") != std::string::npos);
    const auto lines = json::parse(o.out.substr(o.out.find('\n') + 1, o.out.find('\n', o.out.find('\n') + 1) - o.out.find('\n') - 1));
    CHECK(lines["id"] == "d1");
    CHECK(lines["phrases"] == json::array({"keyphrase generation", "beam search", "graph ranking"}));

    ws::write_text(dir.file("scores2.jsonl"), R"({"doc_id":"d1","phrase":"keyphrase generation","prob":0.2})" "\n");
    const auto miss = ws::cli({"desel", "--greedy", dir.file("g.jsonl"), "--samples", dir.file("s.jsonl"), "--scores",
                               dir.file("scores2.jsonl")});
    CHECK(miss.code == 1);
    CHECK(first_error(miss.err)["error"]["message"].get<std::string>().find("unscored phrase") != std::string::npos);
}

TEST_CASE("decode flags override the strategy defaults") {
    const auto o = ws::cli({"--seed", "3", "decode", "--mock", ws::fixture("mock_table.json"), "--corpus",
                            ws::fixture("corpus.jsonl"), "--strategy", "top_k", "--k", "3", "--n", "4", "--max-len", "6"});
    REQUIRE(o.code == 0);
    const auto header = json::parse(o.out.substr(0, o.out.find('\n')));
    const auto& cfg = header["kpforge_header"]["config"];
    CHECK(cfg["k"] == 3);
    CHECK(cfg["temperature"] == 0.7);
    CHECK(cfg["num_samples"] == 4);
    const auto rec = json::parse(o.out.substr(o.out.find('\n') + 1, o.out.find('\n', o.out.find('\n') + 1) - o.out.find('\n') - 1));
    CHECK(rec["sequences"].size() == 4);
    CHECK(rec["eos"] == "</s>");
    CHECK(ws::cli({"decode", "--mock", ws::fixture("mock_table.json"), "--corpus", ws::fixture("corpus.jsonl"),
                   "--strategy", "nucleus", "--p", "0"})
              .code == 1);
}

TEST_CASE("perturb in paraphrase mode") {
    ws::TempDir dir("para");
    const auto docs = io::read_corpus(ws::fixture("corpus.jsonl"));
    {
        io::Writer w(dir.file("para.jsonl"));
        for (const auto& d : docs) w.line(io::corpus_record(make_document(d.id, "", d.abstract, d.gold_keyphrases)));
    }
    CHECK(ws::cli({"perturb", "--corpus", ws::fixture("corpus.jsonl"), "--paraphrased", dir.file("para.jsonl")}).code == 1);
    const auto o = ws::cli({"perturb", "--corpus", ws::fixture("corpus.jsonl"), "--paraphrased", dir.file("para.jsonl"),
                            "--out", dir.file("out.jsonl"), "--targets-out", dir.file("t.jsonl")});
    REQUIRE(o.code == 0);
    for (const auto& t : io::read_targets(dir.file("t.jsonl")))
        for (const auto& x : t.targets.targets) CHECK(x.before == x.after);
    CHECK(ws::cli({"perturb", "--corpus", ws::fixture("corpus.jsonl")}).code == 1);
}

TEST_CASE("KPFORGE_THREADS is read when --threads is absent") {
    const auto reference = ws::cli({"--threads", "1", "extract", "--corpus", ws::fixture("corpus.jsonl")});
    ::setenv("KPFORGE_THREADS", "3", 1);
    const auto o = ws::cli({"extract", "--corpus", ws::fixture("corpus.jsonl")});
    ::setenv("KPFORGE_THREADS", "many", 1);
    const auto bad = ws::cli({"extract", "--corpus", ws::fixture("corpus.jsonl")});
    ::unsetenv("KPFORGE_THREADS");
    CHECK(o.code == 0);
    CHECK(o.out == reference.out);
    CHECK(bad.code == 1);
    CHECK(first_error(bad.err)["error"]["message"].get<std::string>().find("KPFORGE_THREADS") != std::string::npos);
}
