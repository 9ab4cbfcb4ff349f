#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "camse/retrieval.hpp"
#include "camse/text.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

std::string cli_path() {
    const char* p = std::getenv("CAMSE_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CAMSE_CLI must point at the built binary");
    return p;
}

fs::path work_dir() {
    const char* p = std::getenv("CAMSE_CLI_WORK");
    fs::path dir = p ? fs::path(p) : fs::temp_directory_path() / "camse_cli_work";
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args) {
    const fs::path out_file = work_dir() / "cli_stdout.txt";
    const std::string cmd = cli_path() + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

std::size_t count_lines(const fs::path& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

// A small trained checkpoint shared by the answer/dump tests; built once.
struct TrainedFixture {
    fs::path dir;
    fs::path ckpt;
    fs::path config;
    fs::path data_dir;

    TrainedFixture() {
        dir = work_dir() / "fixture";
        fs::create_directories(dir);
        ckpt = dir / "model.ckpt";
        config = dir / "config.json";
        data_dir = dir / "data";
        if (fs::exists(ckpt)) return;

        RunResult synth = run_cli("--seed 9 synth --kind entity --out " + data_dir.string() +
                                  " --vocab 80 --diseases 6 --entity-len 2 --question-len 6"
                                  " --doc-len 5 --choices 3 --train-size 24 --test-size 8"
                                  " --embed-dim 12");
        REQUIRE_MESSAGE(synth.exit_code == 0, synth.out);

        json cfg;
        cfg["model"]["scales"] = 2;
        cfg["model"]["subspaces"] = 3;
        cfg["model"]["embedding_dim"] = 12;
        cfg["model"]["context_units"] = 6;
        cfg["model"]["attention_hidden"] = 6;
        cfg["model"]["gate_hidden"] = 6;
        cfg["model"]["dropout"] = 0.1;
        cfg["train"]["epochs"] = 2;
        cfg["train"]["seed"] = 21;
        cfg["train"]["dev_fraction"] = 0.2;
        cfg["paths"]["embeddings"] = (data_dir / "embeddings.txt").string();
        cfg["paths"]["train_data"] = (data_dir / "train.jsonl").string();
        cfg["paths"]["test_data"] = (data_dir / "test.jsonl").string();
        cfg["paths"]["checkpoint"] = ckpt.string();
        cfg["paths"]["metrics_log"] = (dir / "metrics.jsonl").string();
        std::ofstream(config) << cfg.dump(2);

        RunResult train = run_cli("--config " + config.string() + " train");
        REQUIRE_MESSAGE(train.exit_code == 0, train.out);
    }
};

TrainedFixture& fixture() {
    static TrainedFixture f;
    return f;
}

}  // namespace

TEST_CASE("cli index round trip and failure modes") {
    const fs::path dir = work_dir();
    const fs::path corpus = dir / "corpus.txt";
    std::ofstream(corpus) << "cough fever\nfever rash rash\nheadache\n";
    const fs::path index_path = dir / "corpus.idx";

    RunResult ok = run_cli("index --corpus " + corpus.string() + " --out " + index_path.string());
    CHECK(ok.exit_code == 0);

    camse::InvertedIndex loaded = camse::InvertedIndex::load(index_path.string());
    CHECK(loaded.doc_count() == 3);
    camse::TokenSequence query;
    query.raw = {"fever"};
    query.ids = {0};
    CHECK(camse::bm25(query, loaded).size() == 2);

    // rebuild determinism: identical bytes
    const fs::path index2 = dir / "corpus2.idx";
    run_cli("index --corpus " + corpus.string() + " --out " + index2.string());
    CHECK(read_bytes(index_path) == read_bytes(index2));

    RunResult missing = run_cli("index --corpus /nonexistent/corpus.txt --out " +
                                (dir / "x.idx").string());
    CHECK(missing.exit_code == 2);
    CHECK(missing.out.find("/nonexistent/corpus.txt") != std::string::npos);
}

TEST_CASE("cli synth writes declared record counts deterministically") {
    const fs::path dir = work_dir();
    const fs::path out1 = dir / "synth1";
    const fs::path out2 = dir / "synth2";
    const std::string args =
        " synth --kind entity --out {OUT} --vocab 100 --diseases 6 --entity-len 2"
        " --question-len 6 --doc-len 5 --choices 3 --train-size 30 --test-size 12 --embed-dim 8";
    auto run_to = [&](const fs::path& out) {
        std::string a = args;
        a.replace(a.find("{OUT}"), 5, out.string());
        return run_cli("--seed 77" + a);
    };
    CHECK(run_to(out1).exit_code == 0);
    CHECK(run_to(out2).exit_code == 0);

    std::ifstream manifest_in(out1 / "manifest.json");
    json manifest = json::parse(manifest_in);
    CHECK(count_lines(out1 / "train.jsonl") == manifest["train_count"].get<std::size_t>());
    CHECK(count_lines(out1 / "test.jsonl") == manifest["test_count"].get<std::size_t>());

    CHECK(read_bytes(out1 / "train.jsonl") == read_bytes(out2 / "train.jsonl"));
    CHECK(read_bytes(out1 / "test.jsonl") == read_bytes(out2 / "test.jsonl"));
    CHECK(read_bytes(out1 / "embeddings.txt") == read_bytes(out2 / "embeddings.txt"));

    RunResult infeasible = run_cli(" synth --kind entity --out " + (dir / "bad").string() +
                                   " --vocab 10");
    CHECK(infeasible.exit_code == 1);
}

TEST_CASE("cli train writes a checkpoint and metrics, rejects bad config keys") {
    TrainedFixture& f = fixture();
    CHECK(fs::exists(f.ckpt));
    CHECK(count_lines(fs::path(f.dir) / "metrics.jsonl") >= 1);

    // invalid config key names the key and exits with the config code
    const fs::path bad_cfg = work_dir() / "bad_config.json";
    std::ofstream(bad_cfg) << R"({"train": {"batchsize": 4}})";
    RunResult bad = run_cli("--config " + bad_cfg.string() + " train");
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("train.batchsize") != std::string::npos);
}

TEST_CASE("cli eval reports accuracy consistent with the library") {
    TrainedFixture& f = fixture();
    const fs::path report = work_dir() / "eval_report.json";
    RunResult eval = run_cli("eval --checkpoint " + f.ckpt.string() + " --data " +
                             (f.data_dir / "test.jsonl").string() + " --report " + report.string());
    REQUIRE_MESSAGE(eval.exit_code == 0, eval.out);

    std::ifstream rin(report);
    json rep = json::parse(rin);
    const double accuracy = rep["accuracy"].get<double>();
    // the report's per-instance records must reproduce the accuracy exactly
    std::size_t correct = 0;
    for (const auto& rec : rep["instances"]) {
        CHECK(rec.contains("predicted"));
        CHECK(rec.contains("gold"));
        if (rec["predicted"] == rec["gold"]) ++correct;
    }
    CHECK(accuracy == static_cast<double>(correct) /
                          static_cast<double>(rep["instances"].size()));
    std::ostringstream formatted;
    formatted << accuracy;
    CHECK(eval.out.find(formatted.str()) != std::string::npos);

    RunResult missing = run_cli("eval --checkpoint /nonexistent/model.ckpt --data " +
                                (f.data_dir / "test.jsonl").string());
    CHECK(missing.exit_code == 2);
}

TEST_CASE("cli answer mirrors predict") {
    TrainedFixture& f = fixture();
    // single-instance file from the test split
    const fs::path one = work_dir() / "one_instance.jsonl";
    {
        std::ifstream in(f.data_dir / "test.jsonl");
        std::string line;
        std::getline(in, line);
        std::ofstream(one) << line << "\n";
    }
    RunResult ans = run_cli("answer --checkpoint " + f.ckpt.string() + " --instance " +
                            one.string());
    REQUIRE_MESSAGE(ans.exit_code == 0, ans.out);
    json parsed = json::parse(ans.out);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 1);
    const int predicted = parsed[0]["predicted"].get<int>();
    const auto scores = parsed[0]["scores"].get<std::vector<double>>();
    int manual = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[static_cast<std::size_t>(manual)]) manual = static_cast<int>(i);
    }
    CHECK(predicted == manual);

    // deterministic across invocations
    RunResult again = run_cli("answer --checkpoint " + f.ckpt.string() + " --instance " +
                              one.string());
    CHECK(again.out == ans.out);
}

TEST_CASE("cli dump-attention normalizes every subspace") {
    TrainedFixture& f = fixture();
    const std::string text = "E0 E1 QN1 QN2 QN3";
    const fs::path out = work_dir() / "attn.json";
    RunResult dump = run_cli("dump-attention --checkpoint " + f.ckpt.string() + " --text \"" +
                             text + "\" --out " + out.string() + " --heatmap " +
                             (work_dir() / "heat").string());
    REQUIRE_MESSAGE(dump.exit_code == 0, dump.out);
    std::ifstream in(out);
    json parsed = json::parse(in);
    const std::size_t n_tokens = parsed["tokens"].size();
    CHECK(n_tokens == 5);
    for (const auto& scale : parsed["scales"]) {
        const std::size_t s = scale["scale"].get<std::size_t>();
        const auto& weights = scale["weights"];
        CHECK(weights.size() == n_tokens - (s - 1));
        const std::size_t r = weights[0].size();
        for (std::size_t j = 0; j < r; ++j) {
            double sum = 0.0;
            for (const auto& row : weights) sum += row[j].get<double>();
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    CHECK(fs::exists(work_dir() / "heat_scale1.csv"));
    CHECK(fs::exists(work_dir() / "heat_scale1.ppm"));

    RunResult again = run_cli("dump-attention --checkpoint " + f.ckpt.string() + " --text \"" +
                              text + "\" --out " + out.string());
    CHECK(again.exit_code == 0);
    std::ifstream in2(out);
    json parsed2 = json::parse(in2);
    CHECK(parsed == parsed2);
}

TEST_CASE("cli dump-scores emits the combined matrix with matching answer scores") {
    TrainedFixture& f = fixture();
    // build a one-choice instance so the answer's score equals the pair sum
    std::string statement, document;
    {
        std::ifstream in(f.data_dir / "test.jsonl");
        std::string line;
        std::getline(in, line);
        json rec = json::parse(line);
        statement = rec["question"].get<std::string>() + " " +
                    rec["choices"][0].get<std::string>();
        document = rec["evidence"][0][0].get<std::string>();

        json one;
        one["id"] = "single";
        one["question"] = rec["question"];
        one["choices"] = json::array({rec["choices"][0], rec["choices"][0]});
        one["evidence"] = json::array({json::array({document}), json::array()});
        std::ofstream(work_dir() / "single.jsonl") << one.dump() << "\n";
    }
    const fs::path out = work_dir() / "scores.json";
    RunResult dump = run_cli("dump-scores --checkpoint " + f.ckpt.string() + " --statement \"" +
                             statement + "\" --document \"" + document + "\" --out " + out.string());
    REQUIRE_MESSAGE(dump.exit_code == 0, dump.out);
    std::ifstream in(out);
    json parsed = json::parse(in);

    // matrix dimensions come from the checkpoint config (r = 3 here)
    for (const auto& scale : parsed["scales"]) {
        const auto& combined = scale["combined"];
        REQUIRE(combined.size() == 3);
        for (std::size_t u = 0; u < 3; ++u) {
            REQUIRE(combined[u].size() == 3);
            for (std::size_t v = 0; v < 3; ++v) {
                const double val = combined[u][v].get<double>();
                if (u == v) {
                    CHECK(val >= -1.0);
                    CHECK(val <= 1.0);
                } else {
                    CHECK(val > 0.0);
                    CHECK(val < 1.0);
                }
                const double gate_val = scale["gate"][u][v].get<double>();
                CHECK(gate_val > 0.0);
                CHECK(gate_val < 1.0);
            }
        }
    }

    // the dumped S equals the answer command's score for the single-doc choice
    RunResult ans = run_cli("answer --checkpoint " + f.ckpt.string() + " --instance " +
                            (work_dir() / "single.jsonl").string());
    REQUIRE_MESSAGE(ans.exit_code == 0, ans.out);
    json answer = json::parse(ans.out);
    CHECK(parsed["score"].get<double>() ==
          doctest::Approx(answer[0]["scores"][0].get<double>()).epsilon(1e-12));
}
