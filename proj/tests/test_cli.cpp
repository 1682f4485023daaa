#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "diacdm/cli.hpp"
#include "support.hpp"

using diacdm::testing::read_file;
using diacdm::testing::TempDir;
using diacdm::testing::write_file;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = diacdm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void tiny_synth(const TempDir& dir) {
    write_file(dir / "spec.txt", "n_students = 8\nn_concepts = 4\nrounds_per_student = 5\ndim_g = 6\nseed = 3\n");
    REQUIRE(cli({"synth", "--spec", (dir / "spec.txt").string(), "--out", (dir / "data").string()}).code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
    const Result r = cli({"train", "--out", "m.json"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--data") != std::string::npos);
    CHECK(r.out.empty());
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"validate", "--data", ".", "--bogus"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("validate a generated directory") {
    TempDir dir;
    tiny_synth(dir);
    const Result r = cli({"validate", "--data", (dir / "data").string()});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["rounds"] == 40);
    CHECK(j["fallback_total"] == 0);
}

TEST_CASE("data errors exit 2") {
    TempDir dir;
    write_file(dir / "dialogues.jsonl", R"({"student_id": "s", "turn": 1, "question_id": "q", "answer_id": "a", "evaluation_id": "e", "concepts": ["x"], "correct": 5})" "\n");
    write_file(dir / "concepts.txt", "x\n");
    const Result r = cli({"validate", "--data", dir.path().string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("BadCorrectness") != std::string::npos);
    write_file(dir / "bad.cfg", "learning_rate = 3\n");
    CHECK(cli({"train", "--data", dir.path().string(), "--config", (dir / "bad.cfg").string(), "--out",
               (dir / "m.json").string()})
              .code == 2);
}

TEST_CASE("train, eval, diagnose, trace") {
    TempDir dir;
    tiny_synth(dir);
    write_file(dir / "train.cfg", "max_epochs = 3\nhidden = 8\nbatch_size = 16\n");
    const std::string data = (dir / "data").string();
    const std::string model = (dir / "m.json").string();
    const Result t = cli({"train", "--data", data, "--config", (dir / "train.cfg").string(), "--seed", "5", "--out", model});
    REQUIRE(t.code == 0);
    CHECK(nlohmann::json::parse(t.out)["epochs"] <= 3);
    const std::string history = read_file(model + ".history.csv");
    CHECK(history.starts_with("epoch,train_loss,valid_auc,valid_acc\n"));

    const Result e = cli({"eval", "--data", data, "--model", model, "--split", "test"});
    REQUIRE(e.code == 0);
    const auto j = nlohmann::json::parse(e.out);
    CHECK(j.contains("auc"));
    CHECK(j.contains("acc"));
    CHECK(j["n"] == 4);

    const Result d = cli({"diagnose", "--data", data, "--model", model, "--student", "s0", "--out",
                          (dir / "diag.json").string()});
    REQUIRE(d.code == 0);
    CHECK(nlohmann::json::parse(read_file(dir / "diag.json"))["rounds"].size() == 5);

    const Result tr = cli({"trace", "--data", data, "--model", model, "--student", "s0"});
    REQUIRE(tr.code == 0);
    CHECK(tr.out.starts_with("turn,stuState,queMatch,staInRes,staInTea\n"));
    CHECK(std::count(tr.out.begin(), tr.out.end(), '\n') == 6);

    CHECK(cli({"trace", "--data", data, "--model", model, "--student", "nobody"}).code == 2);
}

TEST_CASE("identical flags give identical outputs") {
    TempDir dir;
    tiny_synth(dir);
    const std::string data = (dir / "data").string();
    for (const char* name : {"a.json", "b.json"})
        REQUIRE(cli({"train", "--data", data, "--seed", "9", "--max-epochs", "2", "--out", (dir / name).string()}).code == 0);
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
    CHECK(read_file(dir / "a.json.history.csv") == read_file(dir / "b.json.history.csv"));
}

TEST_CASE("flags override the config file") {
    TempDir dir;
    tiny_synth(dir);
    write_file(dir / "train.cfg", "max_epochs = 9\nseed = 1\n");
    const Result t = cli({"train", "--data", (dir / "data").string(), "--config", (dir / "train.cfg").string(),
                          "--max-epochs", "1", "--seed", "2", "--out", (dir / "m.json").string()});
    REQUIRE(t.code == 0);
    CHECK(nlohmann::json::parse(t.out)["epochs"] == 1);
    CHECK(nlohmann::json::parse(read_file(dir / "m.json"))["config"]["seed"] == 2);
}

}  // TEST_SUITE
