#include "diacdm/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "diacdm/error.hpp"
#include "diacdm/rng.hpp"

namespace diacdm {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t Dataset::concept_index(std::string_view concept_id) const {
    auto it = concept_index_.find(std::string(concept_id));
    if (it == concept_index_.end()) {
        throw Error(Errc::UnknownConcept, "concept '" + std::string(concept_id) + "'");
    }
    return it->second;
}

std::size_t Dataset::student_index(std::string_view student_id) const {
    auto it = student_index_.find(std::string(student_id));
    if (it == student_index_.end()) {
        throw Error(Errc::UnknownStudent, "student '" + std::string(student_id) + "'");
    }
    return it->second;
}

void Dataset::reindex() {
    concept_index_.clear();
    student_index_.clear();
    for (std::size_t i = 0; i < vocabulary.size(); ++i) concept_index_.emplace(vocabulary[i], i);
    for (std::size_t i = 0; i < students.size(); ++i) student_index_.emplace(students[i], i);
}

namespace {

std::ifstream open_required(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    return in;
}

template <typename Fn>
void for_each_json_line(std::istream& in, const std::string& source, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(Errc::MalformedRecord, where + ": " + e.what());
        }
        if (!obj.is_object()) throw Error(Errc::MalformedRecord, where + ": not a JSON object");
        fn(obj, where);
    }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw Error(Errc::MalformedRecord, where + ": missing string field '" + key + "'");
    }
    return obj[key].get<std::string>();
}

DialogueRound parse_round(const json& obj, const std::string& where) {
    DialogueRound r;
    r.student_id = require_string(obj, "student_id", where);
    r.question_id = require_string(obj, "question_id", where);
    r.answer_id = require_string(obj, "answer_id", where);
    r.evaluation_id = require_string(obj, "evaluation_id", where);
    if (!obj.contains("turn") || !obj["turn"].is_number_integer() || obj["turn"].get<long>() < 1) {
        throw Error(Errc::MalformedRecord, where + ": 'turn' must be an integer >= 1");
    }
    r.turn = obj["turn"].get<int>();
    if (!obj.contains("concepts") || !obj["concepts"].is_array() || obj["concepts"].empty()) {
        throw Error(Errc::MalformedRecord, where + ": 'concepts' must be a non-empty array");
    }
    for (const auto& c : obj["concepts"]) {
        if (!c.is_string()) throw Error(Errc::MalformedRecord, where + ": concept ids must be strings");
        r.concepts.push_back(c.get<std::string>());
    }
    if (!obj.contains("correct")) throw Error(Errc::MalformedRecord, where + ": missing 'correct'");
    const json& c = obj["correct"];
    if (!c.is_number_integer() || (c.get<long>() != 0 && c.get<long>() != 1)) {
        throw Error(Errc::BadCorrectness, where + ": correct = " + c.dump());
    }
    r.correct = c.get<int>();
    return r;
}

}  // namespace

Dataset load_dataset(const fs::path& dir, std::size_t fallback_dim, LoadReport* report) {
    Dataset ds;

    {
        const fs::path path = dir / "concepts.txt";
        auto in = open_required(path);
        std::set<std::string> seen;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
                line.pop_back();
            const auto start = line.find_first_not_of(" \t");
            if (start == std::string::npos) continue;
            line.erase(0, start);
            if (!seen.insert(line).second) {
                throw Error(Errc::DuplicateId, path.string() + ": concept '" + line + "' listed twice");
            }
            ds.vocabulary.push_back(line);
        }
        if (ds.vocabulary.empty()) throw Error(Errc::EmptyFile, path.string() + " lists no concepts");
    }

    {
        const fs::path path = dir / "dialogues.jsonl";
        auto in = open_required(path);
        std::set<std::pair<std::string, int>> keys;
        std::set<std::string> known_students;
        for_each_json_line(in, path.string(), [&](const json& obj, const std::string& where) {
            DialogueRound r = parse_round(obj, where);
            if (!keys.emplace(r.student_id, r.turn).second) {
                throw Error(Errc::DuplicateRound, where + ": student '" + r.student_id + "' turn " +
                                                      std::to_string(r.turn));
            }
            if (known_students.insert(r.student_id).second) ds.students.push_back(r.student_id);
            ds.rounds.push_back(std::move(r));
        });
        if (ds.rounds.empty()) throw Error(Errc::EmptyFile, path.string() + " has no rounds");
    }
    ds.reindex();
    for (std::size_t i = 0; i < ds.rounds.size(); ++i) {
        try {
            (void)qmask(ds.rounds[i].concepts, ds.vocabulary);
        } catch (const Error& e) {
            throw Error(e.code(), "round " + std::to_string(i + 1) + " (student '" +
                                      ds.rounds[i].student_id + "', turn " +
                                      std::to_string(ds.rounds[i].turn) + "): " + e.what());
        }
    }

    if (const fs::path path = dir / "amr.jsonl"; fs::exists(path)) {
        std::ifstream in(path);
        for_each_json_line(in, path.string(), [&](const json& obj, const std::string& where) {
            // Marker lines (no question_id) carry metadata only.
            if (!obj.contains("question_id")) return;
            const std::string qid = require_string(obj, "question_id", where);
            const std::string text = require_string(obj, "penman", where);
            AmrGraph graph;
            try {
                graph = parse_penman(text);
            } catch (const Error& e) {
                throw Error(e.code(), where + ": question '" + qid + "': " + e.what());
            }
            if (!ds.amr.emplace(qid, std::move(graph)).second) {
                throw Error(Errc::DuplicateId, where + ": question '" + qid + "' has two graphs");
            }
        });
    }

    if (const fs::path path = dir / "embeddings.jsonl"; fs::exists(path)) {
        ds.embeddings = load_embeddings(path);
    } else {
        ds.embeddings = EmbeddingTable(fallback_dim);
    }

    if (report) *report = inspect_dataset(ds);
    return ds;
}

LoadReport inspect_dataset(const Dataset& ds) {
    LoadReport rep;
    rep.rounds = ds.rounds.size();
    std::set<std::string> questions, labels, texts, concepts;
    for (const auto& r : ds.rounds) {
        questions.insert(r.question_id);
        texts.insert(r.answer_id);
        texts.insert(r.evaluation_id);
        concepts.insert(r.concepts.begin(), r.concepts.end());
    }
    for (const auto& q : questions) {
        auto it = ds.amr.find(q);
        if (it == ds.amr.end()) {
            ++rep.questions_without_amr;
            texts.insert(q);  // encoded from its text embedding instead
            continue;
        }
        for (const auto& n : it->second.nodes) labels.insert(n.label);
    }
    for (const auto& l : labels) rep.missing_node_labels += !ds.embeddings.contains(l);
    for (const auto& t : texts) rep.missing_texts += !ds.embeddings.contains(t);
    for (const auto& c : concepts) rep.missing_concepts += !ds.embeddings.contains(c);
    return rep;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::IoError, (dir / name).string());
        return out;
    };
    {
        auto out = open("concepts.txt");
        for (const auto& c : ds.vocabulary) out << c << '\n';
    }
    {
        auto out = open("dialogues.jsonl");
        for (const auto& r : ds.rounds) {
            json obj;
            obj["student_id"] = r.student_id;
            obj["turn"] = r.turn;
            obj["question_id"] = r.question_id;
            obj["answer_id"] = r.answer_id;
            obj["evaluation_id"] = r.evaluation_id;
            obj["concepts"] = r.concepts;
            obj["correct"] = r.correct;
            out << obj.dump() << '\n';
        }
    }
    {
        auto out = open("amr.jsonl");
        for (const auto& [qid, graph] : ds.amr) {
            json obj;
            obj["question_id"] = qid;
            obj["penman"] = to_penman(graph);
            out << obj.dump() << '\n';
        }
    }
    if (!ds.embeddings.empty()) {
        auto out = open("embeddings.jsonl");
        write_embeddings(ds.embeddings, out);
    }
}

Split split(std::size_t n, std::uint64_t seed, SplitRatios ratios) {
    double total = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw Error(Errc::BadConfig, "split ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::BadConfig, "split ratios must sum to 1");

    // Largest remainder: floor every share, then hand the leftover rounds to
    // the largest fractional parts (ties go to the earlier part).
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = ratios[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];

    for (std::size_t i = 0; i < 3; ++i) {
        if (sizes[i] == 0) {
            throw Error(Errc::TooFewRounds, std::to_string(n) + " rounds cannot fill a " +
                                                std::to_string(ratios[0]) + ":" + std::to_string(ratios[1]) +
                                                ":" + std::to_string(ratios[2]) + " split");
        }
    }

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(idx);

    Split s;
    auto first = idx.begin();
    s.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
    first += static_cast<std::ptrdiff_t>(sizes[0]);
    s.valid.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
    first += static_cast<std::ptrdiff_t>(sizes[1]);
    s.test.assign(first, idx.end());
    return s;
}

Split split(const Dataset& dataset, std::uint64_t seed, SplitRatios ratios) {
    return split(dataset.rounds.size(), seed, ratios);
}

QMask qmask(std::span<const std::string> concepts, std::span<const std::string> vocabulary) {
    if (concepts.empty()) throw Error(Errc::MalformedRecord, "question has no concepts");
    QMask mask;
    mask.bits.assign(vocabulary.size(), 0.0);
    for (const auto& c : concepts) {
        auto it = std::find(vocabulary.begin(), vocabulary.end(), c);
        if (it == vocabulary.end()) throw Error(Errc::UnknownConcept, "concept '" + c + "'");
        double& bit = mask.bits[static_cast<std::size_t>(it - vocabulary.begin())];
        if (bit == 1.0) throw Error(Errc::MalformedRecord, "concept '" + c + "' listed twice");
        bit = 1.0;
    }
    return mask;
}

}  // namespace diacdm
