#include "diacdm/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "diacdm/checkpoint.hpp"
#include "diacdm/config_file.hpp"
#include "diacdm/error.hpp"
#include "diacdm/synth.hpp"
#include "diacdm/trainer.hpp"

namespace diacdm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string data;
    std::string config;
    std::string model;
    std::string out;
    std::string history;
    std::string student;
    std::string split = "test";
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::optional<std::string> ablation;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
    return f;
}

Dataset load_logged(const std::string& dir, std::ostream& err, std::size_t fallback_dim = kDefaultEmbeddingDim) {
    LoadReport report;
    Dataset ds = load_dataset(dir, fallback_dim, &report);
    if (report.fallback_total() > 0) {
        err << "note: " << report.fallback_total() << " embedding lookups will use the hash fallback\n";
    }
    return ds;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    TrainConfig cfg;
    if (!o.config.empty()) apply_train_config(load_key_values(o.config), cfg);
    if (o.seed) cfg.seed = *o.seed;
    if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
    if (o.batch_size) cfg.batch_size = *o.batch_size;
    if (o.lr) cfg.lr = *o.lr;
    if (o.ablation) cfg.ablation = parse_ablation(*o.ablation);
    cfg.validate();

    const Dataset ds = load_logged(o.data, err, cfg.dim_g ? cfg.dim_g : kDefaultEmbeddingDim);
    err << "training on " << ds.rounds.size() << " rounds, " << ds.students.size() << " students, "
        << ds.vocabulary.size() << " concepts (seed " << cfg.seed << ", " << ablation_name(cfg.ablation)
        << ")\n";
    TrainResult r = train(ds, cfg);
    save_checkpoint(r.model, o.out);
    const std::string history_path = o.history.empty() ? o.out + ".history.csv" : o.history;
    {
        auto f = open_out(history_path);
        write_history_csv(r.history, f);
    }
    err << "best epoch " << r.history.best_epoch << " of " << r.history.epochs.size() << "\n";
    json j{{"model", o.out},
           {"history", history_path},
           {"epochs", r.history.epochs.size()},
           {"best_epoch", r.history.best_epoch}};
    out << j.dump() << '\n';
    return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
    const DiaCdm model = load_checkpoint(o.model);
    const Dataset ds = load_dataset(o.data, model.config().dim);
    const std::uint64_t seed = o.seed.value_or(model.config().seed);
    const Split s = split(ds, seed);
    const std::vector<std::size_t>* part = nullptr;
    if (o.split == "train") part = &s.train;
    else if (o.split == "valid") part = &s.valid;
    else if (o.split == "test") part = &s.test;
    else if (o.split != "all") throw CLI::ValidationError("--split", "expected train, valid, test or all");

    std::vector<std::size_t> all;
    if (!part) {
        for (std::size_t i = 0; i < ds.rounds.size(); ++i) all.push_back(i);
        part = &all;
    }
    const auto inputs = prepare_inputs(ds, model.config().fallback_seed);
    const EvalResult r = evaluate(model, inputs, *part);
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    out << json{{"auc", num(r.auc)}, {"acc", num(r.acc)}, {"n", r.n}}.dump() << '\n';
    return kOk;
}

int cmd_diagnose(const Options& o, std::ostream& out, bool as_trace) {
    const DiaCdm model = load_checkpoint(o.model);
    const Dataset ds = load_dataset(o.data, model.config().dim);
    const DiagnosisReport rep = diagnose(model, ds, o.student);
    auto write = [&](std::ostream& s) {
        if (as_trace) write_trace_csv(rep, s);
        else s << diagnosis_json(rep) << '\n';
    };
    if (o.out.empty() || o.out == "-") {
        write(out);
    } else {
        auto f = open_out(o.out);
        write(f);
    }
    return kOk;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream& err) {
    SynthSpec spec = o.spec.empty() ? SynthSpec{} : synth_spec_from(load_key_values(o.spec));
    if (o.seed) spec.seed = *o.seed;
    generate(spec, o.out);
    err << "wrote " << spec.n_students * spec.rounds_per_student << " rounds to " << o.out << "\n";
    out << json{{"out", o.out},
                {"students", spec.n_students},
                {"concepts", spec.n_concepts},
                {"rounds", spec.n_students * spec.rounds_per_student}}
               .dump()
        << '\n';
    return kOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
    LoadReport report;
    const Dataset ds = load_dataset(o.data, kDefaultEmbeddingDim, &report);
    json j{{"valid", true},
           {"rounds", report.rounds},
           {"students", ds.students.size()},
           {"concepts", ds.vocabulary.size()},
           {"embedding_dim", ds.embeddings.dim()},
           {"questions_without_amr", report.questions_without_amr},
           {"missing_node_labels", report.missing_node_labels},
           {"missing_texts", report.missing_texts},
           {"missing_concepts", report.missing_concepts},
           {"fallback_total", report.fallback_total()}};
    out << j.dump(2) << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dialogue cognitive diagnosis engine", "diacdm"};
    app.require_subcommand(1);
    app.allow_extras(false);
    Options o;

    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint plus history CSV");
    train_cmd->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--config", o.config, "key = value file with TrainConfig fields")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", o.seed, "Seed for split, init and shuffling");
    train_cmd->add_option("--out", o.out, "Checkpoint path")->required();
    train_cmd->add_option("--history", o.history, "History CSV path (default: MODEL.history.csv)");
    train_cmd->add_option("--max-epochs", o.max_epochs);
    train_cmd->add_option("--batch-size", o.batch_size);
    train_cmd->add_option("--lr", o.lr);
    train_cmd->add_option("--ablation", o.ablation, "full, no_amr, no_kc, no_qm, no_ts or no_se");

    auto* eval_cmd = app.add_subcommand("eval", "Print AUC/ACC of a checkpoint as JSON");
    eval_cmd->add_option("--data", o.data)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", o.split, "train, valid, test or all")
        ->check(CLI::IsMember({"train", "valid", "test", "all"}));
    eval_cmd->add_option("--seed", o.seed, "Split seed (default: the training seed)");

    auto* diag_cmd = app.add_subcommand("diagnose", "Write a student's diagnosis report (JSON)");
    auto* trace_cmd = app.add_subcommand("trace", "Write a student's per-turn state series (CSV)");
    for (auto* c : {diag_cmd, trace_cmd}) {
        c->add_option("--data", o.data)->required()->check(CLI::ExistingDirectory);
        c->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
        c->add_option("--student", o.student)->required();
        c->add_option("--out", o.out, "Output file (default: stdout)");
    }

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with planted mastery");
    synth_cmd->add_option("--spec", o.spec, "key = value file with SynthSpec fields")->check(CLI::ExistingFile);
    synth_cmd->add_option("--seed", o.seed);
    synth_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* validate_cmd = app.add_subcommand("validate", "Check a dataset directory and print a report");
    validate_cmd->add_option("--data", o.data)->required()->check(CLI::ExistingDirectory);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << "\n";
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(o, out, err);
        if (eval_cmd->parsed()) return cmd_eval(o, out, err);
        if (diag_cmd->parsed()) return cmd_diagnose(o, out, false);
        if (trace_cmd->parsed()) return cmd_diagnose(o, out, true);
        if (synth_cmd->parsed()) return cmd_synth(o, out, err);
        if (validate_cmd->parsed()) return cmd_validate(o, out);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_data_error(e.code()) ? kDataError : kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace diacdm::cli
