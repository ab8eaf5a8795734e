// hamball: command-line front end for the transfer hashing pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hamball/codes.hpp"
#include "hamball/data.hpp"
#include "hamball/error.hpp"
#include "hamball/eval.hpp"
#include "hamball/experiment.hpp"
#include "hamball/index.hpp"
#include "hamball/net.hpp"
#include "hamball/trainer.hpp"

namespace fs = std::filesystem;
using namespace hamball;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

// Shared overrides applied on top of --config.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> bits;
    std::optional<std::size_t> radius;
    std::optional<std::string> variant;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_variant) {
    cmd->add_option("--config", o.config, "Experiment config JSON");
    cmd->add_option("--seed", o.seed, "Seed for both data generation and training");
    cmd->add_option("--bits", o.bits, "Code length b");
    cmd->add_option("--radius", o.radius, "Hamming retrieval radius");
    if (with_variant) {
        cmd->add_option("--variant", o.variant, "Method variant")->check(CLI::IsMember({"tah", "tah-t", "tah-a"}));
    }
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_experiment(o.config);
    if (o.seed) {
        cfg.data_seed = *o.seed;
        cfg.train.seed = *o.seed;
    }
    if (o.bits) {
        cfg.train.bits = *o.bits;
        cfg.bits_list = {*o.bits};
    }
    if (o.radius) cfg.radius = *o.radius;
    if (o.variant) cfg.train.variant = parse_variant(*o.variant);
    cfg.validate();
    return cfg;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// One code per line written as '0'/'1' characters, bit k first; the length sets b.
std::vector<BinaryCode> load_codes_text(const std::string& path, std::size_t* bits_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<BinaryCode> codes;
    std::size_t bits = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (bits == 0) bits = line.size();
        if (line.size() != bits) throw IoError(path + ": line " + std::to_string(line_no) + " has a different length");
        BinaryCode c(bits);
        for (std::size_t k = 0; k < bits; ++k) {
            if (line[k] != '0' && line[k] != '1') {
                throw IoError(path + ": line " + std::to_string(line_no) + " holds a character other than 0/1");
            }
            c.set_bit(k, line[k] == '1');
        }
        codes.push_back(std::move(c));
    }
    if (bits_out) *bits_out = bits;
    return codes;
}

std::vector<BinaryCode> load_any_codes(const std::string& path) {
    std::size_t bits = 0;
    if (path.ends_with(".txt")) return load_codes_text(path, &bits);
    return load_codes(path, &bits);
}

std::vector<std::uint32_t> load_labels(const std::string& path) {
    if (path.ends_with(".txt")) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path);
        std::vector<std::uint32_t> labels;
        long long v = 0;
        while (in >> v) {
            if (v < 0) throw IoError(path + ": negative label");
            labels.push_back(static_cast<std::uint32_t>(v));
        }
        if (!in.eof()) throw IoError(path + ": expected one integer label per line");
        return labels;
    }
    auto ds = load_features(path);
    if (!ds.labels) throw UsageError(path + " carries no labels");
    return *ds.labels;
}

void write_model_meta(const std::string& path, const TrainConfig& cfg, std::size_t dim) {
    write_json(path, {{"bits", cfg.bits},
                      {"input_dim", dim},
                      {"alpha", cfg.effective_alpha()},
                      {"ip_alpha", cfg.effective_ip_alpha()},
                      {"lambda", cfg.lambda},
                      {"seed", cfg.seed},
                      {"variant", to_string(cfg.variant)}});
}

struct DataFiles {
    FeatureDataset source;
    FeatureDataset database;
    FeatureDataset queries;
};

DataFiles load_data_dir(const std::string& dir, bool need_queries) {
    DataFiles d;
    d.source = load_features(join(dir, "source.hfv"), Domain::kSource);
    d.database = load_features(join(dir, "target.hfv"), Domain::kTarget);
    if (need_queries) d.queries = load_features(join(dir, "queries.hfv"), Domain::kTarget);
    return d;
}

int cmd_gen(const Overrides& o, const std::string& out) {
    const ExperimentConfig cfg = resolve(o);
    make_dir(out);
    const TransferData data = make_transfer_data(cfg);
    save_features(data.source, join(out, "source.hfv"));
    save_features(data.database, join(out, "target.hfv"));
    save_features(data.queries, join(out, "queries.hfv"));
    save_experiment(cfg, join(out, "config.json"));
    std::cout << "source " << data.source.size() << " target " << data.database.size() << " queries "
              << data.queries.size() << " dim " << data.source.dim() << "\n";
    return kOk;
}

int cmd_train(const Overrides& o, const std::string& data_dir, const std::string& out) {
    const ExperimentConfig cfg = resolve(o);
    const DataFiles d = load_data_dir(data_dir, false);
    make_dir(out);
    save_experiment(cfg, join(out, "config.json"));
    // Target labels stay behind: training only ever sees the unlabeled view.
    const UnlabeledFeatures target = d.database.without_labels();
    Trainer trainer(cfg.train, d.source, target);
    try {
        for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
            trainer.run_epoch();
            const auto& r = trainer.history().back();
            std::cerr << "epoch " << r.epoch << " J " << r.j << " D " << r.d << " acc " << r.disc_accuracy << "\n";
        }
    } catch (const TrainingAborted& e) {
        std::ofstream(join(out, "abort_dump.txt")) << e.dump();
        write_history_csv(join(out, "history.csv"), trainer.history());
        throw;
    }
    save_mlp(join(out, "model.bin"), trainer.model().net());
    if (cfg.train.variant != Variant::kTahA) save_mlp(join(out, "disc.bin"), trainer.discriminator().net());
    write_model_meta(join(out, "model.json"), cfg.train, d.source.dim());
    write_history_csv(join(out, "history.csv"), trainer.history());
    return kOk;
}

int cmd_encode(const std::string& model_path, const std::string& features, const std::string& out) {
    const HashModel model(load_mlp(model_path));
    const FeatureDataset ds = features.ends_with(".csv") ? load_features_csv(features) : load_features(features);
    const auto codes = encode(model, ds.features);
    save_codes(out, model.bits(), codes);
    std::cout << codes.size() << " codes of " << model.bits() << " bits\n";
    return kOk;
}

int cmd_index(const std::string& codes_path, const std::string& out) {
    std::size_t bits = 0;
    const auto codes = codes_path.ends_with(".txt") ? load_codes_text(codes_path, &bits) : load_codes(codes_path, &bits);
    const CodeIndex index = CodeIndex::build(codes);
    make_dir(out);
    save_codes(join(out, "codes.hbc"), bits, codes);
    std::vector<std::uint64_t> ids(codes.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    save_ids(join(out, "ids.hid"), ids);
    std::cout << "items " << index.size() << " buckets " << index.num_buckets() << " bits " << bits << "\n";
    return kOk;
}

int cmd_query(const std::string& index_dir, const std::string& code_text, std::size_t radius) {
    const CodeIndex index = CodeIndex::load(join(index_dir, "codes.hbc"), join(index_dir, "ids.hid"));
    BinaryCode q;
    if (code_text.find_first_not_of("01") == std::string::npos && code_text.size() == index.bits()) {
        q = BinaryCode(index.bits());
        for (std::size_t k = 0; k < code_text.size(); ++k) q.set_bit(k, code_text[k] == '1');
    } else {
        q = BinaryCode::from_hex(index.bits(), code_text);
    }
    QueryStats stats;
    for (const auto& n : index.query_radius(q, radius, &stats)) std::cout << n.id << " " << n.distance << "\n";
    std::cerr << "probes " << stats.probes << " hits " << stats.hits << "\n";
    return kOk;
}

void write_eval_outputs(const std::string& out, const RetrievalMetrics& m, const nlohmann::json& extra) {
    nlohmann::json j = metrics_to_json(m);
    for (const auto& [k, v] : extra.items()) j[k] = v;
    write_json(join(out, "metrics.json"), j);
    write_pr_csv(join(out, "pr_curve.csv"), m.pr_curve);
    std::cout << "map " << m.map << " precision " << m.precision << " avg_similar " << m.avg_similar << "\n";
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string db_codes;
    std::string db_labels;
    std::string query_codes;
    std::string query_labels;
    std::string out;
};

int cmd_eval(const Overrides& o, const EvalArgs& a) {
    const ExperimentConfig cfg = resolve(o);
    make_dir(a.out);
    save_experiment(cfg, join(a.out, "config.json"));
    if (!a.model.empty()) {
        if (a.data.empty()) throw UsageError("eval: --model needs --data");
        const HashModel model(load_mlp(a.model));
        const DataFiles d = load_data_dir(a.data, true);
        const auto m = evaluate_model(model, d.queries, d.database, cfg.radius);
        write_eval_outputs(a.out, m, {{"model", a.model}, {"data", a.data}});
        return kOk;
    }
    if (a.db_codes.empty() || a.db_labels.empty()) {
        throw UsageError("eval: give either --model/--data or --db-codes/--db-labels");
    }
    const auto db = load_any_codes(a.db_codes);
    const auto db_labels = load_labels(a.db_labels);
    // Without explicit queries every database item queries the database.
    const auto queries = a.query_codes.empty() ? db : load_any_codes(a.query_codes);
    const auto q_labels = a.query_labels.empty() ? db_labels : load_labels(a.query_labels);
    if (db.size() != db_labels.size() || queries.size() != q_labels.size()) {
        throw UsageError("eval: code and label counts differ");
    }
    const CodeIndex index = CodeIndex::build(db);
    const RelevanceJudge judge(q_labels, db_labels);
    write_eval_outputs(a.out, evaluate_retrieval(index, queries, judge, cfg.radius), {});
    return kOk;
}

int cmd_ablate(const Overrides& o, const std::string& out) {
    ablate_to_dir(resolve(o), out);
    std::ifstream csv(join(out, "ablation.csv"));
    std::cout << csv.rdbuf();
    return kOk;
}

void report(int code, const char* kind, const std::string& message) {
    nlohmann::json j{{"error", kind}, {"exit_code", code}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer adversarial hashing with Hamming-ball retrieval"};
    app.require_subcommand(1);

    Overrides o;
    std::string out;
    std::string data_dir;

    auto* gen = app.add_subcommand("gen", "Generate the synthetic source/target task");
    add_overrides(gen, o, false);
    gen->add_option("--out", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train a hash network");
    add_overrides(train, o, true);
    train->add_option("--data", data_dir, "Directory written by gen")->required();
    train->add_option("--out", out, "Output directory")->required();

    std::string model_path, features_path, codes_path, index_dir, code_text;
    auto* enc = app.add_subcommand("encode", "Binary codes for a feature file");
    enc->add_option("--model", model_path, "model.bin from train")->required();
    enc->add_option("--features", features_path, "HFV1 or CSV features")->required();
    enc->add_option("--out", out, "Output HBC1 code file")->required();

    auto* idx = app.add_subcommand("index", "Build and persist a Hamming-ball index");
    idx->add_option("--codes", codes_path, "HBC1 codes, or .txt with one 0/1 string per line")->required();
    idx->add_option("--out", out, "Index directory")->required();

    std::size_t query_radius = 2;
    auto* qry = app.add_subcommand("query", "Print (id, distance) for codes within a radius");
    qry->add_option("--index", index_dir, "Directory written by index")->required();
    qry->add_option("--code", code_text, "Query code as hex or a 0/1 string")->required();
    qry->add_option("--radius", query_radius, "Hamming radius");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Retrieval metrics within the radius");
    add_overrides(ev, o, false);
    ev->add_option("--model", ea.model, "model.bin from train");
    ev->add_option("--data", ea.data, "Directory written by gen");
    ev->add_option("--db-codes", ea.db_codes, "Database codes (HBC1 or .txt)");
    ev->add_option("--db-labels", ea.db_labels, "Database labels (HFV1 or .txt)");
    ev->add_option("--query-codes", ea.query_codes, "Query codes; defaults to the database");
    ev->add_option("--query-labels", ea.query_labels, "Query labels; defaults to the database");
    ev->add_option("--out", ea.out, "Output directory")->required();

    auto* abl = app.add_subcommand("ablate", "Train TAH, TAH-t and TAH-A and compare");
    add_overrides(abl, o, false);
    abl->add_option("--out", out, "Output directory")->required();

    auto* show = app.add_subcommand("config", "Print the effective config as JSON");
    add_overrides(show, o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report(kUsage, "usage", e.what());
        return kUsage;
    }

    try {
        if (*gen) return cmd_gen(o, out);
        if (*train) return cmd_train(o, data_dir, out);
        if (*enc) return cmd_encode(model_path, features_path, out);
        if (*idx) return cmd_index(codes_path, out);
        if (*qry) return cmd_query(index_dir, code_text, query_radius);
        if (*ev) return cmd_eval(o, ea);
        if (*abl) return cmd_ablate(o, out);
        if (*show) {
            std::cout << to_json(resolve(o)).dump(2) << "\n";
            return kOk;
        }
    } catch (const UsageError& e) {
        report(kUsage, "usage", e.what());
        return kUsage;
    } catch (const IoError& e) {
        report(kIo, "io", e.what());
        return kIo;
    } catch (const NumericalError& e) {
        report(kNumerical, "numerical", e.what());
        return kNumerical;
    } catch (const std::logic_error& e) {
        report(kUsage, "usage", e.what());
        return kUsage;
    } catch (const std::overflow_error& e) {
        report(kUsage, "usage", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        report(kIo, "io", e.what());
        return kIo;
    }
    return kOk;
}
