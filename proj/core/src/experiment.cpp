#include "hamball/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>

#include "hamball/index.hpp"

namespace hamball {

void ExperimentConfig::validate() const {
    shift.validate();
    if (n_source < 2 || n_target == 0 || n_query == 0) throw UsageError("ExperimentConfig: empty split");
    if (bits_list.empty()) throw UsageError("ExperimentConfig: bits_list is empty");
    for (std::size_t b : bits_list) {
        if (b == 0 || b > 64) throw UsageError("ExperimentConfig: bits must be in [1, 64] for radius search");
    }
    if (radius > 4) throw UsageError("ExperimentConfig: radius above 4 is not supported");
    train.validate();
}

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw UsageError("config: unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& t = c.train;
    return json{
        {"data",
         {{"classes", c.shift.classes},
          {"dim", c.shift.dim},
          {"center_scale", c.shift.center_scale},
          {"spread", c.shift.spread},
          {"rotation_deg", c.shift.rotation_deg},
          {"rotation_planes", c.shift.rotation_planes},
          {"translation", c.shift.translation},
          {"scale", c.shift.scale},
          {"n_source", c.n_source},
          {"n_target", c.n_target},
          {"n_query", c.n_query},
          {"seed", c.data_seed}}},
        {"train",
         {{"bits", t.bits},
          {"hidden", t.hidden},
          {"disc_hidden", t.disc_hidden},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"steps_per_epoch", t.steps_per_epoch},
          {"similar_fraction", t.similar_fraction},
          {"lr", t.lr.base},
          {"lr_gamma", t.lr.gamma},
          {"lr_power", t.lr.power},
          {"alpha", t.alpha},
          {"ip_alpha", t.ip_alpha},
          {"lambda", t.lambda},
          {"mu_max", t.mu.mu_max},
          {"mu_gamma", t.mu.gamma},
          {"hash_lr_mult", t.hash_lr_mult},
          {"disc_lr_mult", t.disc_lr_mult},
          {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},
          {"squared_norm", t.squared_norm},
          {"seed", t.seed},
          {"variant", to_string(t.variant)}}},
        {"eval", {{"bits_list", c.bits_list}, {"radius", c.radius}}},
    };
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        reject_unknown(j, {"data", "train", "eval"}, "top level");
        if (auto it = j.find("data"); it != j.end()) {
            const auto& d = *it;
            reject_unknown(d,
                           {"classes", "dim", "center_scale", "spread", "rotation_deg", "rotation_planes",
                            "translation", "scale", "n_source", "n_target", "n_query", "seed"},
                           "data");
            read(d, "classes", c.shift.classes);
            read(d, "dim", c.shift.dim);
            read(d, "center_scale", c.shift.center_scale);
            read(d, "spread", c.shift.spread);
            read(d, "rotation_deg", c.shift.rotation_deg);
            read(d, "rotation_planes", c.shift.rotation_planes);
            read(d, "translation", c.shift.translation);
            read(d, "scale", c.shift.scale);
            read(d, "n_source", c.n_source);
            read(d, "n_target", c.n_target);
            read(d, "n_query", c.n_query);
            read(d, "seed", c.data_seed);
        }
        if (auto it = j.find("train"); it != j.end()) {
            const auto& t = *it;
            reject_unknown(t,
                           {"bits", "hidden", "disc_hidden", "epochs", "batch_size", "steps_per_epoch",
                            "similar_fraction", "lr", "lr_gamma", "lr_power", "alpha", "ip_alpha", "lambda", "mu_max",
                            "mu_gamma", "hash_lr_mult", "disc_lr_mult", "momentum", "weight_decay", "squared_norm",
                            "seed", "variant"},
                           "train");
            auto& tc = c.train;
            read(t, "bits", tc.bits);
            read(t, "hidden", tc.hidden);
            read(t, "disc_hidden", tc.disc_hidden);
            read(t, "epochs", tc.epochs);
            read(t, "batch_size", tc.batch_size);
            read(t, "steps_per_epoch", tc.steps_per_epoch);
            read(t, "similar_fraction", tc.similar_fraction);
            read(t, "lr", tc.lr.base);
            read(t, "lr_gamma", tc.lr.gamma);
            read(t, "lr_power", tc.lr.power);
            read(t, "alpha", tc.alpha);
            read(t, "ip_alpha", tc.ip_alpha);
            read(t, "lambda", tc.lambda);
            read(t, "mu_max", tc.mu.mu_max);
            read(t, "mu_gamma", tc.mu.gamma);
            read(t, "hash_lr_mult", tc.hash_lr_mult);
            read(t, "disc_lr_mult", tc.disc_lr_mult);
            read(t, "momentum", tc.momentum);
            read(t, "weight_decay", tc.weight_decay);
            read(t, "squared_norm", tc.squared_norm);
            read(t, "seed", tc.seed);
            if (auto v = t.find("variant"); v != t.end()) tc.variant = parse_variant(v->get<std::string>());
        }
        if (auto it = j.find("eval"); it != j.end()) {
            reject_unknown(*it, {"bits_list", "radius"}, "eval");
            read(*it, "bits_list", c.bits_list);
            read(*it, "radius", c.radius);
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
    return experiment_from_json(j);
}

void save_experiment(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << std::setw(2) << to_json(cfg) << '\n';
    if (!out) throw IoError("write failed on " + path);
}

TransferData make_transfer_data(const ExperimentConfig& cfg) {
    cfg.shift.validate();
    // Rows are drawn sequentially, so the extra held-out source rows leave the training rows unchanged.
    auto pair = generate(cfg.shift, cfg.n_source + cfg.n_query, cfg.n_target + cfg.n_query, cfg.data_seed);
    TransferData out;
    out.source = pair.source.slice(0, cfg.n_source);
    out.heldout_source = pair.source.slice(cfg.n_source, cfg.n_source + cfg.n_query);
    out.database = pair.target.slice(0, cfg.n_target);
    out.queries = pair.target.slice(cfg.n_target, cfg.n_target + cfg.n_query);
    return out;
}

AlignmentReport measure_alignment(const ExperimentConfig& cfg, const TransferData& data, const VariantOutcome& adversarial,
                                  const VariantOutcome& source_only) {
    if (adversarial.variant == Variant::kTahA) throw UsageError("measure_alignment: first run must be adversarial");
    if (source_only.variant != Variant::kTahA) throw UsageError("measure_alignment: second run must be source-only");
    AlignmentReport r;
    r.adversarial_accuracy = domain_accuracy(adversarial.trained.disc, adversarial.trained.model,
                                             data.heldout_source.features, data.queries.features);
    // The probe gets the same step budget as the adversary had.
    TrainConfig probe_cfg = cfg.train;
    probe_cfg.bits = source_only.bits;
    const std::size_t per_epoch = probe_cfg.steps_per_epoch > 0
                                      ? probe_cfg.steps_per_epoch
                                      : (data.source.size() + probe_cfg.batch_size - 1) / probe_cfg.batch_size;
    r.probe_steps = std::max<std::size_t>(1, per_epoch * probe_cfg.epochs);
    const Discriminator probe = fit_domain_probe(source_only.trained.model, data.source.features,
                                                 data.database.features, probe_cfg, r.probe_steps);
    r.probe_accuracy =
        domain_accuracy(probe, source_only.trained.model, data.heldout_source.features, data.queries.features);
    return r;
}

RetrievalMetrics evaluate_model(const HashModel& model, const FeatureDataset& queries, const FeatureDataset& database,
                                std::size_t radius) {
    if (!queries.labels || !database.labels) throw UsageError("evaluate_model: queries and database need labels");
    const auto db_codes = encode(model, database.features);
    const auto q_codes = encode(model, queries.features);
    const CodeIndex index = CodeIndex::build(db_codes);
    const RelevanceJudge judge(*queries.labels, *database.labels);
    return evaluate_retrieval(index, q_codes, judge, radius);
}

VariantOutcome run_variant(const ExperimentConfig& cfg, const TransferData& data, Variant variant) {
    TrainConfig tc = cfg.train;
    tc.variant = variant;
    VariantOutcome out;
    out.variant = variant;
    out.bits = tc.bits;
    // TAH-A never sees target rows.
    const UnlabeledFeatures target = variant == Variant::kTahA ? UnlabeledFeatures{} : data.database.without_labels();
    out.trained = train(tc, data.source, target);
    out.metrics = evaluate_model(out.trained.model, data.queries, data.database, cfg.radius);
    return out;
}

nlohmann::json metrics_to_json(const RetrievalMetrics& m) {
    return json{
        {"radius", m.radius},
        {"num_queries", m.num_queries},
        {"empty_queries", m.empty_queries},
        {"map", m.map},
        {"precision", m.precision},
        {"avg_similar", m.avg_similar},
        {"avg_retrieved", m.avg_retrieved},
        {"conventions", {{"empty_ball_score", 0}, {"ap_denominator", "relevant_within_radius"}}},
    };
}

void write_pr_csv(const std::string& path, const std::vector<PrPoint>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "recall,precision\n" << std::setprecision(17);
    for (const auto& p : curve) out << p.recall << ',' << p.precision << '\n';
    if (!out) throw IoError("write failed on " + path);
}

const VariantOutcome& AblationTable::at(Variant v, std::size_t b) const {
    for (const auto& o : outcomes) {
        if (o.variant == v && o.bits == b) return o;
    }
    throw UsageError("AblationTable: no entry for " + std::string(to_string(v)) + " at " + std::to_string(b) + " bits");
}

AblationTable run_ablation(const ExperimentConfig& cfg) {
    cfg.validate();
    const TransferData data = make_transfer_data(cfg);
    AblationTable table;
    table.bits = cfg.bits_list;
    for (std::size_t b : cfg.bits_list) {
        ExperimentConfig at_bits = cfg;
        at_bits.train.bits = b;
        for (Variant v : {Variant::kTahT, Variant::kTahA, Variant::kTah}) {
            table.outcomes.push_back(run_variant(at_bits, data, v));
        }
        table.alignment.push_back(
            measure_alignment(at_bits, data, table.outcomes.back(), table.outcomes[table.outcomes.size() - 2]));
    }
    return table;
}

namespace {

const char* display_name(Variant v) {
    switch (v) {
        case Variant::kTah: return "TAH";
        case Variant::kTahT: return "TAH-t";
        case Variant::kTahA: return "TAH-A";
    }
    return "?";
}

}  // namespace

void write_ablation_csv(const std::string& path, const AblationTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "method";
    for (std::size_t b : table.bits) out << ',' << b << " bits";
    out << '\n' << std::fixed << std::setprecision(4);
    for (Variant v : {Variant::kTahT, Variant::kTahA, Variant::kTah}) {
        out << display_name(v);
        for (std::size_t b : table.bits) out << ',' << table.at(v, b).metrics.map;
        out << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

void write_ablation_long_csv(const std::string& path, const AblationTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "method,bits,map,precision,avg_similar,avg_retrieved,empty_queries,final_disc_accuracy\n";
    out << std::setprecision(17);
    for (const auto& o : table.outcomes) {
        const double acc = o.trained.history.empty() ? 0.0 : o.trained.history.back().disc_accuracy;
        out << display_name(o.variant) << ',' << o.bits << ',' << o.metrics.map << ',' << o.metrics.precision << ','
            << o.metrics.avg_similar << ',' << o.metrics.avg_retrieved << ',' << o.metrics.empty_queries << ','
            << acc << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}



AblationTable ablate_to_dir(const ExperimentConfig& cfg, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };
    save_experiment(cfg, path("config.json"));
    AblationTable table = run_ablation(cfg);
    write_ablation_csv(path("ablation.csv"), table);
    write_ablation_long_csv(path("ablation_long.csv"), table);
    for (const auto& o : table.outcomes) {
        const std::string stem = std::string(to_string(o.variant)) + "_" + std::to_string(o.bits);
        write_pr_csv(path("pr_" + stem + ".csv"), o.metrics.pr_curve);
        write_history_csv(path("history_" + stem + ".csv"), o.trained.history);
    }
    nlohmann::json alignment = nlohmann::json::array();
    for (std::size_t k = 0; k < table.bits.size(); ++k) {
        const auto& r = table.alignment[k];
        alignment.push_back({{"bits", table.bits[k]},
                             {"tah_discriminator_accuracy", r.adversarial_accuracy},
                             {"probe_accuracy_on_tah_a_codes", r.probe_accuracy},
                             {"probe_steps", r.probe_steps}});
    }
    std::ofstream out(path("alignment.json"), std::ios::trunc);
    if (!out) throw IoError("cannot open " + path("alignment.json") + " for writing");
    out << alignment.dump(2) << "\n";
    return table;
}

}  // namespace hamball
