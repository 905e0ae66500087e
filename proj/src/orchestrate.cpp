#include "fedgui/orchestrate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedgui/rng.hpp"
#include "json.hpp"

namespace fedgui {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

PartitionChoice parse_partition(const json& j) {
    PartitionChoice p;
    p.num_clients = get_or(j, "num_clients", 1);
    if (j.contains("variant")) {
        const std::string name = j.at("variant").get<std::string>();
        auto v = full_variant_from_name(name);
        if (!v) throw ConfigError("unknown partition variant " + name);
        p.variant = *v;
        return p;
    }
    if (j.contains("axis")) {
        auto a = axis_from_name(j.at("axis").get<std::string>());
        if (!a) throw ConfigError("unknown partition axis");
        p.spec.axis = *a;
    }
    if (j.contains("scheme")) {
        auto s = scheme_from_name(j.at("scheme").get<std::string>());
        if (!s) throw ConfigError("unknown partition scheme");
        p.spec.scheme = *s;
    }
    p.spec.num_clients = p.num_clients;
    p.spec.alpha = get_or(j, "alpha", 1.0);
    p.spec.excluded_per_client = get_or(j, "excluded_per_client", 1);
    return p;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");

    RunConfig cfg;
    try {
        cfg.corpus_path = get_or<std::string>(j, "corpus_path", "");
        cfg.out_dir = get_or<std::string>(j, "out_dir", "out");
        cfg.master_seed = get_or<uint64_t>(j, "master_seed", 0);
        cfg.adapter_dim = get_or<uint64_t>(j, "adapter_dim", 0);

        if (j.contains("partition")) cfg.partition = parse_partition(j.at("partition"));

        if (j.contains("round")) {
            const json& r = j.at("round");
            cfg.round.total_rounds = get_or(r, "total_rounds", 30);
            cfg.round.clients_per_round = get_or(r, "clients_per_round", 3);
            cfg.round.data_fraction = get_or(r, "data_fraction", 0.10);
            const std::string w = get_or<std::string>(r, "weighting", "BY_SAMPLES");
            if (w == "BY_SAMPLES") {
                cfg.round.weighting = Weighting::BY_SAMPLES;
            } else if (w == "UNIFORM") {
                cfg.round.weighting = Weighting::UNIFORM;
            } else {
                throw ConfigError("unknown weighting " + w);
            }
        }

        if (j.contains("algo")) {
            const json& a = j.at("algo");
            const std::string name = get_or<std::string>(a, "name", "FEDAVG");
            auto algo = algo_from_name(name);
            if (!algo) throw ConfigError("unknown algorithm " + name);
            cfg.algo.name = *algo;
            cfg.algo.beta1 = get_or(a, "beta1", cfg.algo.beta1);
            cfg.algo.beta2 = get_or(a, "beta2", cfg.algo.beta2);
            cfg.algo.server_lr = get_or(a, "server_lr", cfg.algo.server_lr);
            cfg.algo.tau = get_or(a, "tau", cfg.algo.tau);
            cfg.algo.mu = get_or(a, "mu", cfg.algo.mu);
            cfg.algo.momentum_mix = get_or(a, "momentum_mix", cfg.algo.momentum_mix);
        }

        if (j.contains("trainer")) {
            const json& t = j.at("trainer");
            cfg.trainer.local_epochs = get_or(t, "local_epochs", cfg.trainer.local_epochs);
            cfg.trainer.batch_size = get_or(t, "batch_size", cfg.trainer.batch_size);
            cfg.trainer.client_lr = get_or(t, "client_lr", cfg.trainer.client_lr);
            cfg.trainer.feature_dim = get_or(t, "feature_dim", cfg.trainer.feature_dim);
        }

        if (j.contains("synth")) {
            const json& s = j.at("synth");
            SynthSpec sp;
            sp.num_values = get_or(s, "num_values", sp.num_values);
            sp.episodes_per_value = get_or(s, "episodes_per_value", sp.episodes_per_value);
            sp.feature_dim = get_or(s, "feature_dim", cfg.trainer.feature_dim);
            sp.label_noise = get_or(s, "label_noise", sp.label_noise);
            sp.separation = get_or(s, "separation", sp.separation);
            cfg.synth = sp;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    if (cfg.round.total_rounds < 0 || cfg.round.clients_per_round < 1 ||
        cfg.round.data_fraction <= 0.0 || cfg.round.data_fraction > 1.0) {
        throw ConfigError("round configuration out of range");
    }
    if (cfg.trainer.batch_size < 1 || cfg.trainer.feature_dim < 1 ||
        cfg.trainer.local_epochs < 1) {
        throw ConfigError("trainer configuration out of range");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    try {
        return parse_run_config(read_file(path));
    } catch (const IoFailure& e) {
        // An unreadable config file is a configuration problem, not a data one.
        throw ConfigError(e.what());
    }
}

std::string run_config_to_json(const RunConfig& cfg) {
    json p;
    if (cfg.partition.variant) {
        p = {{"variant", full_variant_name(*cfg.partition.variant)},
             {"num_clients", cfg.partition.num_clients}};
    } else {
        p = {{"axis", axis_name(cfg.partition.spec.axis)},
             {"scheme", scheme_name(cfg.partition.spec.scheme)},
             {"num_clients", cfg.partition.num_clients},
             {"alpha", cfg.partition.spec.alpha},
             {"excluded_per_client", cfg.partition.spec.excluded_per_client}};
    }
    json j = {
        {"corpus_path", cfg.corpus_path},
        {"out_dir", cfg.out_dir},
        {"master_seed", cfg.master_seed},
        {"adapter_dim", cfg.adapter_dim},
        {"partition", p},
        {"round",
         {{"total_rounds", cfg.round.total_rounds},
          {"clients_per_round", cfg.round.clients_per_round},
          {"data_fraction", cfg.round.data_fraction},
          {"weighting",
           cfg.round.weighting == Weighting::BY_SAMPLES ? "BY_SAMPLES" : "UNIFORM"}}},
        {"algo",
         {{"name", algo_name(cfg.algo.name)},
          {"beta1", cfg.algo.beta1},
          {"beta2", cfg.algo.beta2},
          {"server_lr", cfg.algo.server_lr},
          {"tau", cfg.algo.tau},
          {"mu", cfg.algo.mu},
          {"momentum_mix", cfg.algo.momentum_mix}}},
        {"trainer",
         {{"local_epochs", cfg.trainer.local_epochs},
          {"batch_size", cfg.trainer.batch_size},
          {"client_lr", cfg.trainer.client_lr},
          {"feature_dim", cfg.trainer.feature_dim}}},
    };
    if (cfg.synth) {
        j["synth"] = {{"num_values", cfg.synth->num_values},
                      {"episodes_per_value", cfg.synth->episodes_per_value},
                      {"feature_dim", cfg.synth->feature_dim},
                      {"label_noise", cfg.synth->label_noise},
                      {"separation", cfg.synth->separation}};
    }
    return j.dump(2);
}

uint64_t run_config_hash(const RunConfig& cfg) {
    // Machine-local paths and the round budget are excluded: the same
    // experiment hashed on another machine, or resumed toward a larger
    // total_rounds, must produce the same hash.
    RunConfig canon = cfg;
    canon.corpus_path.clear();
    canon.out_dir.clear();
    canon.round.total_rounds = 0;
    return fnv1a(run_config_to_json(canon));
}

uint64_t file_hash(const std::string& path) { return fnv1a(read_file(path)); }

void atomic_write(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoFailure("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

std::vector<Episode> load_clean_corpus(const RunConfig& cfg) {
    LoadResult loaded = load_episodes(cfg.corpus_path);
    CleanResult cleaned = clean(loaded.episodes);
    if (cleaned.kept.empty()) throw EmptyCorpus("no usable episodes in " + cfg.corpus_path);
    return std::move(cleaned.kept);
}

PartitionManifest make_manifest(const RunConfig& cfg, const std::vector<Episode>& corpus) {
    const uint64_t seed = derive_seed(cfg.master_seed, "partition");
    if (cfg.partition.variant) {
        return compose_full(corpus, *cfg.partition.variant, cfg.partition.num_clients, seed);
    }
    PartitionSpec spec = cfg.partition.spec;
    spec.seed = seed;
    return partition(corpus, spec);
}

std::map<std::string, std::vector<const Episode*>> resolve_shards(
    const PartitionManifest& manifest, const std::vector<Episode>& corpus) {
    std::map<std::string, const Episode*> by_id;
    for (const Episode& e : corpus) by_id[e.episode_id] = &e;
    std::map<std::string, std::vector<const Episode*>> out;
    for (const auto& [cid, ids] : manifest.shards) {
        auto& vec = out[cid];
        for (const std::string& id : ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw IoFailure("manifest references unknown episode " + id);
            }
            vec.push_back(it->second);
        }
    }
    return out;
}

uint64_t resolved_adapter_dim(const RunConfig& cfg, uint64_t dim) {
    if (cfg.adapter_dim > 0) return cfg.adapter_dim;
    return std::max<uint64_t>(1, dim / 256);
}

}  // namespace

void run_synth(const RunConfig& cfg) {
    if (!cfg.synth) throw ConfigError("synth section missing from config");
    SynthSpec spec = *cfg.synth;
    spec.seed = derive_seed(cfg.master_seed, "synth");
    const std::vector<Episode> episodes = gen_synthetic(spec);
    std::string body;
    for (const Episode& e : episodes) {
        body += episode_to_json_line(e);
        body += "\n";
    }
    atomic_write(cfg.corpus_path, body);
}

void run_partition(const RunConfig& cfg) {
    const std::vector<Episode> corpus = load_clean_corpus(cfg);
    const PartitionManifest manifest = make_manifest(cfg, corpus);
    fs::create_directories(cfg.out_dir);
    save_manifest(manifest, (fs::path(cfg.out_dir) / "manifest.json").string());
    save_stats_csv(partition_stats(manifest, corpus),
                   (fs::path(cfg.out_dir) / "partition_stats.csv").string());
}

void run_train(const RunConfig& cfg, const std::optional<std::string>& resume_from) {
    const std::vector<Episode> corpus = load_clean_corpus(cfg);
    const fs::path out(cfg.out_dir);
    const PartitionManifest manifest = load_manifest((out / "manifest.json").string());
    const auto shards = resolve_shards(manifest, corpus);

    const size_t dim = ToyModel::param_dim(cfg.trainer.feature_dim);
    const uint64_t cfg_hash = run_config_hash(cfg);

    ServerState state = ServerState::init(dim, cfg.algo);
    std::map<std::string, ParamVector> client_controls;
    if (resume_from) {
        Checkpoint ck = load_checkpoint(*resume_from);
        if (ck.config_hash != cfg_hash) {
            throw ConfigError("checkpoint was produced by a different configuration");
        }
        if (ck.state.params.size() != dim) {
            throw ConfigError("checkpoint dimension mismatch");
        }
        state = std::move(ck.state);
        client_controls = std::move(ck.client_controls);
    }

    RoundConfig rc = cfg.round;
    rc.seed = derive_seed(cfg.master_seed, "rounds");

    const bool scaffold = cfg.algo.name == Algo::SCAFFOLD;
    Trainer trainer = [&](const ParamVector& global, const std::vector<const Episode*>& shard,
                          uint64_t seed, const std::string& cid) {
        TrainSpec ts = cfg.trainer;
        if (cfg.algo.name == Algo::FEDPROX) {
            ts.hooks.prox_mu = cfg.algo.mu;
            ts.hooks.prox_anchor = global;
        }
        if (scaffold) {
            ts.hooks.scaffold_c = state.control;
            auto it = client_controls.find(cid);
            ts.hooks.scaffold_c_i =
                it != client_controls.end() ? it->second : ParamVector(dim, 0.0);
        }
        return local_train(global, shard, ts, seed);
    };

    std::string log_body;
    while (state.round < static_cast<uint64_t>(rc.total_rounds)) {
        RoundResult res =
            run_round(state, manifest, shards, trainer, rc, manifest.shards.size());
        if (scaffold) {
            for (const ClientUpdate& u : res.updates) {
                auto it =
                    client_controls.try_emplace(u.client_id, ParamVector(dim, 0.0)).first;
                for (size_t i = 0; i < dim; ++i) it->second[i] += (*u.control_delta)[i];
            }
        }
        state = std::move(res.state);
        log_body += round_log_to_json_line(res.log);
        log_body += "\n";
        atomic_write((out / "rounds.jsonl").string(), log_body);
    }

    save_checkpoint(state, client_controls, (out / "checkpoint.json").string(), cfg_hash);

    // Communication ledger: full-parameter payloads against adapter-only
    // payloads for the same protocol.
    const uint64_t bytes_per_param = 8;
    const uint64_t adapter_dim = resolved_adapter_dim(cfg, dim);
    const uint64_t full_per_client =
        communication_bytes(dim, bytes_per_param, PayloadMode::FULL, adapter_dim);
    const uint64_t adapter_per_client =
        communication_bytes(dim, bytes_per_param, PayloadMode::ADAPTER, adapter_dim);
    const uint64_t per_round_clients =
        static_cast<uint64_t>(rc.clients_per_round);
    json ledger = {
        {"config_hash", cfg_hash},
        {"param_dim", dim},
        {"adapter_dim", adapter_dim},
        {"bytes_per_param", bytes_per_param},
        {"clients_per_round", per_round_clients},
        {"rounds", rc.total_rounds},
        {"full_bytes_per_client_round", full_per_client},
        {"adapter_bytes_per_client_round", adapter_per_client},
        {"full_bytes_total",
         full_per_client * per_round_clients * static_cast<uint64_t>(rc.total_rounds)},
        {"adapter_bytes_total",
         adapter_per_client * per_round_clients * static_cast<uint64_t>(rc.total_rounds)},
        {"adapter_to_full_ratio",
         static_cast<double>(adapter_per_client) / static_cast<double>(full_per_client)},
    };
    atomic_write((out / "comm_ledger.json").string(), ledger.dump(2) + "\n");
}

EvalReport run_evaluate(const RunConfig& cfg,
                        const std::optional<std::string>& predictions_path) {
    const std::vector<Episode> corpus = load_clean_corpus(cfg);
    const fs::path out(cfg.out_dir);
    const uint64_t cfg_hash = run_config_hash(cfg);

    std::vector<PredictionRecord> predictions;
    if (predictions_path) {
        predictions = load_predictions(*predictions_path);
    } else {
        Checkpoint ck = load_checkpoint((out / "checkpoint.json").string());
        ToyModel model;
        model.feature_dim = cfg.trainer.feature_dim;
        if (ck.state.params.size() != ToyModel::param_dim(model.feature_dim)) {
            throw ConfigError("checkpoint dimension mismatch");
        }
        model.weights = std::move(ck.state.params);
        for (const Episode& e : corpus) {
            const auto pairs = featurize(e, model.feature_dim);
            for (size_t i = 0; i < e.steps.size(); ++i) {
                const int kind = predict_kind(model, pairs[i].features);
                PredictionRecord p;
                p.episode_id = e.episode_id;
                p.step_index = e.steps[i].index;
                p.predicted = serialize_action(default_action_for_kind(kind_from_index(kind)));
                predictions.push_back(std::move(p));
            }
        }
        save_predictions(predictions, (out / "predictions.jsonl").string());
    }

    const EvalReport report = evaluate(predictions, corpus, SpacePolicy::FIXED);

    json wrapper = json::parse(report_to_json(report));
    json doc = {
        {"config_hash", cfg_hash},
        {"corpus_hash", file_hash(cfg.corpus_path)},
        {"distribution",
         cfg.partition.variant ? full_variant_name(*cfg.partition.variant)
                               : axis_name(cfg.partition.spec.axis) + "_" +
                                     scheme_name(cfg.partition.spec.scheme)},
        {"algorithm", algo_name(cfg.algo.name)},
        {"groups", wrapper},
    };
    atomic_write((out / "report.json").string(), doc.dump(2) + "\n");

    std::ostringstream csv;
    csv << "group,metric,value,n\n";
    char buf[64];
    for (const auto& [key, g] : report.groups) {
        const std::pair<const char*, std::pair<double, size_t>> rows[] = {
            {"type_acc", {g.type_acc, g.n_steps}},
            {"ground_acc", {g.ground_acc, g.n_ground_steps}},
            {"sr", {g.sr, g.n_steps}},
        };
        for (const auto& [metric, vn] : rows) {
            std::snprintf(buf, sizeof(buf), "%.6f", vn.first);
            csv << key << "," << metric << "," << buf << "," << vn.second << "\n";
        }
    }
    atomic_write((out / "report.csv").string(), csv.str());
    return report;
}

void run_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
    std::ostringstream csv;
    csv << "run,distribution,algorithm,group,metric,value\n";
    std::optional<uint64_t> corpus_hash;
    char buf[64];
    for (const std::string& dir : run_dirs) {
        const fs::path report_path = fs::path(dir) / "report.json";
        if (!fs::exists(report_path)) {
            throw IncompleteRun("missing report.json in " + dir);
        }
        json doc = json::parse(read_file(report_path.string()), nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("groups")) {
            throw IncompleteRun("unreadable report in " + dir);
        }
        const uint64_t h = doc.at("corpus_hash").get<uint64_t>();
        if (corpus_hash && *corpus_hash != h) {
            throw CorpusMismatch("runs were evaluated on different corpora");
        }
        corpus_hash = h;
        const std::string dist = doc.at("distribution").get<std::string>();
        const std::string algo = doc.at("algorithm").get<std::string>();
        for (const auto& [group, g] : doc.at("groups").items()) {
            for (const char* metric : {"type_acc", "ground_acc", "sr"}) {
                std::snprintf(buf, sizeof(buf), "%.6f", g.at(metric).get<double>());
                csv << dir << "," << dist << "," << algo << "," << group << "," << metric
                    << "," << buf << "\n";
            }
        }
    }
    atomic_write(out_path, csv.str());
}

}  // namespace fedgui
