#include "fedgui/fl.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>

#include "fedgui/rng.hpp"
#include "json.hpp"

namespace fedgui {

using json = nlohmann::ordered_json;

namespace {
const std::array<std::string, 7> kAlgoNames = {"FEDAVG",  "FEDPROX", "SCAFFOLD", "FEDAVGM",
                                               "FEDADAM", "FEDYOGI", "FEDADAGRAD"};

void check_finite(const ParamVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NonFiniteDelta("non-finite entry in delta");
    }
}
}  // namespace

const std::string& algo_name(Algo a) { return kAlgoNames[static_cast<int>(a)]; }

std::optional<Algo> algo_from_name(std::string_view name) {
    for (int i = 0; i < 7; ++i) {
        if (kAlgoNames[i] == name) return static_cast<Algo>(i);
    }
    return std::nullopt;
}

ServerState ServerState::init(size_t dim, const AlgoConfig& cfg) {
    ServerState s;
    s.params.assign(dim, 0.0);
    s.momentum.assign(dim, 0.0);
    s.second_moment.assign(dim, 0.0);
    s.control.assign(dim, 0.0);
    s.algo = cfg;
    return s;
}

ParamVector aggregate(const std::vector<ClientUpdate>& updates, Weighting weighting) {
    if (updates.empty()) throw EmptyUpdateSet("no client updates to aggregate");
    const size_t dim = updates.front().delta.size();
    // Sum in sorted client-id order so the result is independent of the
    // selection order (floating-point addition is not associative).
    std::vector<const ClientUpdate*> ordered;
    ordered.reserve(updates.size());
    for (const ClientUpdate& u : updates) ordered.push_back(&u);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) {
                  return a->client_id < b->client_id;
              });
    ParamVector out(dim, 0.0);
    double total_weight = 0.0;
    for (const ClientUpdate* up : ordered) {
        const ClientUpdate& u = *up;
        if (u.delta.size() != dim) throw DimMismatch("client delta dimension mismatch");
        const double w = weighting == Weighting::BY_SAMPLES
                             ? static_cast<double>(u.num_samples)
                             : 1.0;
        for (size_t i = 0; i < dim; ++i) out[i] += w * u.delta[i];
        total_weight += w;
    }
    if (total_weight <= 0.0) throw EmptyUpdateSet("zero total aggregation weight");
    for (double& x : out) x /= total_weight;
    check_finite(out);
    return out;
}

ServerState server_step(const ServerState& state, const ParamVector& agg_delta) {
    const size_t dim = state.params.size();
    if (agg_delta.size() != dim) throw DimMismatch("aggregate delta dimension mismatch");
    check_finite(agg_delta);

    ServerState s = state;
    s.round = state.round + 1;
    const AlgoConfig& c = state.algo;

    switch (c.name) {
        case Algo::FEDAVG:
        case Algo::FEDPROX:
        case Algo::SCAFFOLD:
            // Server learning rate 1.0 for all three.
            for (size_t i = 0; i < dim; ++i) s.params[i] += agg_delta[i];
            break;
        case Algo::FEDAVGM:
            // Interpolation between the historical and the freshly averaged
            // model: x <- mix*x + (1-mix)*(x + delta).
            for (size_t i = 0; i < dim; ++i) {
                s.params[i] += (1.0 - c.momentum_mix) * agg_delta[i];
            }
            break;
        case Algo::FEDADAGRAD:
            for (size_t i = 0; i < dim; ++i) {
                s.second_moment[i] += agg_delta[i] * agg_delta[i];
                s.params[i] +=
                    c.server_lr * agg_delta[i] / (std::sqrt(s.second_moment[i]) + c.tau);
            }
            break;
        case Algo::FEDADAM:
            for (size_t i = 0; i < dim; ++i) {
                s.momentum[i] = c.beta1 * s.momentum[i] + (1.0 - c.beta1) * agg_delta[i];
                const double d2 = agg_delta[i] * agg_delta[i];
                s.second_moment[i] = c.beta2 * s.second_moment[i] + (1.0 - c.beta2) * d2;
                s.params[i] +=
                    c.server_lr * s.momentum[i] / (std::sqrt(s.second_moment[i]) + c.tau);
            }
            break;
        case Algo::FEDYOGI:
            for (size_t i = 0; i < dim; ++i) {
                s.momentum[i] = c.beta1 * s.momentum[i] + (1.0 - c.beta1) * agg_delta[i];
                const double d2 = agg_delta[i] * agg_delta[i];
                const double sgn = s.second_moment[i] - d2 > 0.0
                                       ? 1.0
                                       : (s.second_moment[i] - d2 < 0.0 ? -1.0 : 0.0);
                s.second_moment[i] -= (1.0 - c.beta2) * d2 * sgn;
                s.params[i] +=
                    c.server_lr * s.momentum[i] / (std::sqrt(s.second_moment[i]) + c.tau);
            }
            break;
    }
    return s;
}

ServerState scaffold_server_control(const ServerState& state,
                                    const std::vector<ClientUpdate>& updates,
                                    size_t num_total_clients) {
    if (updates.empty()) throw EmptyUpdateSet("no updates for control aggregation");
    const size_t dim = state.control.size();
    ParamVector mean(dim, 0.0);
    for (const ClientUpdate& u : updates) {
        if (!u.control_delta) {
            throw MissingControlDelta("client " + u.client_id + " missing control delta");
        }
        if (u.control_delta->size() != dim) throw DimMismatch("control delta dim mismatch");
        for (size_t i = 0; i < dim; ++i) mean[i] += (*u.control_delta)[i];
    }
    for (double& x : mean) x /= static_cast<double>(updates.size());
    const double scale = static_cast<double>(updates.size()) /
                         static_cast<double>(num_total_clients);
    ServerState s = state;
    for (size_t i = 0; i < dim; ++i) s.control[i] += scale * mean[i];
    return s;
}

RoundResult run_round(const ServerState& state, const PartitionManifest& manifest,
                      const std::map<std::string, std::vector<const Episode*>>& shards,
                      const Trainer& trainer, const RoundConfig& rc,
                      size_t num_total_clients, uint64_t bytes_per_param) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::string> client_ids;
    for (const auto& [cid, _] : manifest.shards) client_ids.push_back(cid);
    if (client_ids.size() < static_cast<size_t>(rc.clients_per_round)) {
        throw InsufficientClients("fewer clients than clients_per_round");
    }

    Rng select_rng(derive_seed(rc.seed, "client-select", state.round));
    std::vector<std::string> selected;
    for (size_t i : select_rng.sample_indices(client_ids.size(), rc.clients_per_round)) {
        selected.push_back(client_ids[i]);
    }

    std::vector<ClientUpdate> updates;
    std::vector<size_t> sample_counts;
    for (const std::string& cid : selected) {
        const auto& shard = shards.at(cid);
        const size_t take = std::min(
            shard.size(),
            static_cast<size_t>(
                std::ceil(rc.data_fraction * static_cast<double>(shard.size()))));
        Rng data_rng(derive_seed(rc.seed, "data-sample", state.round,
                                 fnv1a(cid)));
        std::vector<const Episode*> sample;
        for (size_t i : data_rng.sample_indices(shard.size(), take)) {
            sample.push_back(shard[i]);
        }
        const uint64_t client_seed =
            derive_seed(rc.seed, "client-train", state.round, fnv1a(cid));
        ClientUpdate u;
        try {
            u = trainer(state.params, sample, client_seed, cid);
        } catch (const std::exception& e) {
            throw std::runtime_error("trainer failed for " + cid + ": " + e.what());
        }
        u.client_id = cid;
        sample_counts.push_back(sample.size());
        updates.push_back(std::move(u));
    }

    const ParamVector delta = aggregate(updates, rc.weighting);
    ServerState next = server_step(state, delta);
    if (state.algo.name == Algo::SCAFFOLD) {
        next = scaffold_server_control(next, updates, num_total_clients);
    }

    RoundResult res;
    res.state = std::move(next);
    res.updates = std::move(updates);
    res.log.round = state.round;
    res.log.selected_clients = selected;
    res.log.samples_per_client = sample_counts;
    res.log.payload_bytes =
        static_cast<uint64_t>(selected.size()) * state.params.size() * bytes_per_param;
    res.log.delta_l2 = l2_norm(delta);
    res.log.wall_time_ms = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    return res;
}

uint64_t communication_bytes(uint64_t dim, uint64_t bytes_per_param, PayloadMode payload,
                             uint64_t adapter_dim) {
    return (payload == PayloadMode::FULL ? dim : adapter_dim) * bytes_per_param;
}

double l2_norm(const ParamVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

namespace {
json algo_to_json(const AlgoConfig& c) {
    return {{"name", algo_name(c.name)},     {"beta1", c.beta1},
            {"beta2", c.beta2},              {"server_lr", c.server_lr},
            {"tau", c.tau},                  {"mu", c.mu},
            {"momentum_mix", c.momentum_mix}};
}

AlgoConfig algo_from_json(const json& j) {
    AlgoConfig c;
    c.name = *algo_from_name(j.at("name").get<std::string>());
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.server_lr = j.at("server_lr").get<double>();
    c.tau = j.at("tau").get<double>();
    c.mu = j.at("mu").get<double>();
    c.momentum_mix = j.at("momentum_mix").get<double>();
    return c;
}
}  // namespace

void save_checkpoint(const ServerState& state,
                     const std::map<std::string, ParamVector>& client_controls,
                     const std::string& path, uint64_t config_hash) {
    json j;
    j["round"] = state.round;
    j["config_hash"] = config_hash;
    j["algo"] = algo_to_json(state.algo);
    j["params"] = state.params;
    j["momentum"] = state.momentum;
    j["second_moment"] = state.second_moment;
    j["control"] = state.control;
    j["client_controls"] = client_controls;
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write checkpoint " + path);
    out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open checkpoint " + path);
    json j = json::parse(in);
    Checkpoint ck;
    ck.state.round = j.at("round").get<uint64_t>();
    ck.config_hash = j.at("config_hash").get<uint64_t>();
    ck.state.algo = algo_from_json(j.at("algo"));
    ck.state.params = j.at("params").get<ParamVector>();
    ck.state.momentum = j.at("momentum").get<ParamVector>();
    ck.state.second_moment = j.at("second_moment").get<ParamVector>();
    ck.state.control = j.at("control").get<ParamVector>();
    ck.client_controls =
        j.at("client_controls").get<std::map<std::string, ParamVector>>();
    return ck;
}

std::string round_log_to_json_line(const RoundLog& log) {
    json j;
    j["round"] = log.round;
    j["selected_clients"] = log.selected_clients;
    j["samples_per_client"] = log.samples_per_client;
    j["payload_bytes"] = log.payload_bytes;
    j["delta_l2"] = log.delta_l2;
    j["wall_time_ms"] = log.wall_time_ms;
    return j.dump();
}

}  // namespace fedgui
