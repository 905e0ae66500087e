#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgui/episode.hpp"
#include "fedgui/partition.hpp"

namespace fedgui {

using ParamVector = std::vector<double>;

enum class Algo { FEDAVG, FEDPROX, SCAFFOLD, FEDAVGM, FEDADAM, FEDYOGI, FEDADAGRAD };
enum class Weighting { BY_SAMPLES, UNIFORM };

const std::string& algo_name(Algo a);
std::optional<Algo> algo_from_name(std::string_view name);

struct AlgoConfig {
    Algo name = Algo::FEDAVG;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double server_lr = 1e-3;     // adaptive family eta; 1.0 for FedAvg/FedProx/SCAFFOLD
    double tau = 1e-6;
    double mu = 0.2;             // FedProx proximal coefficient
    double momentum_mix = 0.9;   // FedAvgM historical model weight
};

struct ClientUpdate {
    std::string client_id;
    ParamVector delta;                         // w_local - w_global
    size_t num_samples = 0;
    std::optional<ParamVector> control_delta;  // SCAFFOLD c_i+ - c_i
};

struct ServerState {
    uint64_t round = 0;
    ParamVector params;
    ParamVector momentum;       // FedAvgM / FedAdam / FedYogi
    ParamVector second_moment;  // FedAdagrad / FedAdam / FedYogi
    ParamVector control;        // SCAFFOLD server control variate
    AlgoConfig algo;

    static ServerState init(size_t dim, const AlgoConfig& cfg);
};

struct RoundConfig {
    int total_rounds = 30;
    int clients_per_round = 3;
    double data_fraction = 0.10;
    uint64_t seed = 0;
    Weighting weighting = Weighting::BY_SAMPLES;
};

struct RoundLog {
    uint64_t round = 0;
    std::vector<std::string> selected_clients;
    std::vector<size_t> samples_per_client;
    uint64_t payload_bytes = 0;
    double delta_l2 = 0.0;
    uint64_t wall_time_ms = 0;
};

class DimMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class EmptyUpdateSet : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NonFiniteDelta : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class MissingControlDelta : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientClients : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weighted or uniform mean of client deltas.
ParamVector aggregate(const std::vector<ClientUpdate>& updates, Weighting weighting);

// One server optimizer step; advances the round counter.
ServerState server_step(const ServerState& state, const ParamVector& agg_delta);

// SCAFFOLD server control update: c += (|S|/N) * mean(control_delta).
ServerState scaffold_server_control(const ServerState& state,
                                    const std::vector<ClientUpdate>& updates,
                                    size_t num_total_clients);

// Local-trainer contract: (global params, sampled episodes, derived seed,
// client id) -> ClientUpdate.
using Trainer = std::function<ClientUpdate(const ParamVector&,
                                           const std::vector<const Episode*>&, uint64_t,
                                           const std::string&)>;

struct RoundResult {
    ServerState state;
    RoundLog log;
    std::vector<ClientUpdate> updates;  // as aggregated, in selection order
};

// One federated round: uniform client sampling, per-client data subsampling,
// local training, aggregation, and the server step. Deterministic given
// (rc.seed, round index).
RoundResult run_round(const ServerState& state, const PartitionManifest& manifest,
                      const std::map<std::string, std::vector<const Episode*>>& shards,
                      const Trainer& trainer, const RoundConfig& rc,
                      size_t num_total_clients, uint64_t bytes_per_param = 8);

enum class PayloadMode { FULL, ADAPTER };

// Per-client per-round payload size.
uint64_t communication_bytes(uint64_t dim, uint64_t bytes_per_param, PayloadMode payload,
                             uint64_t adapter_dim);

double l2_norm(const ParamVector& v);

void save_checkpoint(const ServerState& state,
                     const std::map<std::string, ParamVector>& client_controls,
                     const std::string& path, uint64_t config_hash);
struct Checkpoint {
    ServerState state;
    std::map<std::string, ParamVector> client_controls;
    uint64_t config_hash = 0;
};
Checkpoint load_checkpoint(const std::string& path);

std::string round_log_to_json_line(const RoundLog& log);

}  // namespace fedgui
