#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgui/eval.hpp"
#include "fedgui/fl.hpp"
#include "fedgui/partition.hpp"
#include "fedgui/trainer.hpp"

namespace fedgui {

// Either one of the seven whole-corpus variants or an explicit axis/scheme
// partition spec.
struct PartitionChoice {
    std::optional<FullVariant> variant;
    PartitionSpec spec;
    int num_clients = 1;
};

struct RunConfig {
    std::string corpus_path;
    std::string out_dir = "out";
    uint64_t master_seed = 0;
    PartitionChoice partition;
    RoundConfig round;
    AlgoConfig algo;
    TrainSpec trainer;
    std::optional<SynthSpec> synth;
    uint64_t adapter_dim = 0;  // 0: default to max(1, param_dim / 256)
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IncompleteRun : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class CorpusMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// Stable hash of the resolved configuration document.
uint64_t run_config_hash(const RunConfig& cfg);
// Stable hash of a file's bytes.
uint64_t file_hash(const std::string& path);

// Write-temp-then-rename; the destination never holds a partial file.
void atomic_write(const std::string& path, const std::string& content);

// Subcommand bodies. Paths are all derived from cfg.out_dir:
//   manifest.json, partition_stats.csv, rounds.jsonl, checkpoint.json,
//   comm_ledger.json, predictions.jsonl, report.json, report.csv.
void run_synth(const RunConfig& cfg);
void run_partition(const RunConfig& cfg);
void run_train(const RunConfig& cfg, const std::optional<std::string>& resume_from = {});
EvalReport run_evaluate(const RunConfig& cfg,
                        const std::optional<std::string>& predictions_path = {});

// Merges completed run directories into one distribution x algorithm x metric
// CSV; refuses to merge runs whose corpus hashes differ.
void run_report(const std::vector<std::string>& run_dirs, const std::string& out_path);

}  // namespace fedgui
