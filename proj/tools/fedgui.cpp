#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedgui/orchestrate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRun = 3;

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration JSON")->required();
    cmd->add_option("--seed", opts.seed, "Override master_seed");
    cmd->add_option("--out", opts.out_dir, "Override out_dir");
}

fedgui::RunConfig resolve(const CommonOpts& opts) {
    fedgui::RunConfig cfg = fedgui::load_run_config(opts.config_path);
    if (opts.seed) cfg.master_seed = *opts.seed;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated GUI-agent simulation harness"};
    app.require_subcommand(1);

    CommonOpts synth_opts, part_opts, train_opts, eval_opts;
    std::optional<std::string> resume_path, predictions_path;
    std::vector<std::string> report_dirs;
    std::string report_out = "comparison.csv";

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    add_common(synth, synth_opts);

    CLI::App* part = app.add_subcommand("partition", "Shard the corpus across clients");
    add_common(part, part_opts);

    CLI::App* train = app.add_subcommand("train", "Run the federated rounds");
    add_common(train, train_opts);
    train->add_option("--resume", resume_path, "Checkpoint to resume from");

    CLI::App* eval = app.add_subcommand("evaluate", "Score the model over the corpus");
    add_common(eval, eval_opts);
    eval->add_option("--predictions", predictions_path,
                     "Replay an external prediction JSONL instead of the toy model");

    CLI::App* report = app.add_subcommand("report", "Merge completed runs into one table");
    report->add_option("dirs", report_dirs, "Completed run directories")->required();
    report->add_option("--out", report_out, "Output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed()) {
            fedgui::run_synth(resolve(synth_opts));
        } else if (part->parsed()) {
            fedgui::run_partition(resolve(part_opts));
        } else if (train->parsed()) {
            fedgui::run_train(resolve(train_opts), resume_path);
        } else if (eval->parsed()) {
            fedgui::run_evaluate(resolve(eval_opts), predictions_path);
        } else if (report->parsed()) {
            fedgui::run_report(report_dirs, report_out);
        }
    } catch (const fedgui::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const fedgui::IoFailure& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::EmptyCorpus& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::InsufficientEpisodes& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::InfeasibleSpec& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::UndefinedAxisValue& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::TooFewEpisodes& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::IncompleteRun& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::CorpusMismatch& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::DanglingPrediction& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedgui::DuplicatePrediction& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return kExitRun;
    }
    return kExitOk;
}
