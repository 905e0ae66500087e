#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedgui/episode.hpp"
#include "fedgui/fl.hpp"

namespace fedgui {

// Multinomial logistic model over episode features -> action-kind labels.
// Weights are a C x (D+1) matrix flattened row-major into a ParamVector
// (last column is the bias).
struct ToyModel {
    ParamVector weights;
    int feature_dim = 0;

    static ToyModel zeros(int feature_dim);
    static size_t param_dim(int feature_dim) {
        return static_cast<size_t>(kNumActionKinds) * (feature_dim + 1);
    }
};

struct AlgoHooks {
    double prox_mu = 0.0;                       // FedProx penalty coefficient
    std::optional<ParamVector> prox_anchor;     // w^t, the round-start global
    std::optional<ParamVector> scaffold_c;      // server control variate
    std::optional<ParamVector> scaffold_c_i;    // this client's control variate
};

struct TrainSpec {
    int local_epochs = 1;
    int batch_size = 4;
    double client_lr = 5e-5;
    int feature_dim = 64;
    AlgoHooks hooks;
};

struct TrainPair {
    std::vector<double> features;  // length D
    int label = 0;                 // action-kind index, 0..16

    bool operator==(const TrainPair&) const = default;
};

// One training pair per step; features are a deterministic function of the
// instruction tokens, step index, and tag fields.
std::vector<TrainPair> featurize(const Episode& episode, int feature_dim);

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// Mean cross-entropy over the batch plus the optional proximal penalty.
LossGrad loss_and_grad(const ToyModel& model, const std::vector<TrainPair>& batch,
                       const AlgoHooks& hooks);

class EmptyShard : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Minibatch SGD from the global parameters; returns the parameter delta and,
// under SCAFFOLD hooks, the control-variate delta.
ClientUpdate local_train(const ParamVector& global, const std::vector<const Episode*>& shard,
                         const TrainSpec& spec, uint64_t seed);

// Predicted action-kind index for one feature vector.
int predict_kind(const ToyModel& model, const std::vector<double>& features);

// Serialized canonical action for a predicted kind, with the fixed default
// parameters the synthetic corpus uses.
UnifiedAction default_action_for_kind(ActionKind kind);

struct SynthSpec {
    int num_values = 3;
    int episodes_per_value = 200;
    int feature_dim = 64;
    double label_noise = 0.0;
    double separation = 1.0;
    uint64_t seed = 0;
};

// Synthetic heterogeneous corpus: value-specific Gaussian feature clusters
// and value-specific linear teachers. Episodes carry source SYNTH and
// device/app_category "v<i>"; platforms cycle MOBILE/WEB/DESKTOP.
std::vector<Episode> gen_synthetic(const SynthSpec& spec);

}  // namespace fedgui
