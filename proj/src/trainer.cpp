#include "fedgui/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fedgui/rng.hpp"

namespace fedgui {

ToyModel ToyModel::zeros(int feature_dim) {
    ToyModel m;
    m.feature_dim = feature_dim;
    m.weights.assign(param_dim(feature_dim), 0.0);
    return m;
}

namespace {

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

void add_hashed(std::vector<double>& f, const std::string& token) {
    const uint64_t h = fnv1a(token);
    const size_t bucket = h % f.size();
    f[bucket] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace

std::vector<TrainPair> featurize(const Episode& episode, int feature_dim) {
    const std::vector<std::string> tokens = tokenize(episode.instruction);
    const bool literal = !tokens.empty() && tokens[0] == "#feat";

    std::vector<double> base(feature_dim, 0.0);
    if (literal) {
        for (size_t i = 1; i < tokens.size() && i <= static_cast<size_t>(feature_dim); ++i) {
            base[i - 1] = std::strtod(tokens[i].c_str(), nullptr);
        }
    } else {
        size_t n = 0;
        for (const auto& t : tokens) {
            add_hashed(base, t);
            ++n;
        }
        add_hashed(base, "src:" + episode.tag.source);
        add_hashed(base, "plat:" + platform_name(episode.tag.platform));
        add_hashed(base, "os:" + os_name(episode.tag.os));
        add_hashed(base, "dev:" + episode.tag.device);
        add_hashed(base, "app:" + episode.tag.app_category);
        n += 5;
        const double norm = std::sqrt(static_cast<double>(std::max<size_t>(n, 1)));
        for (double& x : base) x /= norm;
    }

    std::vector<TrainPair> out;
    out.reserve(episode.steps.size());
    for (const Step& s : episode.steps) {
        TrainPair p;
        p.features = base;
        if (!literal) {
            add_hashed(p.features, "step:" + std::to_string(s.index));
        }
        p.label = kind_index(s.action.kind);
        out.push_back(std::move(p));
    }
    return out;
}

LossGrad loss_and_grad(const ToyModel& model, const std::vector<TrainPair>& batch,
                       const AlgoHooks& hooks) {
    const int C = kNumActionKinds;
    const int D = model.feature_dim;
    const int cols = D + 1;
    LossGrad out;
    out.grad.assign(model.weights.size(), 0.0);

    for (const TrainPair& p : batch) {
        std::vector<double> logits(C, 0.0);
        for (int c = 0; c < C; ++c) {
            double z = model.weights[c * cols + D];  // bias
            for (int d = 0; d < D; ++d) z += model.weights[c * cols + d] * p.features[d];
            logits[c] = z;
        }
        const double zmax = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (int c = 0; c < C; ++c) denom += std::exp(logits[c] - zmax);
        out.loss += -(logits[p.label] - zmax) + std::log(denom);
        for (int c = 0; c < C; ++c) {
            const double prob = std::exp(logits[c] - zmax) / denom;
            const double err = prob - (c == p.label ? 1.0 : 0.0);
            for (int d = 0; d < D; ++d) out.grad[c * cols + d] += err * p.features[d];
            out.grad[c * cols + D] += err;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (double& g : out.grad) g *= inv;

    if (hooks.prox_mu > 0.0 && hooks.prox_anchor) {
        double penalty = 0.0;
        for (size_t i = 0; i < model.weights.size(); ++i) {
            const double diff = model.weights[i] - (*hooks.prox_anchor)[i];
            penalty += diff * diff;
            out.grad[i] += hooks.prox_mu * diff;
        }
        out.loss += 0.5 * hooks.prox_mu * penalty;
    }
    return out;
}

ClientUpdate local_train(const ParamVector& global, const std::vector<const Episode*>& shard,
                         const TrainSpec& spec, uint64_t seed) {
    if (shard.empty()) throw EmptyShard("no episodes in client sample");

    std::vector<TrainPair> pairs;
    for (const Episode* e : shard) {
        auto eps = featurize(*e, spec.feature_dim);
        pairs.insert(pairs.end(), eps.begin(), eps.end());
    }

    ToyModel model;
    model.feature_dim = spec.feature_dim;
    model.weights = global;

    const bool scaffold = spec.hooks.scaffold_c && spec.hooks.scaffold_c_i;
    const size_t batches_per_epoch =
        (pairs.size() + spec.batch_size - 1) / spec.batch_size;
    const size_t total_steps = static_cast<size_t>(spec.local_epochs) * batches_per_epoch;

    size_t steps_done = 0;
    for (int epoch = 0; epoch < spec.local_epochs; ++epoch) {
        std::vector<size_t> order(pairs.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(seed, "epoch-order", epoch));
        rng.shuffle(order);
        for (size_t b = 0; b < batches_per_epoch; ++b) {
            std::vector<TrainPair> batch;
            for (size_t i = b * spec.batch_size;
                 i < std::min(pairs.size(), (b + 1) * static_cast<size_t>(spec.batch_size));
                 ++i) {
                batch.push_back(pairs[order[i]]);
            }
            LossGrad lg = loss_and_grad(model, batch, spec.hooks);
            for (size_t i = 0; i < model.weights.size(); ++i) {
                double dir = lg.grad[i];
                if (scaffold) {
                    dir += (*spec.hooks.scaffold_c)[i] - (*spec.hooks.scaffold_c_i)[i];
                }
                model.weights[i] -= spec.client_lr * dir;
            }
            ++steps_done;
        }
    }
    (void)steps_done;

    ClientUpdate u;
    u.num_samples = pairs.size();
    u.delta.resize(global.size());
    for (size_t i = 0; i < global.size(); ++i) u.delta[i] = model.weights[i] - global[i];

    if (scaffold) {
        // c_i+ = c_i - c + (x - y) / (K * lr); reported as c_i+ - c_i.
        ParamVector cd(global.size());
        const double inv = 1.0 / (static_cast<double>(total_steps) * spec.client_lr);
        for (size_t i = 0; i < global.size(); ++i) {
            cd[i] = -(*spec.hooks.scaffold_c)[i] + (global[i] - model.weights[i]) * inv;
        }
        u.control_delta = std::move(cd);
    }
    return u;
}

int predict_kind(const ToyModel& model, const std::vector<double>& features) {
    const int C = kNumActionKinds;
    const int D = model.feature_dim;
    const int cols = D + 1;
    int best = 0;
    double best_z = -1e300;
    for (int c = 0; c < C; ++c) {
        double z = model.weights[c * cols + D];
        for (int d = 0; d < D; ++d) z += model.weights[c * cols + d] * features[d];
        if (z > best_z) {
            best_z = z;
            best = c;
        }
    }
    return best;
}

UnifiedAction default_action_for_kind(ActionKind kind) {
    UnifiedAction a;
    a.kind = kind;
    if (kind_takes_point(kind)) a.point = Point{500, 500};
    if (kind_takes_direction(kind)) a.direction = Direction::UP;
    if (kind_takes_text(kind)) a.text = kind == ActionKind::HOTKEY ? "ENTER" : "item";
    return a;
}

std::vector<Episode> gen_synthetic(const SynthSpec& spec) {
    const int D = spec.feature_dim;
    const int C = kNumActionKinds;

    // Shared teacher plus value-specific perturbations scaled by separation.
    Rng teacher_rng(derive_seed(spec.seed, "synth-teacher"));
    std::vector<std::vector<double>> base(C, std::vector<double>(D + 1));
    for (auto& row : base) {
        for (double& x : row) x = teacher_rng.gaussian();
    }

    std::vector<Episode> out;
    for (int v = 0; v < spec.num_values; ++v) {
        Rng vrng(derive_seed(spec.seed, "synth-value", v));
        std::vector<double> mean(D);
        double norm = 0.0;
        for (double& x : mean) {
            x = vrng.gaussian();
            norm += x * x;
        }
        norm = std::sqrt(std::max(norm, 1e-12));
        for (double& x : mean) x = x / norm * spec.separation;

        std::vector<std::vector<double>> teacher = base;
        if (spec.separation > 0.0) {
            for (auto& row : teacher) {
                for (double& x : row) x += spec.separation * vrng.gaussian();
            }
        }

        for (int j = 0; j < spec.episodes_per_value; ++j) {
            Rng erng(derive_seed(spec.seed, "synth-episode", v, j));
            std::vector<double> z(D);
            for (int d = 0; d < D; ++d) z[d] = mean[d] + erng.gaussian();

            int label = 0;
            double best = -1e300;
            for (int c = 0; c < C; ++c) {
                double s = teacher[c][D];
                for (int d = 0; d < D; ++d) s += teacher[c][d] * z[d];
                if (s > best) {
                    best = s;
                    label = c;
                }
            }
            if (spec.label_noise > 0.0 && erng.uniform() < spec.label_noise) {
                label = static_cast<int>(erng.below(C));
            }

            Episode e;
            char idbuf[64];
            std::snprintf(idbuf, sizeof(idbuf), "synth-v%d-%05d", v, j);
            e.episode_id = idbuf;
            std::string instr = "#feat";
            char num[32];
            for (int d = 0; d < D; ++d) {
                std::snprintf(num, sizeof(num), " %.9g", z[d]);
                instr += num;
            }
            e.instruction = instr;
            e.tag.source = "SYNTH";
            e.tag.platform = static_cast<Platform>(v % 3);
            e.tag.os = Os::NA;
            e.tag.device = "v" + std::to_string(v);
            e.tag.app_category = "v" + std::to_string(v);

            Step s;
            s.index = 0;
            s.image_ref = "synth://" + e.episode_id;
            s.screen_w = 1000;
            s.screen_h = 1000;
            s.action = default_action_for_kind(kind_from_index(label));
            e.steps.push_back(std::move(s));
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace fedgui
