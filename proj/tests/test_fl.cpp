#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "fedgui/fl.hpp"
#include "fedgui/rng.hpp"

using namespace fedgui;
namespace fs = std::filesystem;

namespace {

ClientUpdate update_of(std::vector<double> delta, size_t n, const std::string& id = "c") {
    ClientUpdate u;
    u.client_id = id;
    u.delta = std::move(delta);
    u.num_samples = n;
    return u;
}

// Independent scalar recursion for one coordinate of each server rule; kept
// deliberately line-for-line separate from the library implementation.
struct ScalarState {
    double x = 0, m = 0, v = 0;
};

void scalar_step(ScalarState& s, double d, Algo algo, const AlgoConfig& c) {
    switch (algo) {
        case Algo::FEDAVG:
        case Algo::FEDPROX:
        case Algo::SCAFFOLD:
            s.x = s.x + d;
            break;
        case Algo::FEDAVGM:
            s.x = c.momentum_mix * s.x + (1 - c.momentum_mix) * (s.x + d);
            break;
        case Algo::FEDADAGRAD:
            s.v = s.v + d * d;
            s.x = s.x + c.server_lr * d / (std::sqrt(s.v) + c.tau);
            break;
        case Algo::FEDADAM:
            s.m = c.beta1 * s.m + (1 - c.beta1) * d;
            s.v = c.beta2 * s.v + (1 - c.beta2) * d * d;
            s.x = s.x + c.server_lr * s.m / (std::sqrt(s.v) + c.tau);
            break;
        case Algo::FEDYOGI: {
            s.m = c.beta1 * s.m + (1 - c.beta1) * d;
            const double diff = s.v - d * d;
            const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
            s.v = s.v - (1 - c.beta2) * d * d * sgn;
            s.x = s.x + c.server_lr * s.m / (std::sqrt(s.v) + c.tau);
            break;
        }
    }
}

}  // namespace

TEST_CASE("aggregate computes the documented weighted and uniform means") {
    const auto by_samples =
        aggregate({update_of({1.0}, 1, "a"), update_of({3.0}, 3, "b")}, Weighting::BY_SAMPLES);
    CHECK(by_samples[0] == doctest::Approx(2.5));

    const auto single = aggregate({update_of({4.0, -2.0}, 7)}, Weighting::BY_SAMPLES);
    CHECK(single == ParamVector{4.0, -2.0});

    Rng rng(314);
    std::vector<ClientUpdate> updates;
    std::vector<double> mean(10, 0.0);
    for (int i = 0; i < 5; ++i) {
        std::vector<double> d(10);
        for (double& x : d) x = rng.gaussian();
        for (int j = 0; j < 10; ++j) mean[j] += d[j] / 5.0;
        updates.push_back(update_of(d, 1 + i, "u" + std::to_string(i)));
    }
    const auto uniform = aggregate(updates, Weighting::UNIFORM);
    for (int j = 0; j < 10; ++j) CHECK(uniform[j] == doctest::Approx(mean[j]).epsilon(1e-12));
}

TEST_CASE("aggregate is linear and permutation invariant") {
    Rng rng(217);
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> d(8);
        for (double& x : d) x = rng.gaussian();
        updates.push_back(update_of(d, 1 + static_cast<size_t>(rng.below(9)),
                                    "u" + std::to_string(i)));
    }
    for (const Weighting w : {Weighting::BY_SAMPLES, Weighting::UNIFORM}) {
        const auto base = aggregate(updates, w);

        std::vector<ClientUpdate> scaled = updates;
        for (auto& u : scaled) {
            for (double& x : u.delta) x *= 3.5;
        }
        const auto scaled_agg = aggregate(scaled, w);
        for (size_t j = 0; j < base.size(); ++j) {
            CHECK(scaled_agg[j] == doctest::Approx(3.5 * base[j]).epsilon(1e-12));
        }

        std::vector<ClientUpdate> shuffled = {updates[4], updates[1], updates[5],
                                              updates[0], updates[3], updates[2]};
        CHECK(aggregate(shuffled, w) == base);
    }
}

TEST_CASE("aggregate input validation") {
    CHECK_THROWS_AS(aggregate({}, Weighting::UNIFORM), EmptyUpdateSet);
    CHECK_THROWS_AS(
        aggregate({update_of({1.0}, 1, "a"), update_of({1.0, 2.0}, 1, "b")},
                  Weighting::UNIFORM),
        DimMismatch);
    ServerState s = ServerState::init(1, {});
    CHECK_THROWS_AS(server_step(s, {std::nan("")}), NonFiniteDelta);
    CHECK_THROWS_AS(server_step(s, {1.0, 2.0}), DimMismatch);
}

TEST_CASE("five rounds of every server rule match the scalar oracle") {
    constexpr int kDim = 10;
    for (int ai = 0; ai < 7; ++ai) {
        const Algo algo = static_cast<Algo>(ai);
        AlgoConfig cfg;
        cfg.name = algo;
        ServerState state = ServerState::init(kDim, cfg);
        std::vector<ScalarState> oracle(kDim);

        Rng rng(1000 + ai);
        for (int round = 0; round < 5; ++round) {
            ParamVector delta(kDim);
            for (double& d : delta) d = rng.gaussian();
            state = server_step(state, delta);
            for (int j = 0; j < kDim; ++j) scalar_step(oracle[j], delta[j], algo, cfg);
        }
        CHECK(state.round == 5);
        for (int j = 0; j < kDim; ++j) {
            const double scale = std::max(1.0, std::abs(oracle[j].x));
            CHECK(std::abs(state.params[j] - oracle[j].x) / scale <= 1e-10);
            CHECK(std::abs(state.momentum[j] - oracle[j].m) / scale <= 1e-10);
            CHECK(std::abs(state.second_moment[j] - oracle[j].v) / scale <= 1e-10);
        }
    }
}

TEST_CASE("FedAdam's frozen first-step values") {
    AlgoConfig cfg;
    cfg.name = Algo::FEDADAM;
    ServerState s = server_step(ServerState::init(1, cfg), {1.0});
    CHECK(s.momentum[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.second_moment[0] == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(s.params[0] == doctest::Approx(1e-3 * 0.1 / (std::sqrt(0.001) + 1e-6)).epsilon(1e-12));
    CHECK(s.params[0] == doctest::Approx(3.1622e-3).epsilon(1e-4));
}

TEST_CASE("FedYogi's first step from zero buffers equals FedAdam's exactly") {
    AlgoConfig adam;
    adam.name = Algo::FEDADAM;
    AlgoConfig yogi;
    yogi.name = Algo::FEDYOGI;
    Rng rng(555);
    ParamVector delta(6);
    for (double& d : delta) d = rng.gaussian();
    const ServerState a = server_step(ServerState::init(6, adam), delta);
    const ServerState y = server_step(ServerState::init(6, yogi), delta);
    CHECK(a.params == y.params);
    CHECK(a.momentum == y.momentum);
    CHECK(a.second_moment == y.second_moment);
}

TEST_CASE("every rule collapses to FedAvg under the neutral configuration") {
    // beta1 = 0, momentum_mix = 0, server rates 1, and second-moment buffers
    // pre-seeded so sqrt(v) + tau = 1 after the v-update.
    Rng rng(808);
    ParamVector delta(5);
    for (double& d : delta) d = rng.gaussian() * 0.1;

    for (int ai = 0; ai < 7; ++ai) {
        const Algo algo = static_cast<Algo>(ai);
        AlgoConfig cfg;
        cfg.name = algo;
        cfg.beta1 = 0.0;
        cfg.beta2 = 1.0;
        cfg.server_lr = 1.0;
        cfg.momentum_mix = 0.0;
        cfg.tau = 1e-12;
        ServerState state = ServerState::init(5, cfg);
        const double target = (1.0 - cfg.tau) * (1.0 - cfg.tau);
        if (algo == Algo::FEDADAGRAD) {
            for (int j = 0; j < 5; ++j) state.second_moment[j] = target - delta[j] * delta[j];
        } else if (algo == Algo::FEDADAM || algo == Algo::FEDYOGI) {
            for (int j = 0; j < 5; ++j) state.second_moment[j] = target;
        }
        const ServerState next = server_step(state, delta);
        for (int j = 0; j < 5; ++j) {
            CHECK(std::abs(next.params[j] - delta[j]) <= 1e-12);
        }
    }
}

TEST_CASE("FedAdagrad's second moment never decreases") {
    AlgoConfig cfg;
    cfg.name = Algo::FEDADAGRAD;
    ServerState state = ServerState::init(4, cfg);
    Rng rng(99);
    ParamVector prev = state.second_moment;
    for (int round = 0; round < 20; ++round) {
        ParamVector delta(4);
        for (double& d : delta) d = rng.gaussian();
        state = server_step(state, delta);
        for (int j = 0; j < 4; ++j) CHECK(state.second_moment[j] >= prev[j]);
        prev = state.second_moment;
    }
}

TEST_CASE("SCAFFOLD server control aggregation") {
    AlgoConfig cfg;
    cfg.name = Algo::SCAFFOLD;
    ServerState s = ServerState::init(1, cfg);

    auto with_control = [](double d, const std::string& id) {
        ClientUpdate u = update_of({0.0}, 1, id);
        u.control_delta = ParamVector{d};
        return u;
    };

    auto zero = scaffold_server_control(
        s, {with_control(0, "a"), with_control(0, "b")}, 2);
    CHECK(zero.control[0] == 0.0);

    auto r1 = scaffold_server_control(
        s, {with_control(3, "a"), with_control(0, "b"), with_control(0, "c")}, 3);
    CHECK(r1.control[0] == doctest::Approx(1.0));

    auto r2 = scaffold_server_control(
        s, {with_control(2, "a"), with_control(2, "b"), with_control(2, "c")}, 6);
    CHECK(r2.control[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(scaffold_server_control(s, {update_of({0.0}, 1)}, 1),
                    MissingControlDelta);
}

namespace {

// A 15-client manifest over single-step episodes, 40 episodes per client.
struct RoundFixture {
    std::vector<Episode> corpus;
    PartitionManifest manifest;
    std::map<std::string, std::vector<const Episode*>> shards;

    RoundFixture() {
        for (int c = 0; c < 15; ++c) {
            char cid[16];
            std::snprintf(cid, sizeof(cid), "client_%03d", c);
            for (int i = 0; i < 40; ++i) {
                Episode e;
                e.episode_id = std::string(cid) + "-" + std::to_string(i);
                e.instruction = "x";
                e.tag.source = "SYNTH";
                Step s;
                s.index = 0;
                s.image_ref = "synth://" + e.episode_id;
                s.screen_w = 1000;
                s.screen_h = 1000;
                s.action.kind = ActionKind::COMPLETE;
                e.steps.push_back(std::move(s));
                manifest.shards[cid].push_back(e.episode_id);
                corpus.push_back(std::move(e));
            }
        }
        std::map<std::string, const Episode*> by_id;
        for (const Episode& e : corpus) by_id[e.episode_id] = &e;
        for (const auto& [cid, ids] : manifest.shards) {
            for (const auto& id : ids) shards[cid].push_back(by_id.at(id));
        }
    }
};

}  // namespace

TEST_CASE("run_round selects 3 distinct clients and samples 10 percent") {
    RoundFixture fx;
    AlgoConfig cfg;
    ServerState state = ServerState::init(4, cfg);
    RoundConfig rc;
    rc.seed = 42;

    const Trainer trainer = [](const ParamVector& global,
                               const std::vector<const Episode*>& sample, uint64_t,
                               const std::string&) {
        ClientUpdate u;
        u.delta.assign(global.size(), 0.5);
        u.num_samples = sample.size();
        return u;
    };

    const RoundResult res = run_round(state, fx.manifest, fx.shards, trainer, rc, 15);
    CHECK(res.log.round == 0);
    CHECK(res.state.round == 1);
    REQUIRE(res.log.selected_clients.size() == 3);
    CHECK(std::set<std::string>(res.log.selected_clients.begin(),
                                res.log.selected_clients.end())
              .size() == 3);
    for (const size_t n : res.log.samples_per_client) {
        CHECK(n == 4);  // ceil(0.10 * 40)
    }
    CHECK(res.log.payload_bytes == 3u * 4u * 8u);
    CHECK(res.state.params == ParamVector(4, 0.5));
    CHECK(res.log.delta_l2 == doctest::Approx(std::sqrt(4 * 0.25)));

    // Byte-stable modulo wall time.
    RoundResult res2 = run_round(state, fx.manifest, fx.shards, trainer, rc, 15);
    res2.log.wall_time_ms = res.log.wall_time_ms;
    CHECK(round_log_to_json_line(res2.log) == round_log_to_json_line(res.log));

    RoundConfig too_many = rc;
    too_many.clients_per_round = 16;
    CHECK_THROWS_AS(run_round(state, fx.manifest, fx.shards, trainer, too_many, 15),
                    InsufficientClients);
}

TEST_CASE("checkpoints round-trip the full server state exactly") {
    AlgoConfig cfg;
    cfg.name = Algo::FEDYOGI;
    ServerState state = ServerState::init(6, cfg);
    Rng rng(4242);
    for (int r = 0; r < 3; ++r) {
        ParamVector d(6);
        for (double& x : d) x = rng.gaussian();
        state = server_step(state, d);
    }
    std::map<std::string, ParamVector> controls;
    controls["client_000"] = {0.1, -0.2, 0.3, 0, 0, 1e-17};

    const fs::path file = fs::temp_directory_path() /
                          ("fedgui-ckpt-" + std::to_string(::getpid()) + ".json");
    save_checkpoint(state, controls, file.string(), 12345);
    const Checkpoint back = load_checkpoint(file.string());
    fs::remove(file);

    CHECK(back.config_hash == 12345);
    CHECK(back.state.round == state.round);
    CHECK(back.state.params == state.params);
    CHECK(back.state.momentum == state.momentum);
    CHECK(back.state.second_moment == state.second_moment);
    CHECK(back.state.control == state.control);
    CHECK(back.client_controls == controls);
    CHECK(algo_name(back.state.algo.name) == "FEDYOGI");
}

TEST_CASE("communication accounting is exact arithmetic") {
    CHECK(communication_bytes(1000, 4, PayloadMode::FULL, 50) == 4000);
    CHECK(communication_bytes(1000, 4, PayloadMode::ADAPTER, 0) == 0);
    CHECK(communication_bytes(17 * (64 + 1), 8, PayloadMode::FULL, 0) == 8840);
    CHECK(communication_bytes(1'000'000, 8, PayloadMode::ADAPTER, 9'000) == 72'000);
}
