#include "fedgui/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "fedgui/rng.hpp"
#include "json.hpp"

namespace fedgui {

using json = nlohmann::ordered_json;

namespace {

const std::array<std::string, 5> kAxisNames = {"PLATFORM", "DEVICE", "OS", "SOURCE",
                                               "APP_CATEGORY"};
const std::array<std::string, 4> kSchemeNames = {"IID", "NON_UNIFORM", "PARTIAL", "SKEW"};
const std::array<std::string, 7> kVariantNames = {
    "FULL_IID",        "FULL_NON_UNIFORM", "PLATFORM_PARTIAL", "PLATFORM_NON_UNIFORM",
    "PLATFORM_SKEW",   "SOURCE_NON_UNIFORM", "SOURCE_SKEW"};

std::string client_id(int i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "client_%03d", i);
    return buf;
}

// Marsaglia-Tsang gamma variate; alpha < 1 boosted through G(a+1)*U^(1/a).
double gamma_variate(Rng& rng, double alpha) {
    if (alpha < 1.0) {
        const double u = std::max(rng.uniform(), 1e-300);
        return gamma_variate(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

struct Grouped {
    std::vector<std::string> values;                    // sorted distinct axis values
    std::map<std::string, std::vector<size_t>> by_value;  // value -> episode indices
};

Grouped group_by_axis(const std::vector<Episode>& episodes, PartitionAxis axis) {
    Grouped g;
    for (size_t i = 0; i < episodes.size(); ++i) {
        const std::string v = axis_value(episodes[i], axis);
        if (v == "NA" || v.empty()) {
            throw UndefinedAxisValue("episode " + episodes[i].episode_id +
                                     " has no value on axis " + axis_name(axis));
        }
        g.by_value[v].push_back(i);
    }
    for (const auto& [v, _] : g.by_value) g.values.push_back(v);
    return g;
}

// Deals the (already shuffled) indices of one value round-robin over the
// given clients, starting at *offset; advances the offset so remainders
// rotate across values.
void deal_round_robin(const std::vector<size_t>& indices,
                      const std::vector<int>& clients, size_t* offset,
                      std::vector<std::vector<size_t>>& shards) {
    for (size_t i = 0; i < indices.size(); ++i) {
        shards[clients[(*offset + i) % clients.size()]].push_back(indices[i]);
    }
    *offset = (*offset + indices.size()) % clients.size();
}

// Largest-remainder rounding of non-negative targets to integers summing to
// `total`.
std::vector<size_t> round_to_total(const std::vector<double>& targets, size_t total) {
    const size_t n = targets.size();
    std::vector<size_t> out(n);
    std::vector<double> frac(n);
    size_t assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        out[i] = static_cast<size_t>(std::max(0.0, targets[i]));
        frac[i] = targets[i] - static_cast<double>(out[i]);
        assigned += out[i];
    }
    while (assigned < total) {
        size_t best = 0;
        for (size_t i = 1; i < n; ++i) {
            if (frac[i] > frac[best]) best = i;
        }
        ++out[best];
        frac[best] -= 1.0;
        ++assigned;
    }
    while (assigned > total) {
        size_t best = 0;
        bool found = false;
        for (size_t i = 0; i < n; ++i) {
            if (out[i] == 0) continue;
            if (!found || frac[i] < frac[best]) {
                best = i;
                found = true;
            }
        }
        --out[best];
        frac[best] += 1.0;
        --assigned;
    }
    return out;
}

PartitionManifest build_manifest(const std::vector<Episode>& episodes,
                                 const PartitionSpec& spec, PartitionAxis axis,
                                 const std::vector<std::vector<size_t>>& shards) {
    PartitionManifest m;
    m.spec = spec;
    for (int c = 0; c < spec.num_clients; ++c) {
        const std::string id = client_id(c);
        auto& shard = m.shards[id];
        for (size_t i : shards[c]) shard.push_back(episodes[i].episode_id);
        auto& stat = m.stats[id];
        for (size_t i : shards[c]) ++stat[axis_value(episodes[i], axis)];
    }
    return m;
}

// Client-by-value allocation with Dirichlet(alpha) rows, balanced to equal
// client totals against per-value availability by iterative proportional
// fitting.
std::vector<std::vector<size_t>> allocate_non_uniform(const Grouped& g, int num_clients,
                                                      double alpha, uint64_t seed,
                                                      size_t total) {
    const size_t V = g.values.size();
    const size_t N = static_cast<size_t>(num_clients);
    Rng rng(derive_seed(seed, "non-uniform"));

    std::vector<std::vector<double>> w(N, std::vector<double>(V));
    for (size_t i = 0; i < N; ++i) {
        double sum = 0.0;
        for (size_t v = 0; v < V; ++v) {
            w[i][v] = std::max(gamma_variate(rng, alpha), 1e-12);
            sum += w[i][v];
        }
        for (size_t v = 0; v < V; ++v) w[i][v] *= static_cast<double>(total) / N / sum;
    }

    std::vector<double> avail(V);
    for (size_t v = 0; v < V; ++v) {
        avail[v] = static_cast<double>(g.by_value.at(g.values[v]).size());
    }
    const double row_total = static_cast<double>(total) / N;
    for (int it = 0; it < 50; ++it) {
        for (size_t v = 0; v < V; ++v) {
            double col = 0.0;
            for (size_t i = 0; i < N; ++i) col += w[i][v];
            const double f = avail[v] / std::max(col, 1e-12);
            for (size_t i = 0; i < N; ++i) w[i][v] *= f;
        }
        for (size_t i = 0; i < N; ++i) {
            double row = std::accumulate(w[i].begin(), w[i].end(), 0.0);
            const double f = row_total / std::max(row, 1e-12);
            for (size_t v = 0; v < V; ++v) w[i][v] *= f;
        }
    }

    std::vector<std::vector<size_t>> shards(N);
    for (size_t v = 0; v < V; ++v) {
        std::vector<double> col(N);
        for (size_t i = 0; i < N; ++i) col[i] = w[i][v];
        const auto counts = round_to_total(col, g.by_value.at(g.values[v]).size());
        std::vector<size_t> idx = g.by_value.at(g.values[v]);
        Rng shuffle_rng(derive_seed(seed, "non-uniform-shuffle", v));
        shuffle_rng.shuffle(idx);
        size_t pos = 0;
        for (size_t i = 0; i < N; ++i) {
            for (size_t k = 0; k < counts[i]; ++k) shards[i].push_back(idx[pos++]);
        }
    }
    return shards;
}

}  // namespace

const std::string& axis_name(PartitionAxis a) { return kAxisNames[static_cast<int>(a)]; }

std::optional<PartitionAxis> axis_from_name(std::string_view name) {
    for (int i = 0; i < 5; ++i) {
        if (kAxisNames[i] == name) return static_cast<PartitionAxis>(i);
    }
    return std::nullopt;
}

const std::string& scheme_name(PartitionScheme s) { return kSchemeNames[static_cast<int>(s)]; }

std::optional<PartitionScheme> scheme_from_name(std::string_view name) {
    for (int i = 0; i < 4; ++i) {
        if (kSchemeNames[i] == name) return static_cast<PartitionScheme>(i);
    }
    return std::nullopt;
}

const std::string& full_variant_name(FullVariant v) {
    return kVariantNames[static_cast<int>(v)];
}

std::optional<FullVariant> full_variant_from_name(std::string_view name) {
    for (int i = 0; i < 7; ++i) {
        if (kVariantNames[i] == name) return static_cast<FullVariant>(i);
    }
    return std::nullopt;
}

std::string axis_value(const Episode& e, PartitionAxis axis) {
    switch (axis) {
        case PartitionAxis::PLATFORM:
            return platform_name(e.tag.platform);
        case PartitionAxis::DEVICE:
            return e.tag.device;
        case PartitionAxis::OS:
            return os_name(e.tag.os) == "NA" ? std::string("NA") : os_name(e.tag.os);
        case PartitionAxis::SOURCE:
            return e.tag.source;
        case PartitionAxis::APP_CATEGORY:
            return e.tag.app_category;
    }
    return "NA";
}

PartitionManifest partition(const std::vector<Episode>& episodes, const PartitionSpec& spec) {
    if (spec.num_clients <= 0) throw InfeasibleSpec("num_clients must be positive");
    if (episodes.size() < static_cast<size_t>(spec.num_clients)) {
        throw TooFewEpisodes("fewer episodes than clients");
    }
    const Grouped g = group_by_axis(episodes, spec.axis);
    const size_t V = g.values.size();
    const int N = spec.num_clients;
    std::vector<std::vector<size_t>> shards(N);

    switch (spec.scheme) {
        case PartitionScheme::IID: {
            std::vector<int> all(N);
            std::iota(all.begin(), all.end(), 0);
            size_t offset = 0;
            for (size_t v = 0; v < V; ++v) {
                std::vector<size_t> idx = g.by_value.at(g.values[v]);
                Rng rng(derive_seed(spec.seed, "iid", v));
                rng.shuffle(idx);
                deal_round_robin(idx, all, &offset, shards);
            }
            break;
        }
        case PartitionScheme::NON_UNIFORM: {
            shards = allocate_non_uniform(g, N, spec.alpha, spec.seed, episodes.size());
            break;
        }
        case PartitionScheme::PARTIAL: {
            if (spec.excluded_per_client <= 0 ||
                static_cast<size_t>(spec.excluded_per_client) >= V) {
                throw InfeasibleSpec("excluded_per_client must be in [1, num_values)");
            }
            // Round-robin denial so every value is denied to at least one client.
            std::vector<std::vector<bool>> denied(N, std::vector<bool>(V, false));
            size_t cursor = 0;
            for (int c = 0; c < N; ++c) {
                for (int k = 0; k < spec.excluded_per_client; ++k) {
                    denied[c][cursor % V] = true;
                    ++cursor;
                }
            }
            size_t offset = 0;
            for (size_t v = 0; v < V; ++v) {
                std::vector<int> allowed;
                for (int c = 0; c < N; ++c) {
                    if (!denied[c][v]) allowed.push_back(c);
                }
                if (allowed.empty()) {
                    throw InfeasibleSpec("value " + g.values[v] + " denied to all clients");
                }
                std::vector<size_t> idx = g.by_value.at(g.values[v]);
                Rng rng(derive_seed(spec.seed, "partial", v));
                rng.shuffle(idx);
                deal_round_robin(idx, allowed, &offset, shards);
            }
            break;
        }
        case PartitionScheme::SKEW: {
            if (static_cast<size_t>(N) < V) {
                throw InfeasibleSpec("SKEW needs at least one client per axis value");
            }
            // Values replicate round-robin over clients; each client stays
            // single-value.
            size_t offset = 0;
            for (size_t v = 0; v < V; ++v) {
                std::vector<int> holders;
                for (int c = 0; c < N; ++c) {
                    if (static_cast<size_t>(c) % V == v) holders.push_back(c);
                }
                std::vector<size_t> idx = g.by_value.at(g.values[v]);
                Rng rng(derive_seed(spec.seed, "skew", v));
                rng.shuffle(idx);
                deal_round_robin(idx, holders, &offset, shards);
            }
            break;
        }
    }
    return build_manifest(episodes, spec, spec.axis, shards);
}

PartitionManifest compose_full(const std::vector<Episode>& episodes, FullVariant variant,
                               int num_clients, uint64_t seed) {
    PartitionSpec spec;
    spec.num_clients = num_clients;
    spec.seed = seed;

    std::set<std::string> platforms, sources;
    for (const Episode& e : episodes) {
        platforms.insert(platform_name(e.tag.platform));
        sources.insert(e.tag.source);
    }
    if (platforms.size() < 2 || sources.size() < 2) {
        throw InfeasibleSpec("full variants need at least two platforms and sources");
    }

    PartitionManifest m;
    switch (variant) {
        case FullVariant::FULL_IID:
            spec.axis = PartitionAxis::SOURCE;
            spec.scheme = PartitionScheme::IID;
            m = partition(episodes, spec);
            break;
        case FullVariant::FULL_NON_UNIFORM:
            spec.axis = PartitionAxis::SOURCE;
            spec.scheme = PartitionScheme::NON_UNIFORM;
            m = partition(episodes, spec);
            break;
        case FullVariant::PLATFORM_PARTIAL:
            spec.axis = PartitionAxis::PLATFORM;
            spec.scheme = PartitionScheme::PARTIAL;
            // Each client observes exactly two platforms.
            spec.excluded_per_client = std::max(1, static_cast<int>(platforms.size()) - 2);
            m = partition(episodes, spec);
            break;
        case FullVariant::PLATFORM_NON_UNIFORM:
            spec.axis = PartitionAxis::PLATFORM;
            spec.scheme = PartitionScheme::NON_UNIFORM;
            m = partition(episodes, spec);
            break;
        case FullVariant::PLATFORM_SKEW:
            spec.axis = PartitionAxis::PLATFORM;
            spec.scheme = PartitionScheme::SKEW;
            m = partition(episodes, spec);
            break;
        case FullVariant::SOURCE_SKEW:
            spec.axis = PartitionAxis::SOURCE;
            spec.scheme = PartitionScheme::SKEW;
            m = partition(episodes, spec);
            break;
        case FullVariant::SOURCE_NON_UNIFORM: {
            // Platform skew combined with source-level imbalance: clients are
            // pinned to one platform, then sources within that platform are
            // allocated with Dirichlet weights.
            spec.axis = PartitionAxis::PLATFORM;
            spec.scheme = PartitionScheme::SKEW;
            const size_t P = platforms.size();
            if (static_cast<size_t>(num_clients) < P) {
                throw InfeasibleSpec("need at least one client per platform");
            }
            std::vector<std::string> plats(platforms.begin(), platforms.end());
            std::vector<std::vector<size_t>> shards(num_clients);
            for (size_t p = 0; p < P; ++p) {
                std::vector<int> holders;
                for (int c = 0; c < num_clients; ++c) {
                    if (static_cast<size_t>(c) % P == p) holders.push_back(c);
                }
                std::vector<Episode> pool;
                std::vector<size_t> pool_idx;
                for (size_t i = 0; i < episodes.size(); ++i) {
                    if (platform_name(episodes[i].tag.platform) == plats[p]) {
                        pool.push_back(episodes[i]);
                        pool_idx.push_back(i);
                    }
                }
                PartitionSpec sub;
                sub.axis = PartitionAxis::SOURCE;
                sub.scheme = PartitionScheme::NON_UNIFORM;
                sub.num_clients = static_cast<int>(holders.size());
                sub.alpha = 1.0;
                sub.seed = derive_seed(seed, "source-nu", p);
                PartitionManifest sub_m = partition(pool, sub);
                std::map<std::string, size_t> id_to_idx;
                for (size_t i = 0; i < pool.size(); ++i) {
                    id_to_idx[pool[i].episode_id] = pool_idx[i];
                }
                int h = 0;
                for (const auto& [cid, shard] : sub_m.shards) {
                    (void)cid;
                    for (const auto& eid : shard) {
                        shards[holders[h]].push_back(id_to_idx.at(eid));
                    }
                    ++h;
                }
            }
            m = build_manifest(episodes, spec, PartitionAxis::SOURCE, shards);
            break;
        }
    }
    m.full_variant = full_variant_name(variant);
    return m;
}

std::vector<StatRow> partition_stats(const PartitionManifest& manifest,
                                     const std::vector<Episode>& episodes) {
    std::map<std::string, std::string> value_of;
    const PartitionAxis axis =
        manifest.full_variant && *manifest.full_variant != "PLATFORM_SKEW" &&
                *manifest.full_variant != "PLATFORM_PARTIAL" &&
                *manifest.full_variant != "PLATFORM_NON_UNIFORM"
            ? PartitionAxis::SOURCE
            : manifest.spec.axis;
    for (const Episode& e : episodes) value_of[e.episode_id] = axis_value(e, axis);

    std::vector<StatRow> rows;
    for (const auto& [cid, shard] : manifest.shards) {
        std::map<std::string, size_t> counts;
        for (const auto& eid : shard) ++counts[value_of.at(eid)];
        if (shard.empty()) {
            rows.push_back({cid, "NA", 0, std::nan("")});
            continue;
        }
        for (const auto& [v, c] : counts) {
            rows.push_back({cid, v, c, static_cast<double>(c) / shard.size()});
        }
    }
    return rows;
}

void save_manifest(const PartitionManifest& m, const std::string& path) {
    json j;
    j["spec"] = {{"axis", axis_name(m.spec.axis)},
                 {"scheme", scheme_name(m.spec.scheme)},
                 {"num_clients", m.spec.num_clients},
                 {"alpha", m.spec.alpha},
                 {"excluded_per_client", m.spec.excluded_per_client},
                 {"seed", m.spec.seed}};
    if (m.full_variant) j["full_variant"] = *m.full_variant;
    j["shards"] = m.shards;
    j["stats"] = m.stats;
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << j.dump(2) << "\n";
}

PartitionManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open manifest: " + path);
    json j = json::parse(in);
    PartitionManifest m;
    const json& s = j.at("spec");
    m.spec.axis = *axis_from_name(s.at("axis").get<std::string>());
    m.spec.scheme = *scheme_from_name(s.at("scheme").get<std::string>());
    m.spec.num_clients = s.at("num_clients").get<int>();
    m.spec.alpha = s.at("alpha").get<double>();
    m.spec.excluded_per_client = s.at("excluded_per_client").get<int>();
    m.spec.seed = s.at("seed").get<uint64_t>();
    if (j.contains("full_variant")) m.full_variant = j["full_variant"].get<std::string>();
    m.shards = j.at("shards").get<std::map<std::string, std::vector<std::string>>>();
    m.stats = j.at("stats").get<std::map<std::string, std::map<std::string, size_t>>>();
    return m;
}

void save_stats_csv(const std::vector<StatRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "client_id,axis_value,count,proportion\n";
    for (const StatRow& r : rows) {
        out << r.client_id << "," << r.value << "," << r.count << ",";
        if (std::isnan(r.proportion)) {
            out << "NA";
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", r.proportion);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace fedgui
