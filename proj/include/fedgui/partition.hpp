#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgui/episode.hpp"

namespace fedgui {

enum class PartitionAxis { PLATFORM, DEVICE, OS, SOURCE, APP_CATEGORY };
enum class PartitionScheme { IID, NON_UNIFORM, PARTIAL, SKEW };

const std::string& axis_name(PartitionAxis a);
std::optional<PartitionAxis> axis_from_name(std::string_view name);
const std::string& scheme_name(PartitionScheme s);
std::optional<PartitionScheme> scheme_from_name(std::string_view name);

// The episode's value on a partition axis.
std::string axis_value(const Episode& e, PartitionAxis axis);

struct PartitionSpec {
    PartitionAxis axis = PartitionAxis::SOURCE;
    PartitionScheme scheme = PartitionScheme::IID;
    int num_clients = 1;
    double alpha = 1.0;            // NON_UNIFORM Dirichlet concentration
    int excluded_per_client = 1;   // PARTIAL
    uint64_t seed = 0;
};

struct PartitionManifest {
    PartitionSpec spec;
    std::optional<std::string> full_variant;  // set by compose_full
    std::map<std::string, std::vector<std::string>> shards;  // client -> episode ids
    std::map<std::string, std::map<std::string, size_t>> stats;  // client -> value -> count
};

struct StatRow {
    std::string client_id;
    std::string value;
    size_t count = 0;
    double proportion = 0.0;  // NaN for empty shards
};

class InfeasibleSpec : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class UndefinedAxisValue : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class TooFewEpisodes : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Deterministic client sharding under the four heterogeneity schemes.
PartitionManifest partition(const std::vector<Episode>& episodes, const PartitionSpec& spec);

enum class FullVariant {
    FULL_IID,
    FULL_NON_UNIFORM,
    PLATFORM_PARTIAL,
    PLATFORM_NON_UNIFORM,
    PLATFORM_SKEW,
    SOURCE_NON_UNIFORM,
    SOURCE_SKEW,
};

const std::string& full_variant_name(FullVariant v);
std::optional<FullVariant> full_variant_from_name(std::string_view name);

// The seven whole-corpus partition variants combining the platform and
// source axes.
PartitionManifest compose_full(const std::vector<Episode>& episodes, FullVariant variant,
                               int num_clients, uint64_t seed);

// Recomputes counts and proportions directly from the shards.
std::vector<StatRow> partition_stats(const PartitionManifest& manifest,
                                     const std::vector<Episode>& episodes);

void save_manifest(const PartitionManifest& m, const std::string& path);
PartitionManifest load_manifest(const std::string& path);
void save_stats_csv(const std::vector<StatRow>& rows, const std::string& path);

}  // namespace fedgui
