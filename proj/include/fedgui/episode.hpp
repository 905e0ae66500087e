#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgui/action.hpp"

namespace fedgui {

enum class Platform { MOBILE, WEB, DESKTOP };
enum class Os { ANDROID, UBUNTU, MACOS, WINDOWS, NA };

const std::string& platform_name(Platform p);
std::optional<Platform> platform_from_name(std::string_view name);
const std::string& os_name(Os o);
std::optional<Os> os_from_name(std::string_view name);

// Provenance of one episode: which dataset, platform, OS, device and
// application category it came from. These are the partitioning axes.
struct SourceTag {
    std::string source;  // AC, AitW, GO, GA, GA-W, M2W, OA-W, OA-Mac, OA-Win, AS, SYNTH
    Platform platform = Platform::MOBILE;
    Os os = Os::NA;
    std::string device = "NA";
    std::string app_category = "NA";

    bool operator==(const SourceTag&) const = default;
};

struct Step {
    int index = 0;
    std::string image_ref;
    int screen_w = 0;
    int screen_h = 0;
    UnifiedAction action;

    bool operator==(const Step&) const = default;
};

struct Episode {
    std::string episode_id;
    std::string instruction;
    SourceTag tag;
    std::vector<Step> steps;

    bool operator==(const Episode&) const = default;
};

enum class RejectReason {
    ParseError,
    MissingField,
    BadAction,
    BadStepIndex,
    TerminalNotLast,
    EmptySteps,
    EmptyInstruction,
    MissingImage,
    ParamOutOfRange,
};

const std::string& reject_reason_name(RejectReason r);

struct Rejection {
    std::string id;  // episode_id, or "line:<n>" when the line never parsed
    RejectReason reason = RejectReason::ParseError;
};

struct LoadResult {
    std::vector<Episode> episodes;
    std::vector<Rejection> rejections;
};

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class EmptyCorpus : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientEpisodes : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structural validation shared by loading and cleaning; returns the first
// violated invariant.
std::optional<RejectReason> validate_episode(const Episode& e);

// Loads the JSONL interchange format. Malformed lines land in the rejection
// report; throws IoFailure / EmptyCorpus.
LoadResult load_episodes(const std::string& path);

void save_episodes(const std::vector<Episode>& episodes, const std::string& path);
void save_rejections(const std::vector<Rejection>& rejections, const std::string& path);

using ImageChecker = std::function<bool(const std::string&)>;

// Default resolvability check: refs with a scheme prefix (e.g. "synth://")
// are taken as present, anything else must exist on disk.
ImageChecker default_image_checker();

struct CleanResult {
    std::vector<Episode> kept;
    std::vector<Rejection> rejected;
};

// Drops episodes with missing images or invalid actions; collapses
// immediately repeated identical actions keeping the first occurrence.
CleanResult clean(const std::vector<Episode>& episodes,
                  const ImageChecker& image_ok = default_image_checker());

struct TestSplit {
    std::vector<Episode> test;
    std::vector<Episode> train;
};

// Deterministic held-out split of one source's episodes, stratified across
// trajectory-length quartiles.
TestSplit sample_test_set(const std::vector<Episode>& episodes, size_t n, uint64_t seed);

// JSON (de)serialization of a single episode line, shared with the CLI.
std::string episode_to_json_line(const Episode& e);

}  // namespace fedgui
