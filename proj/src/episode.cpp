#include "fedgui/episode.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>

#include "fedgui/rng.hpp"
#include "json.hpp"

namespace fedgui {

using json = nlohmann::ordered_json;

namespace {
const std::array<std::string, 3> kPlatformNames = {"MOBILE", "WEB", "DESKTOP"};
const std::array<std::string, 5> kOsNames = {"ANDROID", "UBUNTU", "MACOS", "WINDOWS", "NA"};
const std::array<std::string, 9> kRejectNames = {
    "parse error",          "missing field",       "invalid action",
    "bad step index",       "terminal action not last", "empty steps",
    "empty instruction",    "missing image",       "parameter out of range",
};
}  // namespace

const std::string& platform_name(Platform p) { return kPlatformNames[static_cast<int>(p)]; }

std::optional<Platform> platform_from_name(std::string_view name) {
    for (int i = 0; i < 3; ++i) {
        if (kPlatformNames[i] == name) return static_cast<Platform>(i);
    }
    return std::nullopt;
}

const std::string& os_name(Os o) { return kOsNames[static_cast<int>(o)]; }

std::optional<Os> os_from_name(std::string_view name) {
    for (int i = 0; i < 5; ++i) {
        if (kOsNames[i] == name) return static_cast<Os>(i);
    }
    return std::nullopt;
}

const std::string& reject_reason_name(RejectReason r) {
    return kRejectNames[static_cast<int>(r)];
}

std::optional<RejectReason> validate_episode(const Episode& e) {
    if (e.instruction.empty()) return RejectReason::EmptyInstruction;
    if (e.steps.empty()) return RejectReason::EmptySteps;
    for (size_t i = 0; i < e.steps.size(); ++i) {
        const Step& s = e.steps[i];
        if (s.index != static_cast<int>(i)) return RejectReason::BadStepIndex;
        if (s.screen_w <= 0 || s.screen_h <= 0) return RejectReason::MissingField;
        if (auto reason = validate_action(s.action)) {
            return *reason == std::string("parameter out of range")
                       ? RejectReason::ParamOutOfRange
                       : RejectReason::BadAction;
        }
        const bool terminal = s.action.kind == ActionKind::COMPLETE ||
                              s.action.kind == ActionKind::IMPOSSIBLE;
        if (terminal && i + 1 != e.steps.size()) return RejectReason::TerminalNotLast;
    }
    return std::nullopt;
}

namespace {

json action_to_json(const UnifiedAction& a) {
    json j;
    j["kind"] = kind_name(a.kind);
    if (a.point) j["point"] = {a.point->x, a.point->y};
    if (a.text) j["text"] = *a.text;
    if (a.direction) j["direction"] = direction_name(*a.direction);
    return j;
}

UnifiedAction action_from_json(const json& j) {
    UnifiedAction a;
    const auto kind = kind_from_name(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown kind");
    a.kind = *kind;
    if (j.contains("point")) {
        a.point = Point{j["point"].at(0).get<int>(), j["point"].at(1).get<int>()};
    }
    if (j.contains("text")) a.text = j["text"].get<std::string>();
    if (j.contains("direction")) {
        const auto d = direction_from_name(j["direction"].get<std::string>());
        if (!d) throw std::runtime_error("unknown direction");
        a.direction = *d;
    }
    return a;
}

json episode_to_json(const Episode& e) {
    json j;
    j["episode_id"] = e.episode_id;
    j["instruction"] = e.instruction;
    j["tag"] = {{"source", e.tag.source},
                {"platform", platform_name(e.tag.platform)},
                {"os", os_name(e.tag.os)},
                {"device", e.tag.device},
                {"app_category", e.tag.app_category}};
    j["steps"] = json::array();
    for (const Step& s : e.steps) {
        j["steps"].push_back({{"index", s.index},
                              {"image_ref", s.image_ref},
                              {"screen_w", s.screen_w},
                              {"screen_h", s.screen_h},
                              {"action", action_to_json(s.action)}});
    }
    return j;
}

Episode episode_from_json(const json& j) {
    Episode e;
    e.episode_id = j.at("episode_id").get<std::string>();
    e.instruction = j.at("instruction").get<std::string>();
    const json& t = j.at("tag");
    e.tag.source = t.at("source").get<std::string>();
    const auto p = platform_from_name(t.at("platform").get<std::string>());
    const auto o = os_from_name(t.at("os").get<std::string>());
    if (!p || !o) throw std::runtime_error("bad tag");
    e.tag.platform = *p;
    e.tag.os = *o;
    e.tag.device = t.value("device", "NA");
    e.tag.app_category = t.value("app_category", "NA");
    for (const json& sj : j.at("steps")) {
        Step s;
        s.index = sj.at("index").get<int>();
        s.image_ref = sj.at("image_ref").get<std::string>();
        s.screen_w = sj.at("screen_w").get<int>();
        s.screen_h = sj.at("screen_h").get<int>();
        s.action = action_from_json(sj.at("action"));
        e.steps.push_back(std::move(s));
    }
    return e;
}

}  // namespace

std::string episode_to_json_line(const Episode& e) { return episode_to_json(e).dump(); }

LoadResult load_episodes(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw IoFailure("no such corpus path: " + path);
    }

    LoadResult out;
    for (const std::string& f : files) {
        std::ifstream in(f);
        if (!in) throw IoFailure("cannot open corpus file: " + f);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            Episode e;
            try {
                e = episode_from_json(json::parse(line));
            } catch (const std::exception&) {
                out.rejections.push_back({"line:" + std::to_string(lineno),
                                          RejectReason::ParseError});
                continue;
            }
            if (auto reason = validate_episode(e)) {
                out.rejections.push_back({e.episode_id.empty()
                                              ? "line:" + std::to_string(lineno)
                                              : e.episode_id,
                                          *reason});
                continue;
            }
            out.episodes.push_back(std::move(e));
        }
    }
    if (out.episodes.empty()) {
        throw EmptyCorpus("no valid episodes under " + path);
    }
    return out;
}

void save_episodes(const std::vector<Episode>& episodes, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw IoFailure("cannot write " + path);
    for (const Episode& e : episodes) {
        outf << episode_to_json_line(e) << "\n";
    }
}

void save_rejections(const std::vector<Rejection>& rejections, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw IoFailure("cannot write " + path);
    for (const Rejection& r : rejections) {
        json j;
        j["id"] = r.id;
        j["reason"] = reject_reason_name(r.reason);
        outf << j.dump() << "\n";
    }
}

ImageChecker default_image_checker() {
    return [](const std::string& ref) {
        if (ref.find("://") != std::string::npos) return true;
        return std::filesystem::exists(ref);
    };
}

CleanResult clean(const std::vector<Episode>& episodes, const ImageChecker& image_ok) {
    CleanResult out;
    for (const Episode& e : episodes) {
        std::optional<RejectReason> reason;
        for (const Step& s : e.steps) {
            if (!image_ok(s.image_ref)) {
                reason = RejectReason::MissingImage;
                break;
            }
        }
        if (!reason) {
            Episode kept = e;
            // Collapse runs of identical adjacent actions, keeping the first.
            std::vector<Step> dedup;
            for (const Step& s : kept.steps) {
                if (!dedup.empty() && dedup.back().action == s.action) continue;
                dedup.push_back(s);
            }
            for (size_t i = 0; i < dedup.size(); ++i) dedup[i].index = static_cast<int>(i);
            kept.steps = std::move(dedup);
            reason = validate_episode(kept);
            if (!reason) {
                out.kept.push_back(std::move(kept));
                continue;
            }
        }
        out.rejected.push_back({e.episode_id, *reason});
    }
    return out;
}

TestSplit sample_test_set(const std::vector<Episode>& episodes, size_t n, uint64_t seed) {
    if (n > episodes.size()) {
        throw InsufficientEpisodes("requested " + std::to_string(n) + " of " +
                                   std::to_string(episodes.size()) + " episodes");
    }
    // Length-sorted index, quartile strata, proportional allocation with
    // largest remainders.
    std::vector<size_t> order(episodes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (episodes[a].steps.size() != episodes[b].steps.size()) {
            return episodes[a].steps.size() < episodes[b].steps.size();
        }
        return episodes[a].episode_id < episodes[b].episode_id;
    });

    const size_t total = order.size();
    std::array<std::vector<size_t>, 4> strata;
    for (size_t r = 0; r < total; ++r) {
        strata[std::min<size_t>(3, r * 4 / total)].push_back(order[r]);
    }

    std::array<size_t, 4> want{};
    size_t assigned = 0;
    std::array<double, 4> frac{};
    for (int q = 0; q < 4; ++q) {
        const double exact = static_cast<double>(n) * strata[q].size() / total;
        want[q] = static_cast<size_t>(exact);
        frac[q] = exact - static_cast<double>(want[q]);
        assigned += want[q];
    }
    while (assigned < n) {
        int best = -1;
        for (int q = 0; q < 4; ++q) {
            if (want[q] >= strata[q].size()) continue;
            if (best < 0 || frac[q] > frac[best]) best = q;
        }
        if (best < 0) break;  // n <= total, so never reached
        ++want[best];
        frac[best] -= 1.0;
        ++assigned;
    }

    std::vector<bool> in_test(episodes.size(), false);
    Rng rng(derive_seed(seed, "test-split"));
    for (int q = 0; q < 4; ++q) {
        size_t take = std::min(want[q], strata[q].size());
        for (size_t i : rng.sample_indices(strata[q].size(), take)) {
            in_test[strata[q][i]] = true;
        }
    }

    TestSplit split;
    for (size_t i = 0; i < episodes.size(); ++i) {
        (in_test[i] ? split.test : split.train).push_back(episodes[i]);
    }
    return split;
}

}  // namespace fedgui
