#include "fedgui/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fedgui {

using json = nlohmann::ordered_json;

namespace {

std::string first_token(std::string_view s) {
    size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    return std::string(s.substr(i, j - i));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

double f1_from_counts(const std::map<std::string, size_t>& a,
                      const std::map<std::string, size_t>& b, size_t na, size_t nb) {
    size_t overlap = 0;
    for (const auto& [k, ca] : a) {
        auto it = b.find(k);
        if (it != b.end()) overlap += std::min(ca, it->second);
    }
    if (overlap == 0) return 0.0;
    const double prec = static_cast<double>(overlap) / static_cast<double>(na);
    const double rec = static_cast<double>(overlap) / static_cast<double>(nb);
    return 2.0 * prec * rec / (prec + rec);
}

}  // namespace

bool type_match(std::string_view predicted, const UnifiedAction& gold) {
    return first_token(predicted) == kind_name(gold.kind);
}

bool grounding_hit(Point pred, Point gold, double space_w, double space_h) {
    const double dx = pred.x - gold.x;
    const double dy = pred.y - gold.y;
    const double threshold =
        kGroundingFrac * std::sqrt(space_w * space_w + space_h * space_h);
    return std::sqrt(dx * dx + dy * dy) <= threshold;
}

double similarity(std::string_view a_raw, std::string_view b_raw) {
    const std::string a = lower(a_raw);
    const std::string b = lower(b_raw);

    std::map<std::string, size_t> ta, tb;
    size_t na = 0, nb = 0;
    {
        std::istringstream in(a);
        std::string t;
        while (in >> t) {
            ++ta[t];
            ++na;
        }
    }
    {
        std::istringstream in(b);
        std::string t;
        while (in >> t) {
            ++tb[t];
            ++nb;
        }
    }
    if (na == 0 && nb == 0) return 1.0;
    if (na == 0 || nb == 0) return 0.0;

    std::map<std::string, size_t> ca, cb;
    size_t nca = 0, ncb = 0;
    for (char c : a) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            ++ca[std::string(1, c)];
            ++nca;
        }
    }
    for (char c : b) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            ++cb[std::string(1, c)];
            ++ncb;
        }
    }

    const double token_f1 = f1_from_counts(ta, tb, na, nb);
    const double char_f1 =
        (nca == 0 || ncb == 0) ? 0.0 : f1_from_counts(ca, cb, nca, ncb);
    return std::max(token_f1, char_f1);
}

bool step_success(std::string_view predicted, const UnifiedAction& gold, double space_w,
                  double space_h) {
    if (!type_match(predicted, gold)) return false;

    const auto parsed = try_parse_action(predicted);
    if (kind_takes_point(gold.kind)) {
        if (!parsed || !parsed->point || !gold.point) return false;
        return grounding_hit(*parsed->point, *gold.point, space_w, space_h);
    }
    if (gold.kind == ActionKind::SCROLL) {
        if (!parsed || !parsed->direction || !gold.direction) return false;
        return *parsed->direction == *gold.direction;
    }
    if (gold.kind == ActionKind::HOTKEY) {
        if (!parsed || !parsed->text || !gold.text) return false;
        return canonical_chord(*parsed->text) == canonical_chord(*gold.text);
    }
    if (kind_takes_text(gold.kind)) {
        if (!parsed || !parsed->text || !gold.text) return false;
        return similarity(*parsed->text, *gold.text) > kSimilarityThreshold;
    }
    // Parameterless kinds: the type tier is the whole check.
    return true;
}

EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const std::vector<Episode>& gold, SpacePolicy policy) {
    std::map<std::pair<std::string, int>, const std::string*> by_key;
    std::set<std::pair<std::string, int>> valid_keys;
    for (const Episode& e : gold) {
        for (const Step& s : e.steps) valid_keys.insert({e.episode_id, s.index});
    }
    for (const PredictionRecord& p : predictions) {
        const std::pair<std::string, int> key{p.episode_id, p.step_index};
        if (!valid_keys.count(key)) {
            throw DanglingPrediction("prediction for unknown step " + p.episode_id + "#" +
                                     std::to_string(p.step_index));
        }
        if (!by_key.emplace(key, &p.predicted).second) {
            throw DuplicatePrediction("duplicate prediction for " + p.episode_id + "#" +
                                      std::to_string(p.step_index));
        }
    }

    struct Tally {
        size_t n = 0, n_ground = 0;
        size_t type_hits = 0, ground_hits = 0, successes = 0;
    };
    std::map<std::string, Tally> tallies;

    static const std::string kEmpty;
    for (const Episode& e : gold) {
        for (const Step& s : e.steps) {
            auto it = by_key.find({e.episode_id, s.index});
            const std::string& pred = it == by_key.end() ? kEmpty : *it->second;

            const double w = policy == SpacePolicy::PER_STEP
                                 ? static_cast<double>(s.screen_w)
                                 : static_cast<double>(kCoordMax);
            const double h = policy == SpacePolicy::PER_STEP
                                 ? static_cast<double>(s.screen_h)
                                 : static_cast<double>(kCoordMax);

            const bool tm = type_match(pred, s.action);
            const bool coord_gold = kind_takes_point(s.action.kind);
            bool ground = false;
            if (coord_gold && tm && s.action.point) {
                const auto parsed = try_parse_action(pred);
                if (parsed && parsed->point) {
                    ground = grounding_hit(*parsed->point, *s.action.point, w, h);
                }
            }
            const bool success = step_success(pred, s.action, w, h);

            for (const std::string& key :
                 {std::string("ALL"), "source:" + e.tag.source,
                  "platform:" + platform_name(e.tag.platform)}) {
                Tally& t = tallies[key];
                ++t.n;
                if (tm) ++t.type_hits;
                if (coord_gold) {
                    ++t.n_ground;
                    if (ground) ++t.ground_hits;
                }
                if (success) ++t.successes;
            }
        }
    }

    EvalReport report;
    for (const auto& [key, t] : tallies) {
        GroupScore g;
        g.n_steps = t.n;
        g.n_ground_steps = t.n_ground;
        g.type_acc = t.n ? static_cast<double>(t.type_hits) / t.n : 0.0;
        g.ground_acc = t.n_ground ? static_cast<double>(t.ground_hits) / t.n_ground : 0.0;
        g.sr = t.n ? static_cast<double>(t.successes) / t.n : 0.0;
        report.groups[key] = g;
    }
    return report;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open prediction file " + path);
    std::vector<PredictionRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw IoFailure("malformed prediction line " + std::to_string(line_no) +
                            " in " + path);
        }
        PredictionRecord p;
        p.episode_id = j.at("episode_id").get<std::string>();
        p.step_index = j.at("step_index").get<int>();
        p.predicted = j.at("predicted").get<std::string>();
        out.push_back(std::move(p));
    }
    return out;
}

void save_predictions(const std::vector<PredictionRecord>& predictions,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write prediction file " + path);
    for (const PredictionRecord& p : predictions) {
        json j;
        j["episode_id"] = p.episode_id;
        j["step_index"] = p.step_index;
        j["predicted"] = p.predicted;
        out << j.dump() << "\n";
    }
}

std::string report_to_json(const EvalReport& report) {
    json j = json::object();
    for (const auto& [key, g] : report.groups) {
        j[key] = {{"type_acc", g.type_acc},
                  {"ground_acc", g.ground_acc},
                  {"sr", g.sr},
                  {"n_steps", g.n_steps},
                  {"n_ground_steps", g.n_ground_steps}};
    }
    return j.dump(2);
}

void save_report_json(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write report " + path);
    out << report_to_json(report) << "\n";
}

void save_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write report " + path);
    out << "group,metric,value,n\n";
    char buf[64];
    for (const auto& [key, g] : report.groups) {
        const std::pair<const char*, std::pair<double, size_t>> rows[] = {
            {"type_acc", {g.type_acc, g.n_steps}},
            {"ground_acc", {g.ground_acc, g.n_ground_steps}},
            {"sr", {g.sr, g.n_steps}},
        };
        for (const auto& [metric, vn] : rows) {
            std::snprintf(buf, sizeof(buf), "%.6f", vn.first);
            out << key << "," << metric << "," << buf << "," << vn.second << "\n";
        }
    }
}

}  // namespace fedgui
