#include "fedgui/action.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fedgui {

namespace {

const std::array<std::string, kNumActionKinds> kKindNames = {
    "CLICK",         "TYPE",          "SCROLL",       "COMPLETE",     "IMPOSSIBLE",
    "WAIT",          "LONG_PRESS",    "OPEN_APP",     "NAVIGATE_BACK", "NAVIGATE_HOME",
    "PRESS_RECENT",  "PRESS_ENTER",   "DOUBLE_CLICK", "RIGHT_CLICK",  "MOVETO",
    "HOTKEY",        "COPY",
};

const std::array<std::string, 4> kDirectionNames = {"UP", "DOWN", "LEFT", "RIGHT"};

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

}  // namespace

const std::string& kind_name(ActionKind k) { return kKindNames[static_cast<int>(k)]; }

std::optional<ActionKind> kind_from_name(std::string_view name) {
    for (int i = 0; i < kNumActionKinds; ++i) {
        if (kKindNames[i] == name) return static_cast<ActionKind>(i);
    }
    return std::nullopt;
}

int kind_index(ActionKind k) { return static_cast<int>(k); }
ActionKind kind_from_index(int i) { return static_cast<ActionKind>(i); }

const std::string& direction_name(Direction d) { return kDirectionNames[static_cast<int>(d)]; }

std::optional<Direction> direction_from_name(std::string_view name) {
    const std::string u = upper(name);
    for (int i = 0; i < 4; ++i) {
        if (kDirectionNames[i] == u) return static_cast<Direction>(i);
    }
    return std::nullopt;
}

bool kind_takes_point(ActionKind k) {
    switch (k) {
        case ActionKind::CLICK:
        case ActionKind::LONG_PRESS:
        case ActionKind::DOUBLE_CLICK:
        case ActionKind::RIGHT_CLICK:
        case ActionKind::MOVETO:
            return true;
        default:
            return false;
    }
}

bool kind_takes_text(ActionKind k) {
    switch (k) {
        case ActionKind::TYPE:
        case ActionKind::OPEN_APP:
        case ActionKind::HOTKEY:
        case ActionKind::COPY:
            return true;
        default:
            return false;
    }
}

bool kind_takes_direction(ActionKind k) { return k == ActionKind::SCROLL; }

std::optional<std::string> validate_action(const UnifiedAction& a) {
    if (a.point.has_value() != kind_takes_point(a.kind)) {
        return a.point ? "unexpected point attribute" : "missing point attribute";
    }
    if (a.text.has_value() != kind_takes_text(a.kind)) {
        return a.text ? "unexpected text attribute" : "missing text attribute";
    }
    if (a.direction.has_value() != kind_takes_direction(a.kind)) {
        return a.direction ? "unexpected direction attribute" : "missing direction attribute";
    }
    if (a.point) {
        if (a.point->x < 0 || a.point->x > kCoordMax || a.point->y < 0 || a.point->y > kCoordMax) {
            return "parameter out of range";
        }
    }
    return std::nullopt;
}

ActionDomain action_domain(ActionKind k) {
    const int i = static_cast<int>(k);
    if (i < 6) return ActionDomain::BASIC;
    if (i < 12) return ActionDomain::MOBILE;
    return ActionDomain::WEB_DESKTOP;
}

namespace {

// Parses "<point>[[x, y]]</point>".
Point parse_point_attr(std::string_view body) {
    body = trim(body);
    constexpr std::string_view open = "<point>[[";
    constexpr std::string_view close = "]]</point>";
    if (body.size() < open.size() + close.size() ||
        body.substr(0, open.size()) != open ||
        body.substr(body.size() - close.size()) != close) {
        throw ActionParseError(ActionError::MalformedParameters,
                               "expected <point>[[x, y]]</point>");
    }
    std::string_view inner =
        body.substr(open.size(), body.size() - open.size() - close.size());
    const size_t comma = inner.find(',');
    if (comma == std::string_view::npos) {
        throw ActionParseError(ActionError::MalformedParameters, "missing coordinate separator");
    }
    auto parse_int = [](std::string_view s) {
        s = trim(s);
        if (s.empty()) {
            throw ActionParseError(ActionError::MalformedParameters, "empty coordinate");
        }
        size_t i = 0;
        if (s[0] == '-') i = 1;
        long v = 0;
        if (i >= s.size()) {
            throw ActionParseError(ActionError::MalformedParameters, "bad coordinate");
        }
        for (; i < s.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
                throw ActionParseError(ActionError::MalformedParameters,
                                       "non-integer coordinate");
            }
            v = v * 10 + (s[i] - '0');
            if (v > 1000000) break;
        }
        return s[0] == '-' ? -v : v;
    };
    const long x = parse_int(inner.substr(0, comma));
    const long y = parse_int(inner.substr(comma + 1));
    if (x < 0 || x > kCoordMax || y < 0 || y > kCoordMax) {
        throw ActionParseError(ActionError::MalformedParameters, "coordinate out of [0,1000]");
    }
    return Point{static_cast<int>(x), static_cast<int>(y)};
}

// Parses "[payload]".
std::string parse_bracket_payload(std::string_view body) {
    body = trim(body);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
        throw ActionParseError(ActionError::MalformedParameters, "expected [payload]");
    }
    return std::string(body.substr(1, body.size() - 2));
}

}  // namespace

UnifiedAction parse_action(std::string_view text) {
    const std::string_view s = trim(text);
    if (s.empty()) {
        throw ActionParseError(ActionError::EmptyInput, "empty action string");
    }
    size_t sp = 0;
    while (sp < s.size() && !std::isspace(static_cast<unsigned char>(s[sp]))) ++sp;
    const std::string_view token = s.substr(0, sp);
    const auto kind = kind_from_name(token);
    if (!kind) {
        throw ActionParseError(ActionError::UnknownActionKind,
                               "unknown action kind: " + std::string(token));
    }
    const std::string_view rest = trim(s.substr(sp));

    UnifiedAction a;
    a.kind = *kind;
    if (kind_takes_point(*kind)) {
        if (rest.empty()) {
            throw ActionParseError(ActionError::MalformedParameters, "missing point attribute");
        }
        a.point = parse_point_attr(rest);
    } else if (*kind == ActionKind::SCROLL) {
        if (rest.empty()) {
            throw ActionParseError(ActionError::MalformedParameters, "missing direction");
        }
        const auto dir = direction_from_name(trim(parse_bracket_payload(rest)));
        if (!dir) {
            throw ActionParseError(ActionError::MalformedParameters, "bad scroll direction");
        }
        a.direction = *dir;
    } else if (kind_takes_text(*kind)) {
        if (rest.empty()) {
            throw ActionParseError(ActionError::MalformedParameters, "missing text payload");
        }
        a.text = parse_bracket_payload(rest);
    } else {
        if (!rest.empty()) {
            throw ActionParseError(ActionError::MalformedParameters,
                                   "unexpected trailing attribute");
        }
    }
    return a;
}

std::optional<UnifiedAction> try_parse_action(std::string_view text) {
    try {
        return parse_action(text);
    } catch (const ActionParseError&) {
        return std::nullopt;
    }
}

std::string serialize_action(const UnifiedAction& a) {
    std::string out = kind_name(a.kind);
    if (a.point) {
        out += " <point>[[" + std::to_string(a.point->x) + ", " + std::to_string(a.point->y) +
               "]]</point>";
    } else if (a.direction) {
        out += " [" + direction_name(*a.direction) + "]";
    } else if (a.text) {
        out += " [" + *a.text + "]";
    }
    return out;
}

std::vector<std::string> canonical_chord(std::string_view keys) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::string_view t = trim(cur);
        if (!t.empty()) out.push_back(upper(t));
        cur.clear();
    };
    for (char c : keys) {
        if (c == '+') {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    std::sort(out.begin(), out.end());
    return out;
}

Point normalize_point(int px, int py, int screen_w, int screen_h) {
    auto scale = [](int v, int extent) {
        const double n = std::round(1000.0 * static_cast<double>(v) / extent);
        return static_cast<int>(std::clamp(n, 0.0, 1000.0));
    };
    return Point{scale(px, screen_w), scale(py, screen_h)};
}

const RawMapRule* RawActionMap::find(std::string_view source, std::string_view native) const {
    const RawMapRule* wildcard = nullptr;
    for (const auto& r : rules_) {
        if (r.native != native) continue;
        if (r.source == source) return &r;
        if (r.source == "*") wildcard = &r;
    }
    return wildcard;
}

UnifiedAction RawActionMap::normalize(const RawActionRecord& raw, std::string_view source) const {
    const RawMapRule* rule = find(source, raw.name);
    if (!rule) {
        throw ActionParseError(ActionError::UnmappableAction,
                               "no mapping rule for native action: " + raw.name);
    }
    UnifiedAction a;
    a.kind = rule->kind;
    const std::string& tf = rule->transform;
    if (tf == "none") {
        // parameterless target
    } else if (tf == "point_scale") {
        if (!raw.point_px || raw.screen_w <= 0 || raw.screen_h <= 0) {
            throw ActionParseError(ActionError::MalformedParameters,
                                   "missing pixel point for " + raw.name);
        }
        a.point = normalize_point(raw.point_px->first, raw.point_px->second, raw.screen_w,
                                  raw.screen_h);
    } else if (tf == "text") {
        a.text = raw.text.value_or("");
    } else if (tf == "key_enter") {
        a.text = "ENTER";
    } else if (tf == "key_from_text") {
        std::string keys;
        for (const auto& k : canonical_chord(raw.text.value_or(""))) {
            if (!keys.empty()) keys += "+";
            keys += k;
        }
        a.text = keys;
    } else if (tf == "direction") {
        const auto dir = direction_from_name(raw.direction.value_or(""));
        if (!dir) {
            throw ActionParseError(ActionError::MalformedParameters,
                                   "bad native direction for " + raw.name);
        }
        a.direction = *dir;
    } else {
        throw ActionParseError(ActionError::UnmappableAction, "unknown transform: " + tf);
    }
    if (auto reason = validate_action(a)) {
        throw ActionParseError(ActionError::MalformedParameters, *reason);
    }
    return a;
}

std::vector<UnifiedAction> RawActionMap::normalize_sequence(
    const std::vector<RawActionRecord>& raws, std::string_view source) const {
    std::vector<UnifiedAction> out;
    for (size_t i = 0; i < raws.size(); ++i) {
        // select_from_to + copy collapses into a single COPY carrying the
        // copied text.
        if (raws[i].name == "select_from_to" && i + 1 < raws.size() &&
            raws[i + 1].name == "copy") {
            UnifiedAction a;
            a.kind = ActionKind::COPY;
            a.text = raws[i + 1].text.value_or("");
            out.push_back(a);
            ++i;
            continue;
        }
        out.push_back(normalize(raws[i], source));
    }
    return out;
}

RawActionMap RawActionMap::builtin_defaults() {
    RawActionMap m;
    auto add = [&](const char* native, ActionKind k, const char* tf) {
        m.add_rule(RawMapRule{"*", native, k, tf});
    };
    add("click", ActionKind::CLICK, "point_scale");
    add("tap", ActionKind::CLICK, "point_scale");
    add("type", ActionKind::TYPE, "text");
    add("input_text", ActionKind::TYPE, "text");
    add("scroll", ActionKind::SCROLL, "direction");
    add("swipe", ActionKind::SCROLL, "direction");
    add("complete", ActionKind::COMPLETE, "none");
    add("status_complete", ActionKind::COMPLETE, "none");
    add("impossible", ActionKind::IMPOSSIBLE, "none");
    add("status_impossible", ActionKind::IMPOSSIBLE, "none");
    add("wait", ActionKind::WAIT, "none");
    add("long_press", ActionKind::LONG_PRESS, "point_scale");
    add("open_app", ActionKind::OPEN_APP, "text");
    add("navigate_back", ActionKind::NAVIGATE_BACK, "none");
    add("press_back", ActionKind::NAVIGATE_BACK, "none");
    add("navigate_home", ActionKind::NAVIGATE_HOME, "none");
    add("press_home", ActionKind::NAVIGATE_HOME, "none");
    add("press_recent", ActionKind::PRESS_RECENT, "none");
    add("press_enter", ActionKind::HOTKEY, "key_enter");
    add("press_button", ActionKind::HOTKEY, "key_from_text");
    add("double_click", ActionKind::DOUBLE_CLICK, "point_scale");
    add("right_click", ActionKind::RIGHT_CLICK, "point_scale");
    add("moveto", ActionKind::MOVETO, "point_scale");
    add("hover", ActionKind::MOVETO, "point_scale");
    add("hotkey", ActionKind::HOTKEY, "key_from_text");
    add("copy", ActionKind::COPY, "text");
    return m;
}

RawActionMap RawActionMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open action map: " + path);
    }
    RawActionMap m;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty() || sv[0] == '#') continue;
        std::istringstream ls{std::string(sv)};
        std::string source, native, kind, tf;
        if (!(ls >> source >> native >> kind >> tf)) {
            throw std::runtime_error("malformed action map line: " + line);
        }
        const auto k = kind_from_name(kind);
        if (!k) {
            throw std::runtime_error("unknown canonical kind in action map: " + kind);
        }
        m.add_rule(RawMapRule{source, native, *k, tf});
    }
    return m;
}

}  // namespace fedgui
