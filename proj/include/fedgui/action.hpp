#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedgui {

// The 17 canonical action types, in table order (6 basic, 6 mobile, 5 web/desktop).
enum class ActionKind {
    CLICK,
    TYPE,
    SCROLL,
    COMPLETE,
    IMPOSSIBLE,
    WAIT,
    LONG_PRESS,
    OPEN_APP,
    NAVIGATE_BACK,
    NAVIGATE_HOME,
    PRESS_RECENT,
    PRESS_ENTER,
    DOUBLE_CLICK,
    RIGHT_CLICK,
    MOVETO,
    HOTKEY,
    COPY,
};

constexpr int kNumActionKinds = 17;

enum class ActionDomain { BASIC, MOBILE, WEB_DESKTOP };

enum class Direction { UP, DOWN, LEFT, RIGHT };

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

constexpr int kCoordMax = 1000;  // normalized screen units per axis

// One canonical GUI action. Which optional fields are present is fixed by kind:
// point for the five coordinate kinds, text for TYPE/OPEN_APP/HOTKEY/COPY,
// direction for SCROLL.
struct UnifiedAction {
    ActionKind kind = ActionKind::COMPLETE;
    std::optional<Point> point;
    std::optional<std::string> text;
    std::optional<Direction> direction;

    bool operator==(const UnifiedAction&) const = default;
};

const std::string& kind_name(ActionKind k);
std::optional<ActionKind> kind_from_name(std::string_view name);
int kind_index(ActionKind k);
ActionKind kind_from_index(int i);

const std::string& direction_name(Direction d);
std::optional<Direction> direction_from_name(std::string_view name);  // case-insensitive

bool kind_takes_point(ActionKind k);
bool kind_takes_text(ActionKind k);
bool kind_takes_direction(ActionKind k);

// Checks the presence/range invariants; returns a reason on failure.
std::optional<std::string> validate_action(const UnifiedAction& a);

ActionDomain action_domain(ActionKind k);

enum class ActionError {
    EmptyInput,
    UnknownActionKind,
    MalformedParameters,
    UnmappableAction,
};

class ActionParseError : public std::runtime_error {
public:
    ActionParseError(ActionError code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ActionError code() const { return code_; }

private:
    ActionError code_;
};

// Parses one action string in the prompt wire grammar:
//   KIND <point>[[x, y]]</point> | KIND [payload] | KIND
// Kind tokens are matched case-sensitively; throws ActionParseError.
UnifiedAction parse_action(std::string_view text);

// Non-throwing variant for scoring model output.
std::optional<UnifiedAction> try_parse_action(std::string_view text);

// Canonical single-line wire form; parse_action(serialize_action(a)) == a.
std::string serialize_action(const UnifiedAction& a);

// Upper-cased, '+'-separated, sorted key set; used to compare HOTKEY chords.
std::vector<std::string> canonical_chord(std::string_view keys);

// A source dataset's native action record prior to normalization.
struct RawActionRecord {
    std::string name;                       // native action name, e.g. "press_enter"
    std::optional<std::string> text;        // native text payload
    std::optional<std::pair<int, int>> point_px;  // native pixel coordinates
    int screen_w = 0;
    int screen_h = 0;
    std::optional<std::string> direction;
};

struct RawMapRule {
    std::string source;     // dataset id or "*"
    std::string native;     // native action name
    ActionKind kind;        // canonical target
    std::string transform;  // parameter transform id
};

class RawActionMap {
public:
    // One rule per line: source native_name canonical_kind transform_id.
    static RawActionMap load(const std::string& path);
    static RawActionMap builtin_defaults();

    void add_rule(const RawMapRule& r) { rules_.push_back(r); }
    const RawMapRule* find(std::string_view source, std::string_view native) const;

    UnifiedAction normalize(const RawActionRecord& raw, std::string_view source) const;

    // Sequence-level normalization: collapses select_from_to followed by copy
    // into one COPY action.
    std::vector<UnifiedAction> normalize_sequence(const std::vector<RawActionRecord>& raws,
                                                  std::string_view source) const;

private:
    std::vector<RawMapRule> rules_;
};

// Scales native pixel coordinates into the [0, 1000] normalized space.
Point normalize_point(int px, int py, int screen_w, int screen_h);

}  // namespace fedgui
