#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgui/episode.hpp"

namespace fedgui {

// One model output line under evaluation; (episode_id, step_index) is unique
// within a prediction set.
struct PredictionRecord {
    std::string episode_id;
    int step_index = 0;
    std::string predicted;
};

struct GroupScore {
    double type_acc = 0.0;
    double ground_acc = 0.0;
    double sr = 0.0;
    size_t n_steps = 0;
    size_t n_ground_steps = 0;
};

// Group keys: "ALL", "source:<name>", "platform:<name>".
struct EvalReport {
    std::map<std::string, GroupScore> groups;
};

class DanglingPrediction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DuplicatePrediction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Whether each step is scored in its own screen space or in the fixed
// normalized 1000x1000 space.
enum class SpacePolicy { PER_STEP, FIXED };

constexpr double kGroundingFrac = 0.14;  // fraction of the screen diagonal
constexpr double kSimilarityThreshold = 0.5;

// First whitespace token of the prediction equals the gold kind name exactly.
bool type_match(std::string_view predicted, const UnifiedAction& gold);

// Euclidean distance at most kGroundingFrac of the screen diagonal (inclusive).
bool grounding_hit(Point pred, Point gold, double space_w, double space_h);

// max(token F1, whitespace-free character F1), case-insensitive.
// Both empty -> 1.0; exactly one empty -> 0.0.
double similarity(std::string_view a, std::string_view b);

// Full per-step success: type match plus the per-kind parameter rule.
bool step_success(std::string_view predicted, const UnifiedAction& gold, double space_w,
                  double space_h);

EvalReport evaluate(const std::vector<PredictionRecord>& predictions,
                    const std::vector<Episode>& gold,
                    SpacePolicy policy = SpacePolicy::FIXED);

// JSONL {episode_id, step_index, predicted}.
std::vector<PredictionRecord> load_predictions(const std::string& path);
void save_predictions(const std::vector<PredictionRecord>& predictions,
                      const std::string& path);

// Report serialization: JSON groups map, and a flat CSV
// (group, metric, value, n).
std::string report_to_json(const EvalReport& report);
void save_report_json(const EvalReport& report, const std::string& path);
void save_report_csv(const EvalReport& report, const std::string& path);

}  // namespace fedgui
