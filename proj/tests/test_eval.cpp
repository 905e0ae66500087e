#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fedgui/eval.hpp"
#include "fedgui/rng.hpp"
#include "fedgui/trainer.hpp"

using namespace fedgui;
namespace fs = std::filesystem;

namespace {

UnifiedAction gold_click(int x, int y) {
    return UnifiedAction{ActionKind::CLICK, Point{x, y}, std::nullopt, std::nullopt};
}

Episode episode_with(const std::string& id, const std::string& source,
                     const std::vector<UnifiedAction>& actions,
                     Platform platform = Platform::MOBILE) {
    Episode e;
    e.episode_id = id;
    e.instruction = "task";
    e.tag.source = source;
    e.tag.platform = platform;
    for (size_t i = 0; i < actions.size(); ++i) {
        Step s;
        s.index = static_cast<int>(i);
        s.image_ref = "img://" + id + "/" + std::to_string(i);
        s.screen_w = 1000;
        s.screen_h = 1000;
        s.action = actions[i];
        e.steps.push_back(std::move(s));
    }
    return e;
}

}  // namespace

TEST_CASE("type_match compares only the first token, exactly") {
    const UnifiedAction gold = gold_click(5, 5);
    CHECK(type_match("CLICK <point>[[5, 5]]</point>", gold));
    CHECK(type_match("CLICK", gold));
    CHECK(type_match("CLICK total garbage after", gold));
    CHECK(!type_match("TAP [[5,5]]", gold));
    CHECK(!type_match("click <point>[[5, 5]]</point>", gold));
    CHECK(!type_match("", gold));
    CHECK(!type_match("CLICKED", gold));
}

TEST_CASE("grounding threshold is 14 percent of the diagonal, inclusive") {
    CHECK(grounding_hit({0, 0}, {0, 0}, 1000, 1000));
    CHECK(grounding_hit({100, 100}, {0, 0}, 1000, 1000));   // 141.42 <= 197.99
    CHECK(!grounding_hit({200, 200}, {0, 0}, 1000, 1000));  // 282.84 > 197.99

    // 300x400 space: diagonal 500, threshold exactly 70.
    CHECK(grounding_hit({70, 0}, {0, 0}, 300, 400));
    CHECK(!grounding_hit({71, 0}, {0, 0}, 300, 400));

    // Just past the threshold at high resolution: 700001 / 5e6 = 0.1400002.
    CHECK(grounding_hit({700000, 0}, {0, 0}, 3e6, 4e6));
    CHECK(!grounding_hit({700001, 0}, {0, 0}, 3e6, 4e6));
}

TEST_CASE("grounding is invariant under common scaling") {
    Rng rng(606);
    for (int i = 0; i < 500; ++i) {
        const Point a{static_cast<int>(rng.below(1000)), static_cast<int>(rng.below(1000))};
        const Point b{static_cast<int>(rng.below(1000)), static_cast<int>(rng.below(1000))};
        const bool base = grounding_hit(a, b, 1000, 1000);
        for (const int k : {2, 3, 10}) {
            const Point ka{a.x * k, a.y * k};
            const Point kb{b.x * k, b.y * k};
            CHECK(grounding_hit(ka, kb, 1000.0 * k, 1000.0 * k) == base);
        }
    }
}

TEST_CASE("similarity bounds, symmetry, and the documented example") {
    CHECK(similarity("same text", "same text") == 1.0);
    CHECK(similarity("", "") == 1.0);
    CHECK(similarity("something", "") == 0.0);
    CHECK(similarity("", "something") == 0.0);
    CHECK(similarity("abc", "xyz") == 0.0);
    CHECK(similarity("ABC", "abc") == 1.0);
    CHECK(similarity("Shanghai mall", "Shanghai shopping mall") == doctest::Approx(0.8));
    Rng rng(11);
    const char* words[] = {"alpha", "beta", "gamma", "delta", "42"};
    for (int i = 0; i < 200; ++i) {
        std::string a, b;
        for (int j = 0; j < 3; ++j) {
            a += std::string(words[rng.below(5)]) + " ";
            b += std::string(words[rng.below(5)]) + " ";
        }
        const double s = similarity(a, b);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == similarity(b, a));
        CHECK(similarity(a, a) == 1.0);
    }
}

TEST_CASE("step_success applies the per-kind parameter rules") {
    const UnifiedAction complete{ActionKind::COMPLETE, std::nullopt, std::nullopt,
                                 std::nullopt};
    CHECK(step_success("COMPLETE", complete, 1000, 1000));

    const UnifiedAction type_gold{ActionKind::TYPE, std::nullopt, "Wednesday", std::nullopt};
    CHECK(step_success("TYPE [Wednesday]", type_gold, 1000, 1000));
    CHECK(step_success("TYPE [wednesday]", type_gold, 1000, 1000));
    CHECK(!step_success("TYPE [Thursday perhaps]", type_gold, 1000, 1000));

    // Similarity of exactly 0.5 must fail the strict threshold.
    const UnifiedAction half{ActionKind::TYPE, std::nullopt, "a b", std::nullopt};
    CHECK(similarity("a c", "a b") == doctest::Approx(0.5));
    CHECK(!step_success("TYPE [a c]", half, 1000, 1000));

    CHECK(!step_success("CLICK <point>[[200, 200]]</point>", gold_click(0, 0), 1000, 1000));
    CHECK(step_success("CLICK <point>[[100, 100]]</point>", gold_click(0, 0), 1000, 1000));
    CHECK(!step_success("CLICK", gold_click(0, 0), 1000, 1000));
    CHECK(!step_success("CLICK <point>[[2000, 0]]</point>", gold_click(0, 0), 1000, 1000));

    const UnifiedAction hotkey{ActionKind::HOTKEY, std::nullopt, "CTRL+ALT", std::nullopt};
    CHECK(step_success("HOTKEY [ALT+CTRL]", hotkey, 1000, 1000));
    CHECK(step_success("HOTKEY [alt + ctrl]", hotkey, 1000, 1000));
    CHECK(!step_success("HOTKEY [CTRL]", hotkey, 1000, 1000));

    const UnifiedAction scroll{ActionKind::SCROLL, std::nullopt, std::nullopt, Direction::UP};
    CHECK(step_success("SCROLL [UP]", scroll, 1000, 1000));
    CHECK(step_success("SCROLL [up]", scroll, 1000, 1000));
    CHECK(!step_success("SCROLL [DOWN]", scroll, 1000, 1000));
}

TEST_CASE("success implies type match on random fixtures") {
    Rng rng(1717);
    const char* preds[] = {"CLICK <point>[[500, 500]]</point>",
                           "CLICK <point>[[10, 10]]</point>",
                           "TYPE [item]",
                           "SCROLL [UP]",
                           "SCROLL [LEFT]",
                           "COMPLETE",
                           "WAIT",
                           "HOTKEY [ENTER]",
                           "garbage",
                           ""};
    for (int i = 0; i < 1000; ++i) {
        const UnifiedAction gold =
            default_action_for_kind(kind_from_index(static_cast<int>(rng.below(17))));
        const char* pred = preds[rng.below(10)];
        if (step_success(pred, gold, 1000, 1000)) CHECK(type_match(pred, gold));
    }
}

TEST_CASE("perfect and absent agents score 1.0 and 0.0") {
    const std::vector<Episode> gold = {
        episode_with("e1", "AC",
                     {gold_click(400, 300),
                      {ActionKind::SCROLL, std::nullopt, std::nullopt, Direction::DOWN},
                      {ActionKind::COMPLETE, std::nullopt, std::nullopt, std::nullopt}}),
        episode_with("e2", "GO",
                     {gold_click(7, 7),
                      {ActionKind::TYPE, std::nullopt, "hi there", std::nullopt}}),
    };
    std::vector<PredictionRecord> perfect;
    for (const Episode& e : gold) {
        for (const Step& s : e.steps) {
            perfect.push_back({e.episode_id, s.index, serialize_action(s.action)});
        }
    }
    const EvalReport full = evaluate(perfect, gold);
    for (const auto& [key, g] : full.groups) {
        CHECK(g.type_acc == 1.0);
        CHECK(g.ground_acc == 1.0);
        CHECK(g.sr == 1.0);
    }
    CHECK(full.groups.at("ALL").n_steps == 5);
    CHECK(full.groups.at("ALL").n_ground_steps == 2);

    const EvalReport empty = evaluate({}, gold);
    CHECK(empty.groups.at("ALL").type_acc == 0.0);
    CHECK(empty.groups.at("ALL").ground_acc == 0.0);
    CHECK(empty.groups.at("ALL").sr == 0.0);
}

TEST_CASE("the hand-scored ten-step fixture reports 0.7 / 0.8 / 0.6") {
    // Steps 0-4 are coordinate golds; 5-9 are not.
    const Episode gold = episode_with(
        "fix", "AC",
        {gold_click(500, 500), gold_click(500, 500), gold_click(500, 500),
         gold_click(500, 500), gold_click(500, 500),
         {ActionKind::TYPE, std::nullopt, "hello", std::nullopt},
         {ActionKind::COMPLETE, std::nullopt, std::nullopt, std::nullopt},
         {ActionKind::SCROLL, std::nullopt, std::nullopt, Direction::UP},
         {ActionKind::WAIT, std::nullopt, std::nullopt, std::nullopt},
         {ActionKind::TYPE, std::nullopt, "alpha beta", std::nullopt}});

    // Hand-scored sheet: 7 correct types (0,1,2,3,4,5,9), 4 grounding hits of
    // 5 coordinate golds (0,1,2,3), 6 full successes (0,1,2,3,5 and nothing
    // from the misses; plus none of 6-8; 9 fails similarity).
    const std::vector<PredictionRecord> preds = {
        {"fix", 0, "CLICK <point>[[500, 500]]</point>"},
        {"fix", 1, "CLICK <point>[[520, 480]]</point>"},
        {"fix", 2, "CLICK <point>[[600, 600]]</point>"},
        {"fix", 3, "CLICK <point>[[450, 450]]</point>"},
        {"fix", 4, "CLICK <point>[[0, 0]]</point>"},   // type yes, grounding miss
        {"fix", 5, "TYPE [hello]"},
        {"fix", 6, "WAIT"},                            // wrong type
        {"fix", 7, "TYPE [x]"},                        // wrong type
        {"fix", 8, "NAVIGATE_BACK"},                   // wrong type
        {"fix", 9, "TYPE [gamma delta]"},              // type yes, similarity 0
    };
    const EvalReport r = evaluate(preds, {gold});
    const GroupScore& all = r.groups.at("ALL");
    CHECK(all.n_steps == 10);
    CHECK(all.n_ground_steps == 5);
    CHECK(all.type_acc == doctest::Approx(0.7));
    CHECK(all.ground_acc == doctest::Approx(0.8));
    CHECK(all.sr == doctest::Approx(0.6));
}

TEST_CASE("report groups conserve counts and dangling input throws") {
    const std::vector<Episode> gold = {
        episode_with("a1", "AC", {gold_click(1, 1), gold_click(2, 2)}, Platform::MOBILE),
        episode_with("g1", "GO", {gold_click(3, 3)}, Platform::MOBILE),
        episode_with("m1", "M2W", {gold_click(4, 4)}, Platform::WEB),
    };
    const EvalReport r = evaluate({}, gold);
    CHECK(r.groups.at("ALL").n_steps ==
          r.groups.at("source:AC").n_steps + r.groups.at("source:GO").n_steps +
              r.groups.at("source:M2W").n_steps);
    CHECK(r.groups.at("platform:MOBILE").n_steps == 3);
    CHECK(r.groups.at("platform:WEB").n_steps == 1);

    CHECK_THROWS_AS(evaluate({{"nope", 0, "WAIT"}}, gold), DanglingPrediction);
    CHECK_THROWS_AS(evaluate({{"a1", 7, "WAIT"}}, gold), DanglingPrediction);
    CHECK_THROWS_AS(evaluate({{"a1", 0, "WAIT"}, {"a1", 0, "WAIT"}}, gold),
                    DuplicatePrediction);
}

TEST_CASE("prediction files round-trip and reports serialize") {
    const std::vector<PredictionRecord> preds = {
        {"e1", 0, "CLICK <point>[[5, 5]]</point>"},
        {"e1", 1, "TYPE [hello world]"},
        {"e2", 0, ""},
    };
    const fs::path dir = fs::temp_directory_path();
    const std::string pfile =
        (dir / ("fedgui-preds-" + std::to_string(::getpid()) + ".jsonl")).string();
    save_predictions(preds, pfile);
    const auto back = load_predictions(pfile);
    fs::remove(pfile);
    REQUIRE(back.size() == preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
        CHECK(back[i].episode_id == preds[i].episode_id);
        CHECK(back[i].step_index == preds[i].step_index);
        CHECK(back[i].predicted == preds[i].predicted);
    }

    const std::vector<Episode> gold = {episode_with("e1", "AC", {gold_click(5, 5)})};
    const EvalReport r = evaluate({{"e1", 0, "CLICK <point>[[5, 5]]</point>"}}, gold);
    const std::string json_text = report_to_json(r);
    CHECK(json_text.find("\"ALL\"") != std::string::npos);
    CHECK(json_text.find("type_acc") != std::string::npos);

    const std::string rfile =
        (dir / ("fedgui-report-" + std::to_string(::getpid()) + ".csv")).string();
    save_report_csv(r, rfile);
    std::ifstream in(rfile);
    std::string header;
    std::getline(in, header);
    in.close();
    fs::remove(rfile);
    CHECK(header == "group,metric,value,n");
}
