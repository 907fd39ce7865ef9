#include <filesystem>

#include "doctest.h"
#include "hrc/error.hpp"
#include "hrc/model_file.hpp"
#include "hrc/scenario.hpp"
#include "hrc/uncertainty.hpp"
#include "support.hpp"

using namespace hrc;

namespace {

json scenario_doc() { return parse_json(read_text_file(test::scenario_path()), "scenario"); }

Scenario from_doc(const json& j) { return parse_scenario(j.dump(), test::data_dir()); }

// Scratch directory holding edited copies of the shipped files.
using test::TempDir;

}  // namespace

TEST_SUITE("scenario_io") {
    TEST_CASE("shipped scenario") {
        const auto sc = load_scenario(test::scenario_path());
        REQUIRE(sc.tree.size() == 5);
        CHECK(sc.first_action == "fan");
        CHECK(sc.profiles.size() == 3);
        CHECK(sc.profile("lazy").kind == ProfileKind::lazy);
        CHECK(sc.profile("lazy").lazy_min == 2.0);
        CHECK(sc.profile("lazy").lazy_max == 3.0);
        CHECK(sc.profile("slacking").slack_windows == std::vector<std::pair<double, double>>{{4.0, 13.0}});
        CHECK_THROWS_AS(sc.profile("sleepy"), ConfigError);
        CHECK(sc.planner.g_unc == 1.0);
        CHECK(sc.planner.epsilon == 0.005);
        CHECK(sc.sim.dt == 0.01);
        CHECK(sc.adaptation.residual_damping[0] == kDefaultResidualDamping);
        for (std::size_t i = 0; i < sc.tree.size(); ++i) {
            const auto& spec = sc.tree.actions()[i];
            CHECK(sc.objects[i].action_id == spec.id);
            if (!spec.human_capable) continue;
            REQUIRE(sc.models[i].has_value());
            CHECK(sc.v_min[i] == doctest::Approx(default_threshold(*sc.models[i])));
            const Vec2 end = sc.models[i]->start_position + displacement_at(*sc.models[i], 100.0);
            CHECK(sc.objects[i].area.contains(end));
        }
        CHECK(sc.nominal_duration_sum() > 0.0);
    }

    TEST_CASE("scenario errors") {
        auto j = scenario_doc();
        j["objects"].erase(1);
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        j = scenario_doc();
        j["profiles"]["odd"] = {{"kind", "sleepy"}};
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        j = scenario_doc();
        j["profiles"]["slacking"]["slack_windows"] = json::array({json::array({5, 8}), json::array({7, 9})});
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        j = scenario_doc();
        j["planner"]["epsilon"] = 1.5;
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        j = scenario_doc();
        j["first_action"] = "nothing";
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        j = scenario_doc();
        j["version"] = 2;
        CHECK_THROWS_AS(from_doc(j), ValidationError);

        CHECK_THROWS_AS(parse_scenario("{\n\"format\": \"hrc-scenario\",\n", test::data_dir()), ParseError);
        CHECK_THROWS_AS(load_scenario(test::data_dir() / "missing.json"), ConfigError);
    }

    TEST_CASE("model must end inside its area") {
        TempDir tmp("hrc_scenario_io");
        auto models = parse_json(read_text_file(test::data_dir() / "desktop_assembly.models.json"), "models");
        models["actions"][0]["axes"][0]["D"] = 0.1;
        write_text_file(tmp.path / "models.json", models.dump());
        std::filesystem::copy_file(test::data_dir() / "desktop_assembly.task.json", tmp.path / "task.json");
        auto j = scenario_doc();
        j["task"] = "task.json";
        j["models"] = "models.json";
        CHECK_THROWS_AS(parse_scenario(j.dump(), tmp.path), ValidationError);

        models["actions"].erase(0);
        write_text_file(tmp.path / "models.json", models.dump());
        CHECK_THROWS_AS(parse_scenario(j.dump(), tmp.path), ValidationError);
    }

    TEST_CASE("model file round trip") {
        const auto text = read_text_file(test::data_dir() / "desktop_assembly.models.json");
        auto models = parse_model_set(text);
        REQUIRE(models.size() == 5);
        models[1].beta[0] = {1.5, 0.25, 0.9};
        const auto back = parse_model_set(to_json(models).dump());
        REQUIRE(back.size() == models.size());
        for (std::size_t i = 0; i < models.size(); ++i) {
            CHECK(back[i].action_id == models[i].action_id);
            CHECK(back[i].axes == models[i].axes);
            CHECK(back[i].beta == models[i].beta);
            CHECK(back[i].start_position == models[i].start_position);
            CHECK(back[i].goal_position == models[i].goal_position);
        }
        CHECK(find_model(back, "tape") != nullptr);
        CHECK(find_model(back, "nope") == nullptr);

        auto j = parse_json(text, "models");
        j["actions"][0]["axes"][1]["sigma"] = -0.1;
        CHECK_THROWS_AS(parse_model_set(j.dump()), ValidationError);
        j = parse_json(text, "models");
        j["actions"][0]["axes"].erase(1);
        CHECK_THROWS_AS(parse_model_set(j.dump()), ValidationError);
        j = parse_json(text, "models");
        j["actions"][1]["action_id"] = "fan";
        CHECK_THROWS_AS(parse_model_set(j.dump()), ValidationError);
        j = parse_json(text, "models");
        j["format"] = "hrc-task";
        CHECK_THROWS_AS(parse_model_set(j.dump()), ValidationError);
    }

    TEST_CASE("settings serialize and override") {
        PlannerSettings p;
        p.kind = PlannerKind::baseline;
        p.epsilon = 0.01;
        p.n_samples = 64;
        p.g_unc = 2.5;
        p.absence_timeout = 3.0;
        const auto q = planner_settings_from_json(to_json(p));
        CHECK(q.kind == p.kind);
        CHECK(q.epsilon == p.epsilon);
        CHECK(q.n_samples == p.n_samples);
        CHECK(q.g_unc == p.g_unc);
        CHECK(q.absence_timeout == p.absence_timeout);
        const auto partial = planner_settings_from_json(json{{"samples", 10}}, p);
        CHECK(partial.n_samples == 10);
        CHECK(partial.epsilon == 0.01);

        SimSettings s;
        s.dt = 0.02;
        s.noise_fraction = 0.0;
        const auto s2 = sim_settings_from_json(to_json(s));
        CHECK(s2.dt == 0.02);
        CHECK(s2.noise_fraction == 0.0);
        CHECK_THROWS_AS(sim_settings_from_json(json{{"dt", 0}}), ValidationError);

        AdaptationConfig a;
        a.stall_fraction = 0.1;
        a.scene.weights.gamma3 = 4.0;
        const auto a2 = adaptation_from_json(to_json(a));
        CHECK(a2.stall_fraction == 0.1);
        CHECK(a2.scene.weights.gamma3 == 4.0);
        CHECK(a2.residual_damping == a.residual_damping);
    }

    TEST_CASE("json helpers") {
        try {
            parse_json("{\n  \"a\": 1,\n  \"b\": \n}", "probe");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
        }
        const json j = {{"n", 1.5}, {"s", "x"}, {"b", true}};
        CHECK(require_number(j, "n", "ctx") == 1.5);
        CHECK(require_string(j, "s", "ctx") == "x");
        CHECK(require_bool(j, "b", "ctx"));
        CHECK_THROWS_AS(require_number(j, "s", "ctx"), ValidationError);
        CHECK_THROWS_AS(require_field(j, "zz", "ctx"), ValidationError);
        CHECK_THROWS_AS(check_header(json{{"format", "a"}, {"version", 1}}, "b", 1), ValidationError);
    }
}
