#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "hrc/error.hpp"
#include "hrc/model_file.hpp"
#include "hrc/online_adaptation.hpp"
#include "hrc/uncertainty.hpp"
#include "support.hpp"

using namespace hrc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ActionMotionModel nominal() {
    auto m = test::reference_model();
    m.goal_position = displacement_at(m, 50.0);
    return m;
}

SceneInfo scene_at(const ActionMotionModel& truth, const ActionMotionModel& nom, double t, Vec2 v) {
    return {nom.goal_position, nom.start_position + displacement_at(truth, t), v, t};
}

// Mean squared velocity error against the generating model on a 1 ms grid.
double mse(const ActionMotionModel& m, const ActionMotionModel& truth, double from, double to) {
    double e = 0.0;
    int n = 0;
    for (double u = from; u <= to; u += 1e-3, ++n) e += (velocity_at(m, u) - velocity_at(truth, u)).squared_norm();
    return e / n;
}

}  // namespace

TEST_SUITE("online_adaptation") {
    TEST_CASE("residual update fixed points") {
        const auto m = nominal();
        const double v_min = default_threshold(m);
        const Observation exact{0.6, velocity_at(m, 0.6)};
        const auto [same, rep] = residual_update(m, exact, uniform_damping(0.01), v_min);
        CHECK(same.beta == m.beta);
        CHECK(rep.residual[0] == 0.0);

        const Observation off{0.6, velocity_at(m, 0.6) * 1.5};
        const auto [inf, _] = residual_update(m, off, uniform_damping(kInf), v_min);
        CHECK(inf.beta == m.beta);
        const auto [moved, r2] = residual_update(m, off, uniform_damping(0.01), v_min);
        CHECK_FALSE(moved.beta == m.beta);
        // under-predicted speed: beta moves along +grad
        CHECK(r2.residual[0] < 0.0);
        CHECK((betas_of(moved)[0].S_t - 1.0) * r2.grad_v[0][kScaleTime] >= 0.0);
        CHECK((betas_of(moved)[0].S_D - 1.0) * r2.grad_v[0][kScaleAmplitude] > 0.0);

        CHECK_THROWS_AS(residual_update(m, {0.6, {NAN, 0.0}}, uniform_damping(1.0), v_min), NumericError);
        CHECK_THROWS_AS(residual_update(m, off, uniform_damping(-1.0), v_min), ValidationError);
    }

    TEST_CASE("residual step has the damped elementwise form") {
        auto m = nominal();
        m.beta[0] = {1.2, 0.05, 0.9};
        const Observation obs{0.7, {0.1, 0.3}};
        const AxisBetaVectors lambda{{{0.5, 2.0, 0.1}, {1.0, 1.0, 1.0}}};
        const auto [out, rep] = residual_update(m, obs, lambda, 1e-3);
        for (int i = 0; i < kAxes; ++i) {
            const double r = axis_velocity(m.axes[i], m.beta[i], obs.t) - obs.v[i];
            const auto g = beta_gradient(m.axes[i], m.beta[i], obs.t);
            const double expect[3] = {m.beta[i].S_t - r * g[0] / (g[0] * g[0] + lambda[i][0]),
                                      m.beta[i].s_t - r * g[1] / (g[1] * g[1] + lambda[i][1]),
                                      m.beta[i].S_D - r * g[2] / (g[2] * g[2] + lambda[i][2])};
            CHECK(out.beta[i].S_t == doctest::Approx(std::max(expect[0], kMinTimeScale)).epsilon(1e-14));
            CHECK(out.beta[i].s_t == doctest::Approx(expect[1]).epsilon(1e-14));
            CHECK(out.beta[i].S_D == doctest::Approx(expect[2]).epsilon(1e-14));
        }
    }

    TEST_CASE("analytic beta gradient matches central differences") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int n = 0; n < 100; ++n) {
            const LognormalComponent c{0.05 + 0.5 * u(rng), 0.3 * u(rng), -0.8 + 1.2 * u(rng), 0.15 + 0.5 * u(rng)};
            const AdaptationParams b{0.5 + u(rng), 0.2 * (u(rng) - 0.5), 0.5 + u(rng)};
            const auto eff = apply(c, b);
            const double t = eff.t0 + std::exp(eff.mu) * (0.3 + 2.0 * u(rng));
            const auto g = beta_gradient(c, b, t);
            for (int k = 0; k < 3; ++k) {
                const double h = 1e-6;
                AdaptationParams p = b, q = b;
                (k == 0 ? p.S_t : k == 1 ? p.s_t : p.S_D) += h;
                (k == 0 ? q.S_t : k == 1 ? q.s_t : q.S_D) -= h;
                const double fd = (axis_velocity(c, p, t) - axis_velocity(c, q, t)) / (2.0 * h);
                const double scale = std::max(std::abs(fd), 1e-3 * std::abs(axis_velocity(c, b, t)) + 1e-8);
                CHECK(std::abs(g[k] - fd) / scale < 1e-4);
            }
        }
    }

    TEST_CASE("scene gradient is stable across step sizes") {
        auto m = nominal();
        m.beta[0] = {1.3, 0.02, 1.1};
        m.beta[1] = {1.1, -0.01, 0.95};
        const SceneInfo sc{m.goal_position, m.start_position + displacement_at(nominal(), 0.5), {0.2, 0.25}, 0.5};
        SceneUpdateOptions a;
        a.v_min = default_threshold(m);
        a.fd_step = 1e-5;
        auto b = a;
        b.fd_step = 1e-6;
        const auto ga = scene_gradient(m, sc, a);
        const auto gb = scene_gradient(m, sc, b);
        double norm = 0.0;
        for (int i = 0; i < kAxes; ++i) {
            for (int j = 0; j < 3; ++j) norm = std::max(norm, std::abs(ga[i][j]));
        }
        REQUIRE(norm > 0.0);
        for (int i = 0; i < kAxes; ++i) {
            for (int j = 0; j < 3; ++j) CHECK(std::abs(ga[i][j] - gb[i][j]) <= 1e-3 * std::max(std::abs(ga[i][j]), 1e-3 * norm));
        }
    }

    TEST_CASE("consistent scene leaves beta in place") {
        const auto m = nominal();
        SceneUpdateOptions opts;
        opts.v_min = 1e-5 * peak_speed(m).speed;
        const double t_k = 0.5;
        const Vec2 here = m.start_position + displacement_at(m, t_k);
        SceneInfo sc{here, here, velocity_at(m, t_k), t_k};
        const double travel = std::sqrt(scene_objective(m, sc, {1.0, 0.0, 0.0}, opts.v_min).J1);
        sc.goal_position = here + Vec2{travel, 0.0};
        const auto terms = scene_objective(m, sc, opts.weights, opts.v_min);
        CHECK(terms.K < 1e-9);
        const auto [out, rep] = scene_update(m, sc, opts);
        for (int i = 0; i < kAxes; ++i) {
            CHECK(std::abs(out.beta[i].S_t - 1.0) < 1e-9);
            CHECK(std::abs(out.beta[i].s_t) < 1e-9);
            CHECK(std::abs(out.beta[i].S_D - 1.0) < 1e-9);
        }
    }

    TEST_CASE("far goal: one update reduces J1") {
        const auto m = nominal();
        SceneUpdateOptions opts;
        opts.weights = {1.0, 0.0, 0.0};
        opts.v_min = default_threshold(m);
        const double t_k = 0.4;
        const Vec2 here = m.start_position + displacement_at(m, t_k);
        SceneInfo sc{here, here, velocity_at(m, t_k), t_k};
        const double travel = std::sqrt(scene_objective(m, sc, opts.weights, opts.v_min).J1);
        const Vec2 dir = (m.goal_position - here) * (1.0 / distance(m.goal_position, here));
        sc.goal_position = here + dir * (2.0 * travel);
        const double before = scene_objective(m, sc, opts.weights, opts.v_min).J1;
        const auto [out, rep] = scene_update(m, sc, opts);
        CHECK(scene_objective(out, sc, opts.weights, opts.v_min).J1 < before);
        CHECK(rep.scene.J1 == doctest::Approx(before));
    }

    TEST_CASE("zero weights leave beta in place") {
        const auto m = nominal();
        SceneUpdateOptions opts;
        opts.weights = {0.0, 0.0, 0.0};
        opts.v_min = default_threshold(m);
        const SceneInfo sc{{1.0, 1.0}, {0.0, 0.0}, {0.5, 0.5}, 0.3};
        CHECK(scene_update(m, sc, opts).first.beta == m.beta);
        opts.weights.gamma2 = -1.0;
        CHECK_THROWS_AS(scene_update(m, sc, opts), ValidationError);
    }

    TEST_CASE("scene update never increases K") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        const auto m = nominal();
        SceneUpdateOptions opts;
        opts.v_min = default_threshold(m);
        opts.damping = uniform_damping(1e-6);
        for (int n = 0; n < 20; ++n) {
            const double t_k = 0.3 + 0.5 * (u(rng) + 0.3);
            const SceneInfo sc{m.goal_position + Vec2{u(rng), u(rng)}, m.start_position + displacement_at(m, t_k),
                               velocity_at(m, t_k) + Vec2{u(rng), u(rng)}, t_k};
            const auto [out, rep] = scene_update(m, sc, opts);
            CHECK(scene_objective(out, sc, opts.weights, opts.v_min).K <= rep.scene.K);
        }
    }

    TEST_CASE("propagation copies beta onto every model") {
        const auto models = parse_model_set(read_text_file(test::data_dir() / "desktop_assembly.models.json"));
        CHECK(propagate_beta(models, BetaSet{}).size() == models.size());
        for (std::size_t i = 0; i < models.size(); ++i) CHECK(propagate_beta(models, BetaSet{})[i].beta == models[i].beta);

        BetaSet slow{};
        slow[0].S_t = slow[1].S_t = 2.0;
        const auto scaled = propagate_beta(models, slow);
        for (std::size_t i = 0; i < models.size(); ++i) {
            CHECK(scaled[i].axes == models[i].axes);
            // relative threshold so the amplitude drop of the dilated profile cancels
            const double t1 = completion_time(models[i], 0.01 * peak_speed(models[i]).speed);
            const double t2 = completion_time(scaled[i], 0.01 * peak_speed(scaled[i]).speed);
            CHECK(t2 == doctest::Approx(2.0 * t1).epsilon(1e-8));
        }

        auto a = scaled;
        const auto [moved, _] = residual_update(a[0], {0.5, {0.0, 0.0}}, uniform_damping(0.01), 1e-3);
        a[0] = moved;
        CHECK_FALSE(a[0].beta == a[1].beta);
        CHECK(a[1].beta == slow);
    }

    TEST_CASE("stream adapts toward a slower ground truth") {
        const auto nom = nominal();
        auto truth = nom;
        truth.beta[0].S_t = truth.beta[1].S_t = 1.5;
        const double v_min = default_threshold(nom);
        const double tf = completion_time(truth, v_min);
        AdaptationConfig cfg;
        cfg.scene.v_min = v_min;
        AdaptationStream s(nom, cfg);
        const double stop = 0.5 * tf;
        double t = 0.01;
        for (; t <= stop; t += 0.01) {
            const Vec2 v = velocity_at(truth, t);
            s.observe({t, v}, scene_at(truth, nom, t, v));
        }
        CHECK(mse(s.model(), truth, t, tf) <= 0.5 * mse(nom, truth, t, tf));
        CHECK(s.trace().size() > 10);
        CHECK(trace_csv(s.trace()).rfind("t_k,S_t_x,s_t_x,S_D_x,S_t_y,s_t_y,S_D_y,K,J1,J2,J3,t_hat_f\n", 0) == 0);
    }

    TEST_CASE("identical streams give identical betas") {
        const auto nom = nominal();
        auto truth = nom;
        truth.beta[0].S_t = truth.beta[1].S_t = 2.2;
        AdaptationConfig cfg;
        cfg.scene.v_min = default_threshold(nom);
        AdaptationStream a(nom, cfg), b(nom, cfg);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n01;
        for (double t = 0.01; t < 1.5; t += 0.01) {
            const Vec2 v = velocity_at(truth, t) + Vec2{0.01 * n01(rng), 0.01 * n01(rng)};
            a.observe({t, v}, scene_at(truth, nom, t, v));
            b.observe({t, v}, scene_at(truth, nom, t, v));
        }
        REQUIRE(a.trace().size() == b.trace().size());
        for (std::size_t i = 0; i < a.trace().size(); ++i) CHECK(a.trace()[i].beta == b.trace()[i].beta);
    }

    TEST_CASE("stalled motion is re-anchored") {
        auto m = nominal();
        const double v_min = default_threshold(m);
        const double tf = completion_time(m, v_min);
        // hand parked near the start well after the predicted end
        SceneInfo sc{m.goal_position, m.start_position + displacement_at(m, 0.3), {0.0, 0.0}, tf + 1.0};
        const double remaining = distance(sc.goal_position, sc.current_position);
        auto moved = m;
        const double shift = reanchor_stall(moved, sc, v_min, 0.03);
        CHECK(shift > 0.0);
        CHECK(moved.beta[0].s_t == doctest::Approx(shift));
        CHECK(moved.beta[1].s_t == doctest::Approx(shift));
        SceneInfo probe = sc;
        probe.goal_position = probe.current_position;
        const double predicted = std::sqrt(scene_objective(moved, probe, {1.0, 0.0, 0.0}, v_min).J1);
        CHECK(predicted == doctest::Approx(remaining).epsilon(1e-3));

        auto near = m;
        SceneInfo arrived{m.goal_position, m.goal_position, {0.0, 0.0}, tf + 1.0};
        CHECK(reanchor_stall(near, arrived, v_min, 0.03) == 0.0);
        CHECK(reanchor_stall(near, sc, v_min, 0.0) == 0.0);
        SceneInfo early = sc;
        early.t_k = 0.5 * tf;
        CHECK(reanchor_stall(near, early, v_min, 0.03) == 0.0);
    }
}
