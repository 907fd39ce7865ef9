#include "hrc/simulation.hpp"

#include <algorithm>
#include <sstream>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kLazySalt = 0x6c617a79ULL;
constexpr std::uint64_t kPlanSalt = 0x706c616eULL;

bool clashes(const Scenario& sc, const TaskStatus& status, std::size_t i) {
    for (std::size_t j = 0; j < status.size(); ++j) {
        if (status[j].state == ActionState::in_progress && (j == i || sc.tree.conflict(i, j))) return true;
    }
    return false;
}

}  // namespace

bool WorkerProfile::slacking_at(double t) const {
    return std::any_of(slack_windows.begin(), slack_windows.end(),
                       [t](const auto& w) { return t >= w.first && t < w.second; });
}

WorkerProfile make_worker(const Scenario& scenario, const ProfileSpec& spec, std::uint64_t seed) {
    WorkerProfile w;
    w.name = spec.name;
    w.kind = spec.kind;
    const auto n = scenario.tree.size();
    w.lazy_scale.assign(n, 1.0);
    w.base_models.resize(n);
    if (spec.kind == ProfileKind::slacking) w.slack_windows = spec.slack_windows;
    std::mt19937_64 rng(mix_seed(seed, kLazySalt));
    std::uniform_real_distribution<double> scale(spec.lazy_min, spec.lazy_max);
    for (std::size_t i = 0; i < n; ++i) {
        if (!scenario.models[i]) continue;
        if (spec.kind == ProfileKind::lazy) w.lazy_scale[i] = scale(rng);
        ActionMotionModel truth = *scenario.models[i];
        for (auto& b : truth.beta) b = {w.lazy_scale[i], 0.0, 1.0};
        w.base_models[i] = std::move(truth);
    }
    return w;
}

std::optional<std::size_t> human_action_sequencer(const Scenario& scenario, const TaskStatus& status,
                                                  const std::vector<Indicator>& indicators, bool have_plan) {
    if (status.in_progress_by(Agent::human)) return std::nullopt;
    std::vector<std::size_t> cands;
    for (auto i : available_actions(scenario.tree, status)) {
        if (scenario.tree.actions()[i].human_capable && !clashes(scenario, status, i)) cands.push_back(i);
    }
    if (cands.empty()) return std::nullopt;
    if (!have_plan && !scenario.first_action.empty()) {
        const auto first = scenario.tree.require_index(scenario.first_action);
        if (std::find(cands.begin(), cands.end(), first) != cands.end()) return first;
    }
    auto best_of = [&](auto pred) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (auto i : cands) {
            if (!pred(i)) continue;
            if (!best || scenario.tree.actions()[i].t_h_nominal < scenario.tree.actions()[*best].t_h_nominal) best = i;
        }
        return best;
    };
    if (auto b = best_of([&](std::size_t i) { return indicators[i] == Indicator::human; })) return b;
    return best_of([&](std::size_t i) { return indicators[i] != Indicator::robot; });
}

PlanSummary summarize(const PlanRecord& rec) {
    PlanSummary s;
    s.time = rec.time;
    s.trigger = rec.trigger;
    s.current_action = rec.current_action;
    s.horizon = rec.instance.action_ids;
    for (std::size_t k = 0; k < rec.instance.k(); ++k) s.assignment += rec.assignment.x_r[k] ? 'r' : 'h';
    s.t_plan = rec.assignment.t_plan;
    s.protection = rec.assignment.protection;
    s.t0_bar = rec.instance.t0_bar;
    s.sigma_0 = rec.instance.sigma_0;
    s.t_h_bar = rec.instance.t_h_bar;
    s.sigma_h = rec.instance.sigma_h;
    s.robot_dispatch = rec.robot_dispatch;
    return s;
}

std::optional<Agent> EpisodeMetrics::executed_by(const std::string& action_id) const {
    for (const auto& a : actions) {
        if (a.action_id == action_id) return a.agent;
    }
    return std::nullopt;
}

bool EpisodeMetrics::same_outcome(const EpisodeMetrics& o) const {
    return profile == o.profile && planner == o.planner && seed == o.seed && completion_time == o.completion_time &&
           watchdog == o.watchdog && actions == o.actions && plans == o.plans && events == o.events &&
           lazy_scale == o.lazy_scale &&
           std::equal(beliefs.begin(), beliefs.end(), o.beliefs.begin(), o.beliefs.end(),
                      [](const BeliefLogRow& a, const BeliefLogRow& b) {
                          return a.event_time == b.event_time && a.action_id == b.action_id && a.t_bar == b.t_bar &&
                                 a.sigma_t == b.sigma_t && a.n_degenerate == b.n_degenerate;
                      });
}

Simulation::Simulation(const Scenario& scenario, const ProfileSpec& profile, PlannerSettings planner, SimSettings sim,
                       std::uint64_t seed)
    : scenario_(&scenario),
      sim_(sim),
      seed_(seed),
      worker_(make_worker(scenario, profile, seed)),
      coord_(scenario, planner, mix_seed(seed, kPlanSalt)),
      noise_rng_(mix_seed(seed, kNoiseSalt)) {
    if (!(sim_.dt > 0.0)) throw ValidationError("dt must be positive");
    positions_.reserve(scenario.objects.size());
    for (const auto& o : scenario.objects) positions_.push_back(o.start);
    watchdog_limit_ = sim_.watchdog_factor * scenario.nominal_duration_sum();
}

void Simulation::begin() {
    if (begun_) return;
    begun_ = true;
    start_next_human();
    if (!coord_.last_plan()) coord_.replan("start");
}

void Simulation::start_next_human() {
    if (coord_.done() || worker_.slacking_at(coord_.clock())) return;
    const auto next = human_action_sequencer(*scenario_, coord_.status(), coord_.indicators(), coord_.last_plan());
    if (!next) return;
    const auto& truth = *worker_.base_models[*next];
    tau_ = 0.0;
    tf_true_ = completion_time(truth, scenario_->v_min[*next]);
    ActionMotionModel nominal = truth;
    nominal.beta = BetaSet{};
    noise_std_ = sim_.noise_fraction * peak_speed(nominal).speed;
    coord_.human_start(*next);
}

void Simulation::update_robot_object() {
    if (const auto r = coord_.robot_action()) {
        const auto& o = scenario_->objects[*r];
        positions_[*r] = o.start + coord_.robot_progress() * (o.area.center - o.start);
    }
}

void Simulation::step() {
    if (!begun_) begin();
    if (done()) return;
    const double dt = sim_.dt;
    const auto robot_before = coord_.robot_action();
    coord_.tick(dt);
    if (robot_before && coord_.status().completed(*robot_before)) {
        positions_[*robot_before] = scenario_->objects[*robot_before].area.center;
    }
    update_robot_object();

    const double now = coord_.clock();
    const bool idle = worker_.slacking_at(now);
    if (const auto h = coord_.human_action()) {
        const auto& truth = *worker_.base_models[*h];
        Vec2 v{};
        if (!idle) {
            tau_ = std::min(tau_ + dt, tf_true_);
            v = velocity_at(truth, tau_);
        }
        positions_[*h] = scenario_->objects[*h].start + displacement_at(truth, tau_);
        hand_ = positions_[*h];
        const Vec2 obs{v.x + noise_std_ * noise_(noise_rng_), v.y + noise_std_ * noise_(noise_rng_)};
        coord_.human_observe(coord_.human_elapsed(), obs, positions_[*h]);
        if (tau_ >= tf_true_) coord_.human_finish();
    }
    if (!coord_.human_action() && !done()) start_next_human();
    update_robot_object();
}

EpisodeMetrics Simulation::metrics() const {
    EpisodeMetrics m;
    m.profile = worker_.name;
    m.planner = coord_.planner().kind;
    m.seed = seed_;
    m.watchdog = !done();
    for (const auto& a : coord_.actions()) m.completion_time = std::max(m.completion_time, a.end);
    if (m.watchdog) {
        m.completion_time = coord_.clock();
        std::ostringstream d;
        d << "watchdog at t=" << coord_.clock() << "; states:";
        for (std::size_t i = 0; i < coord_.status().size(); ++i) {
            d << ' ' << scenario_->tree.actions()[i].id << '=' << to_string(coord_.status()[i].state);
        }
        m.diagnostic = d.str();
    }
    m.actions = coord_.actions();
    for (const auto& p : coord_.plans()) m.plans.push_back(summarize(p));
    m.events = coord_.events();
    m.beliefs = coord_.belief_log();
    m.lazy_scale = worker_.lazy_scale;
    m.solve_times_ms = coord_.solve_times_ms();
    return m;
}

EpisodeMetrics run_episode(const Scenario& scenario, const ProfileSpec& profile, PlannerSettings planner,
                           SimSettings sim, std::uint64_t seed) {
    Simulation s(scenario, profile, planner, sim, seed);
    s.begin();
    while (!s.done() && !s.watchdog_expired()) s.step();
    return s.metrics();
}

EpisodeMetrics run_episode(const Scenario& scenario, const std::string& profile, PlannerKind planner,
                           std::uint64_t seed) {
    PlannerSettings p = scenario.planner;
    p.kind = planner;
    return run_episode(scenario, scenario.profile(profile), p, scenario.sim, seed);
}

json to_json(const EpisodeMetrics& m) {
    json actions = json::array();
    for (const auto& a : m.actions) {
        actions.push_back({{"action_id", a.action_id}, {"agent", to_string(a.agent)}, {"start", a.start}, {"end", a.end}});
    }
    json plans = json::array();
    for (const auto& p : m.plans) {
        plans.push_back({{"time", p.time},
                         {"trigger", p.trigger},
                         {"current_action", p.current_action},
                         {"horizon", p.horizon},
                         {"assignment", p.assignment},
                         {"t_plan", p.t_plan},
                         {"protection", p.protection},
                         {"t0_bar", p.t0_bar},
                         {"sigma_0", p.sigma_0},
                         {"t_h_bar", p.t_h_bar},
                         {"sigma_h", p.sigma_h},
                         {"robot_dispatch", p.robot_dispatch}});
    }
    json j = {{"format", "hrc-episode"},
              {"version", 1},
              {"profile", m.profile},
              {"planner", to_string(m.planner)},
              {"seed", m.seed},
              {"completion_time", m.completion_time},
              {"watchdog", m.watchdog},
              {"lazy_scale", m.lazy_scale},
              {"actions", actions},
              {"plans", plans}};
    if (m.watchdog) j["diagnostic"] = m.diagnostic;
    return j;
}

std::string actions_csv(const EpisodeMetrics& m) {
    std::ostringstream out;
    out.precision(10);
    out << "action_id,agent,start,end\n";
    for (const auto& a : m.actions) out << a.action_id << ',' << to_string(a.agent) << ',' << a.start << ',' << a.end << '\n';
    return out.str();
}

std::string events_json_lines(const EpisodeMetrics& m) {
    std::string out;
    for (const auto& e : m.events) {
        json j = {{"time", e.time}, {"kind", e.kind}, {"action_id", e.action_id}};
        if (!e.detail.empty()) j["detail"] = e.detail;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace hrc
