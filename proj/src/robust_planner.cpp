#include "hrc/robust_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr std::size_t kMaxHorizon = 24;
constexpr double kTieTolerance = 1e-9;

bool ties(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max(1.0, std::abs(b)); }

struct Candidate {
    std::vector<int> x_h;
    std::vector<int> x_r;
    int humans = 0;
    double human_bound = 0.0;
    double robot_load = 0.0;
    double protection = 0.0;
    double t = 0.0;
};

// True when `c` should replace `best`.
bool better(const Candidate& c, const Candidate& best) {
    if (!ties(c.t, best.t)) return c.t < best.t;
    if (c.humans != best.humans) return c.humans < best.humans;
    return std::lexicographical_compare(c.x_r.begin(), c.x_r.end(), best.x_r.begin(), best.x_r.end());
}

Assignment search(const PlanningInstance& inst, bool robust, CandidateTrace* trace) {
    validate(inst);
    const std::size_t k = inst.k();
    if (k > kMaxHorizon) throw ValidationError("planning horizon too large for exact enumeration");

    // Actions only one agent can execute are fixed; enumerate the rest.
    std::vector<std::size_t> free;
    Candidate base;
    base.x_h.assign(k, 0);
    base.x_r.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        if (inst.human_capable[i] && inst.robot_capable[i]) {
            free.push_back(i);
        } else if (inst.human_capable[i]) {
            base.x_h[i] = 1;
        } else {
            base.x_r[i] = 1;
        }
    }

    const double gamma_eff =
        robust ? gamma_budget(inst.epsilon, 1 + static_cast<int>(inst.human_capable_count())).gamma_eff : 0.0;

    std::optional<Candidate> best;
    const std::uint64_t n_masks = std::uint64_t{1} << free.size();
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
        Candidate c = base;
        for (std::size_t b = 0; b < free.size(); ++b) {
            const bool human = (mask >> b) & 1U;
            c.x_h[free[b]] = human ? 1 : 0;
            c.x_r[free[b]] = human ? 0 : 1;
        }
        double human_total = inst.t0_bar;
        for (std::size_t i = 0; i < k; ++i) {
            if (c.x_h[i]) {
                human_total += inst.t_h_bar[i];
                ++c.humans;
            } else {
                c.robot_load += inst.t_r[i];
            }
        }
        if (robust) {
            const auto a = protection_vector(inst, c.x_h);
            c.protection = protection_term(a, gamma_eff);
        }
        c.human_bound = human_total + c.protection;
        c.t = std::max(c.human_bound, c.robot_load);
        if (trace) trace->entries.push_back({c.x_h, c.human_bound, c.robot_load, c.protection, c.t});
        if (!best || better(c, *best)) best = std::move(c);
    }

    Assignment out;
    out.x_h = std::move(best->x_h);
    out.x_r = std::move(best->x_r);
    out.t_plan = best->t;
    out.protection = best->protection;
    out.human_bound = best->human_bound;
    out.robot_load = best->robot_load;
    return out;
}

}  // namespace

std::size_t PlanningInstance::human_capable_count() const {
    return static_cast<std::size_t>(std::count(human_capable.begin(), human_capable.end(), true));
}

void validate(const PlanningInstance& inst) {
    const std::size_t k = inst.k();
    if (inst.human_capable.size() != k || inst.robot_capable.size() != k || inst.t_r.size() != k ||
        inst.t_h_bar.size() != k || inst.sigma_h.size() != k) {
        throw ValidationError("planning instance vectors must all have length k");
    }
    if (!(inst.epsilon > 0.0 && inst.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!nonneg(inst.t0_bar) || !nonneg(inst.sigma_0)) {
        throw ValidationError("t0_bar and sigma_0 must be finite and nonnegative");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!inst.human_capable[i] && !inst.robot_capable[i]) {
            throw ValidationError("action '" + inst.action_ids[i] + "' is assignable to neither agent");
        }
        if (!nonneg(inst.t_r[i]) || !nonneg(inst.t_h_bar[i]) || !nonneg(inst.sigma_h[i])) {
            throw ValidationError("action '" + inst.action_ids[i] + "' has a negative or non-finite duration");
        }
    }
}

BudgetSet gamma_budget(double epsilon, int L) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    if (L < 1) throw ValidationError("budget dimension L must be at least 1");
    BudgetSet b;
    b.L = L;
    b.gamma = std::sqrt(2.0 * std::log(1.0 / epsilon) * L);
    b.gamma_eff = std::min(b.gamma, static_cast<double>(L));
    return b;
}

double protection_term(std::span<const double> a, double gamma_eff) {
    if (!(gamma_eff > 0.0) || gamma_eff > static_cast<double>(a.size()) + 1e-12) {
        throw ValidationError("gamma_eff must lie in (0, L]");
    }
    for (double v : a) {
        if (!std::isfinite(v)) throw NumericError("protection term of a non-finite vector");
    }
    auto cost = [&](double m) {
        double s = gamma_eff * m;
        for (double v : a) s += std::max(std::abs(v) - m, 0.0);
        return s;
    };
    double best = cost(0.0);
    for (double v : a) best = std::min(best, cost(std::abs(v)));
    return best;
}

std::vector<double> protection_vector(const PlanningInstance& inst, std::span<const int> x_h) {
    std::vector<double> a;
    a.reserve(1 + inst.k());
    a.push_back(inst.sigma_0);
    for (std::size_t i = 0; i < inst.k(); ++i) {
        if (inst.human_capable[i]) a.push_back(inst.sigma_h[i] * x_h[i]);
    }
    return a;
}

std::string_view to_string(PlannerKind kind) { return kind == PlannerKind::baseline ? "baseline" : "robust"; }

PlannerKind parse_planner_kind(std::string_view s) {
    if (s == "baseline") return PlannerKind::baseline;
    if (s == "robust") return PlannerKind::robust;
    throw ConfigError("planner must be 'baseline' or 'robust', got '" + std::string(s) + "'");
}

Assignment solve_baseline(const PlanningInstance& instance, CandidateTrace* trace) {
    return search(instance, false, trace);
}

Assignment solve_robust(const PlanningInstance& instance, CandidateTrace* trace) {
    return search(instance, true, trace);
}

Assignment solve(PlannerKind kind, const PlanningInstance& instance, CandidateTrace* trace) {
    return kind == PlannerKind::baseline ? solve_baseline(instance, trace) : solve_robust(instance, trace);
}

std::optional<std::size_t> select_robot_action(const Assignment& assignment, const PlanningInstance& instance) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < assignment.x_r.size(); ++i) {
        if (!assignment.x_r[i]) continue;
        if (!pick || instance.t_r[i] < instance.t_r[*pick]) pick = i;
    }
    return pick;
}

PlanningInstance parse_instance(std::string_view text) {
    const json doc = parse_json(text, "instance file");
    check_header(doc, "hrc-instance", 1);
    PlanningInstance inst;
    inst.epsilon = doc.value("epsilon", 0.005);
    inst.t0_bar = doc.value("t0_bar", 0.0);
    inst.sigma_0 = doc.value("sigma_0", 0.0);
    const auto& actions = require_field(doc, "actions", "instance file");
    if (!actions.is_array()) throw ValidationError("instance file: actions must be an array");
    for (const auto& a : actions) {
        const auto id = require_string(a, "id", "instance action");
        inst.action_ids.push_back(id);
        inst.human_capable.push_back(a.value("human_capable", true));
        inst.robot_capable.push_back(a.value("robot_capable", true));
        inst.t_h_bar.push_back(inst.human_capable.back() ? require_number(a, "t_h", id) : a.value("t_h", 0.0));
        inst.t_r.push_back(inst.robot_capable.back() ? require_number(a, "t_r", id) : a.value("t_r", 0.0));
        inst.sigma_h.push_back(a.value("sigma_h", 0.0));
    }
    validate(inst);
    return inst;
}

json to_json(const PlanningInstance& inst) {
    json actions = json::array();
    for (std::size_t i = 0; i < inst.k(); ++i) {
        actions.push_back({{"id", inst.action_ids[i]},
                           {"t_h", inst.t_h_bar[i]},
                           {"t_r", inst.t_r[i]},
                           {"sigma_h", inst.sigma_h[i]},
                           {"human_capable", static_cast<bool>(inst.human_capable[i])},
                           {"robot_capable", static_cast<bool>(inst.robot_capable[i])}});
    }
    return {{"format", "hrc-instance"},
            {"version", 1},
            {"epsilon", inst.epsilon},
            {"t0_bar", inst.t0_bar},
            {"sigma_0", inst.sigma_0},
            {"actions", actions}};
}

json to_json(const Assignment& a, const PlanningInstance& inst) {
    json human = json::array();
    json robot = json::array();
    for (std::size_t i = 0; i < inst.k(); ++i) {
        (a.x_h[i] ? human : robot).push_back(inst.action_ids[i]);
    }
    return {{"x_h", a.x_h},          {"x_r", a.x_r},
            {"human", human},        {"robot", robot},
            {"t_plan", a.t_plan},    {"protection", a.protection},
            {"human_bound", a.human_bound}, {"robot_load", a.robot_load}};
}

}  // namespace hrc
