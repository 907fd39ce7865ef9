#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/json_io.hpp"

namespace hrc {

/// One human + one robot assignment problem over a planning horizon of k
/// actions. All durations in seconds; sigma_0 and sigma_h are 3-sigma radii.
struct PlanningInstance {
    std::vector<std::string> action_ids;
    std::vector<bool> human_capable;  // membership in C_h
    std::vector<bool> robot_capable;  // membership in C_r
    std::vector<double> t_r;
    std::vector<double> t_h_bar;
    std::vector<double> sigma_h;
    double t0_bar = 0.0;   // remaining time of the human's current action
    double sigma_0 = 0.0;
    double epsilon = 0.005;

    std::size_t k() const { return action_ids.size(); }
    std::size_t human_capable_count() const;
};

// Throws ValidationError when sizes disagree, an action has no capable agent,
// a duration/radius is negative or epsilon is outside (0, 1).
void validate(const PlanningInstance& instance);

struct Assignment {
    std::vector<int> x_h;
    std::vector<int> x_r;
    double t_plan = 0.0;
    double protection = 0.0;  // robust buffer on the human side, 0 for baseline
    double human_bound = 0.0;
    double robot_load = 0.0;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct BudgetSet {
    int L = 1;
    double gamma = 0.0;
    double gamma_eff = 0.0;  // min(gamma, L)
};

// gamma = sqrt(2 ln(1/epsilon) L).
BudgetSet gamma_budget(double epsilon, int L);

/// Worst case of a^T xi over the budget set {|xi_l| <= 1, sum |xi_l| <= gamma}:
/// min over m >= 0 of sum_l max(|a_l| - m, 0) + gamma * m, evaluated at the
/// breakpoints m in {0} U {|a_l|}.
double protection_term(std::span<const double> a, double gamma_eff);

// Uncertainty vector of a candidate: (sigma_0, sigma_h,i * x_h,i for i in C_h).
std::vector<double> protection_vector(const PlanningInstance& instance, std::span<const int> x_h);

enum class PlannerKind { baseline, robust };
std::string_view to_string(PlannerKind kind);
PlannerKind parse_planner_kind(std::string_view s);

struct CandidateTrace {
    struct Entry {
        std::vector<int> x_h;
        double human_bound = 0.0;
        double robot_load = 0.0;
        double protection = 0.0;
        double t = 0.0;
    };
    std::vector<Entry> entries;
};

/// Exact minimizer of max(x_h^T t_h + t_0, x_r^T t_r) by enumeration over the
/// capability-feasible assignments. Ties (within 1e-9 relative) prefer fewer
/// human-assigned actions, then the lexicographically smaller x_r.
Assignment solve_baseline(const PlanningInstance& instance, CandidateTrace* trace = nullptr);

/// Same search with the human bound raised by protection_term over the budget
/// set with L = 1 + |C_h|. Reduces exactly to solve_baseline at zero radii.
Assignment solve_robust(const PlanningInstance& instance, CandidateTrace* trace = nullptr);

Assignment solve(PlannerKind kind, const PlanningInstance& instance, CandidateTrace* trace = nullptr);

// Robot-assigned action with the shortest t_r (lowest index on ties).
std::optional<std::size_t> select_robot_action(const Assignment& assignment, const PlanningInstance& instance);

PlanningInstance parse_instance(std::string_view text);
json to_json(const PlanningInstance& instance);
json to_json(const Assignment& assignment, const PlanningInstance& instance);

}  // namespace hrc
