#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hrc/motion_model.hpp"
#include "hrc/robust_planner.hpp"

namespace test {

inline std::filesystem::path data_dir() { return HRC_DATA_DIR; }
inline std::filesystem::path scenario_path() { return data_dir() / "desktop_assembly.scenario.json"; }

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// max of a^T xi over {|xi_l| <= 1, sum |xi_l| <= gamma} by walking the
// vertices: a set of unit coordinates plus at most one fractional one.
inline double protection_by_vertices(const std::vector<double>& a, double gamma) {
    const int L = static_cast<int>(a.size());
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << L); ++mask) {
        const int ones = std::popcount(mask);
        if (ones > gamma + 1e-12) continue;
        double v = 0.0;
        for (int l = 0; l < L; ++l) {
            if (mask & (1u << l)) v += std::abs(a[l]);
        }
        const double frac = std::min(1.0, gamma - ones);
        double extra = 0.0;
        if (frac > 0.0) {
            for (int l = 0; l < L; ++l) {
                if (!(mask & (1u << l))) extra = std::max(extra, frac * std::abs(a[l]));
            }
        }
        best = std::max(best, v + extra);
    }
    return best;
}

// Random points of the budget set; the maximum of a^T xi over them must stay
// below the vertex value.
inline double protection_by_sampling(const std::vector<double>& a, double gamma, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double best = 0.0;
    std::vector<double> xi(a.size());
    for (int s = 0; s < n; ++s) {
        double l1 = 0.0;
        for (auto& x : xi) {
            x = u(rng);
            l1 += std::abs(x);
        }
        const double scale = l1 > gamma ? gamma / l1 : 1.0;
        double v = 0.0;
        for (std::size_t l = 0; l < a.size(); ++l) v += a[l] * xi[l] * scale;
        best = std::max(best, v);
    }
    return best;
}

struct OracleResult {
    std::vector<int> x_h;
    double t = 0.0;
};

// Direct evaluation of every capability-feasible assignment.
inline OracleResult enumerate_plans(const hrc::PlanningInstance& inst, bool robust) {
    const int k = static_cast<int>(inst.k());
    int L = 1;
    for (int i = 0; i < k; ++i) L += inst.human_capable[i] ? 1 : 0;
    const double gamma = std::min(std::sqrt(2.0 * std::log(1.0 / inst.epsilon) * L), static_cast<double>(L));
    OracleResult best;
    bool have = false;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        std::vector<int> x(k);
        bool ok = true;
        for (int i = 0; i < k; ++i) {
            x[i] = (mask >> i) & 1u;
            if (x[i] && !inst.human_capable[i]) ok = false;
            if (!x[i] && !inst.robot_capable[i]) ok = false;
        }
        if (!ok) continue;
        double human = inst.t0_bar;
        double robot = 0.0;
        std::vector<double> a{inst.sigma_0};
        for (int i = 0; i < k; ++i) {
            if (x[i]) human += inst.t_h_bar[i];
            else robot += inst.t_r[i];
            if (inst.human_capable[i]) a.push_back(x[i] ? inst.sigma_h[i] : 0.0);
        }
        if (robust) human += protection_by_vertices(a, gamma);
        const double t = std::max(human, robot);
        auto humans = [](const std::vector<int>& v) { return std::count(v.begin(), v.end(), 1); };
        bool better = !have;
        if (have) {
            const double tol = 1e-9 * std::max(1.0, std::abs(best.t));
            if (t < best.t - tol) {
                better = true;
            } else if (std::abs(t - best.t) <= tol) {
                if (humans(x) != humans(best.x_h)) {
                    better = humans(x) < humans(best.x_h);
                } else {
                    // lexicographically smaller x_r
                    for (int i = 0; i < k; ++i) {
                        const int xr = 1 - x[i];
                        const int br = 1 - best.x_h[i];
                        if (xr != br) {
                            better = xr < br;
                            break;
                        }
                    }
                }
            }
        }
        if (better) {
            best = {x, t};
            have = true;
        }
    }
    return best;
}

inline hrc::PlanningInstance random_instance(std::mt19937_64& rng, int k_max = 8) {
    std::uniform_int_distribution<int> kd(1, k_max);
    std::uniform_real_distribution<double> dur(1.0, 10.0);
    std::uniform_real_distribution<double> sig(0.0, 5.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    hrc::PlanningInstance inst;
    const int k = kd(rng);
    for (int i = 0; i < k; ++i) {
        inst.action_ids.push_back("a" + std::to_string(i));
        const double c = u(rng);
        inst.human_capable.push_back(c < 0.85);
        inst.robot_capable.push_back(c >= 0.15);
        inst.t_h_bar.push_back(dur(rng));
        inst.t_r.push_back(dur(rng));
        inst.sigma_h.push_back(sig(rng));
    }
    inst.t0_bar = dur(rng) * u(rng);
    inst.sigma_0 = sig(rng);
    inst.epsilon = 0.005;
    return inst;
}

// Reference reach: identical lognormal on both axes.
inline hrc::ActionMotionModel reference_model(double D = 0.25, double t0 = 0.1, double mu = -0.2, double sigma = 0.35) {
    hrc::ActionMotionModel m;
    m.action_id = "reach";
    m.axes[0] = {D, t0, mu, sigma};
    m.axes[1] = {D, t0, mu, sigma};
    m.start_position = {0.0, 0.0};
    m.goal_position = {D, D};
    return m;
}

// First time after the dense-grid speed peak at which the speed drops below v_min.
inline double grid_completion(const hrc::ActionMotionModel& m, double v_min, double t_end, double dt = 1e-4) {
    double peak_t = 0.0;
    double peak = -1.0;
    for (double t = 0.0; t <= t_end; t += dt) {
        const double s = hrc::speed_at(m, t);
        if (s > peak) {
            peak = s;
            peak_t = t;
        }
    }
    for (double t = peak_t; t <= t_end; t += dt) {
        if (hrc::speed_at(m, t) < v_min) return t;
    }
    return t_end;
}

}  // namespace test

#include "hrc/model_fitting.hpp"

namespace test {

inline hrc::Trajectory trajectory_of(const hrc::ActionMotionModel& m, double dt, double noise_std, std::uint64_t seed,
                                     const std::string& id = "t") {
    hrc::Trajectory tr;
    tr.trajectory_id = id;
    tr.action_id = m.action_id;
    tr.subject_id = "s";
    for (const auto& s : hrc::synthesize_trajectory(m, dt, noise_std, seed)) tr.samples.push_back({s.t, s.velocity});
    return tr;
}

inline hrc::TrajectoryCorpus corpus_of(const hrc::ActionMotionModel& m, int q, double dt, double noise_std,
                                       std::uint64_t seed) {
    hrc::TrajectoryCorpus c;
    for (int p = 0; p < q; ++p) {
        c.trajectories.push_back(trajectory_of(m, dt, noise_std, seed * 1000 + p, "t" + std::to_string(p)));
    }
    return c;
}

inline hrc::ActionMotionModel with_axes(hrc::ActionMotionModel m, const hrc::AxisComponents& a) {
    m.axes = a;
    return m;
}

}  // namespace test
