#include "hrc/batch.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "hrc/error.hpp"

namespace hrc {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

std::vector<BatchRow> run_batch(const Scenario& scenario, const BatchOptions& opts) {
    if (opts.n_seeds < 0) throw ValidationError("seed count must be nonnegative");
    std::vector<const ProfileSpec*> profiles;
    for (const auto& name : opts.profiles) profiles.push_back(&scenario.profile(name));

    std::vector<BatchRow> rows;
    for (std::size_t p = 0; p < profiles.size(); ++p) {
        for (auto kind : opts.planners) {
            for (int s = 0; s < opts.n_seeds; ++s) {
                BatchRow r;
                r.profile = opts.profiles[p];
                r.planner = kind;
                r.seed = opts.seed + static_cast<std::uint64_t>(s);
                rows.push_back(std::move(r));
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            auto& r = rows[i];
            try {
                PlannerSettings ps = opts.planner;
                ps.kind = r.planner;
                const auto t0 = std::chrono::steady_clock::now();
                const auto m = run_episode(scenario, scenario.profile(r.profile), ps, opts.sim, r.seed);
                r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                r.completion_time = m.completion_time;
                r.watchdog = m.watchdog;
                r.plans = static_cast<int>(m.plans.size());
                for (const auto& spec : scenario.tree.actions()) {
                    if (m.executed_by(spec.id) == Agent::robot) r.robot_actions.push_back(spec.id);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = rows.size();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(rows.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::string batch_csv(const std::vector<BatchRow>& rows) {
    std::string out = "# hrc-batch v" + std::to_string(kBatchSchemaVersion) + "\n";
    out += "profile,planner,seed,completion_time,watchdog,plans,robot_actions\n";
    for (const auto& r : rows) {
        std::string robot;
        for (const auto& id : r.robot_actions) robot += (robot.empty() ? "" : ";") + id;
        out += r.profile + "," + std::string(to_string(r.planner)) + "," + std::to_string(r.seed) + "," +
               fmt("%.6f", r.completion_time) + "," + (r.watchdog ? "1" : "0") + "," + std::to_string(r.plans) +
               "," + robot + "\n";
    }
    return out;
}

std::vector<BatchCell> summarize_batch(const std::vector<BatchRow>& rows, const BatchOptions& opts) {
    std::vector<BatchCell> cells;
    for (const auto& profile : opts.profiles) {
        for (auto kind : opts.planners) {
            BatchCell c;
            c.profile = profile;
            c.planner = kind;
            double sum = 0.0;
            for (const auto& r : rows) {
                if (r.profile != profile || r.planner != kind) continue;
                ++c.episodes;
                if (r.watchdog) {
                    ++c.flagged;
                } else {
                    sum += r.completion_time;
                }
            }
            const int n = c.episodes - c.flagged;
            c.mean_completion = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
            cells.push_back(c);
        }
    }
    return cells;
}

std::string summary_csv(const std::vector<BatchCell>& cells) {
    std::string out = "profile,planner,episodes,flagged,mean_completion_time\n";
    for (const auto& c : cells) {
        out += c.profile + "," + std::string(to_string(c.planner)) + "," + std::to_string(c.episodes) + "," +
               std::to_string(c.flagged) + "," + (std::isnan(c.mean_completion) ? "" : fmt("%.6f", c.mean_completion)) +
               "\n";
    }
    return out;
}

std::string summary_table(const std::vector<BatchCell>& cells, const BatchOptions& opts) {
    char buf[64];
    std::string out = "planner   ";
    for (const auto& p : opts.profiles) {
        std::snprintf(buf, sizeof buf, " %12s", p.c_str());
        out += buf;
    }
    out += "\n";
    for (auto kind : opts.planners) {
        std::snprintf(buf, sizeof buf, "%-10s", std::string(to_string(kind)).c_str());
        out += buf;
        for (const auto& p : opts.profiles) {
            for (const auto& c : cells) {
                if (c.profile != p || c.planner != kind) continue;
                if (std::isnan(c.mean_completion)) {
                    std::snprintf(buf, sizeof buf, " %12s", "-");
                } else {
                    std::snprintf(buf, sizeof buf, " %10.2f%s", c.mean_completion, c.flagged ? " *" : " s");
                }
                out += buf;
            }
        }
        out += "\n";
    }
    for (const auto& c : cells) {
        if (c.flagged) {
            out += "* " + c.profile + "/" + std::string(to_string(c.planner)) + ": " + std::to_string(c.flagged) +
                   " watchdog episode(s) excluded\n";
        }
    }
    return out;
}

}  // namespace hrc
