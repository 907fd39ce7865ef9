#include "hrc/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"

#include "hrc/batch.hpp"
#include "hrc/error.hpp"
#include "hrc/model_file.hpp"
#include "hrc/model_fitting.hpp"
#include "hrc/server.hpp"
#include "hrc/uncertainty.hpp"

namespace hrc {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct RunConfig {
    std::string task;
    std::string scenario;
    std::string models;
    std::string corpus;
    std::string instance;
    std::string out;
    std::vector<std::string> planners;
    std::vector<std::string> profiles;
    std::optional<double> epsilon;
    std::optional<int> samples;
    std::optional<double> dt;
    std::optional<double> g_unc;
    std::optional<std::uint64_t> seed;
    int seeds = 10;
    int jobs = 0;
    int port = 8765;
    int http_port = 8080;
    std::string static_dir;
    std::string record_dir;
    int max_sessions = 8;
    double duration = 0.0;
    bool trace = false;
    bool show_config = false;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void check_epsilon(const RunConfig& c) {
    if (c.epsilon) require(*c.epsilon > 0.0 && *c.epsilon < 1.0, "--epsilon must lie in (0, 1)");
    if (c.samples) require(*c.samples >= 2, "--samples must be at least 2");
    if (c.dt) require(*c.dt > 0.0, "--dt must be positive");
    if (c.g_unc) require(*c.g_unc >= 0.0, "--g-unc must be nonnegative");
}

PlannerKind single_planner(const RunConfig& c, PlannerKind fallback) {
    require(c.planners.size() <= 1, "only one --planner allowed for this command");
    return c.planners.empty() ? fallback : parse_planner_kind(c.planners.front());
}

void apply_overrides(const RunConfig& c, PlannerSettings& p, SimSettings& s) {
    if (c.epsilon) p.epsilon = *c.epsilon;
    if (c.samples) p.n_samples = *c.samples;
    if (c.g_unc) p.g_unc = *c.g_unc;
    if (c.dt) s.dt = *c.dt;
}

Scenario scenario_of(const RunConfig& c) {
    require(!c.scenario.empty(), "--scenario is required");
    return load_scenario(c.scenario);
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

json resolved_config(const std::string& command, const RunConfig& c) {
    PlannerSettings p;
    SimSettings s;
    if (!c.scenario.empty()) {
        const auto sc = load_scenario(c.scenario);
        p = sc.planner;
        s = sc.sim;
    }
    apply_overrides(c, p, s);
    if (!c.planners.empty()) p.kind = parse_planner_kind(c.planners.front());
    json j = {{"command", command},
              {"task", c.task},
              {"scenario", c.scenario},
              {"models", c.models},
              {"corpus", c.corpus},
              {"instance", c.instance},
              {"out", c.out},
              {"planners", c.planners},
              {"profiles", c.profiles},
              {"seeds", c.seeds},
              {"jobs", c.jobs},
              {"port", c.port},
              {"http_port", c.http_port},
              {"static", c.static_dir},
              {"record", c.record_dir},
              {"max_sessions", c.max_sessions},
              {"duration", c.duration},
              {"trace", c.trace},
              {"planner", to_json(p)},
              {"sim", to_json(s)}};
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    return j;
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
    require(!c.corpus.empty(), "--corpus is required");
    const auto corpus = parse_corpus_csv(read_text_file(c.corpus));
    if (corpus.trajectories.empty()) throw ConfigError("corpus " + c.corpus + " has no trajectories");
    std::vector<ActionMotionModel> init;
    if (!c.models.empty()) init = parse_model_set(read_text_file(c.models));

    std::map<std::string, TrajectoryCorpus> groups;
    std::vector<std::string> order;
    for (const auto& tr : corpus.trajectories) {
        const std::string id = tr.action_id.empty() ? "action" : tr.action_id;
        if (!groups.count(id)) order.push_back(id);
        groups[id].trajectories.push_back(tr);
    }

    std::vector<ActionMotionModel> fitted;
    json report = json::array();
    bool failed = false;
    for (const auto& id : order) {
        const auto& g = groups[id];
        json row = {{"action_id", id}, {"trajectories", g.trajectories.size()}};
        try {
            ActionMotionModel m;
            m.action_id = id;
            AxisComponents start;
            if (const auto* prev = find_model(init, id)) {
                start = prev->axes;
                m.start_position = prev->start_position;
                m.goal_position = prev->goal_position;
            } else {
                start = default_init(g);
            }
            const auto fit = fit_nominal(g, start);
            m.axes = fit.alpha;
            row["iterations"] = fit.iterations;
            row["residual"] = fit.residual;
            row["converged"] = fit.converged;
            row["completion_time"] = completion_time(m, default_threshold(m));
            fitted.push_back(m);
        } catch (const Error& e) {
            row["error"] = e.what();
            failed = true;
        }
        report.push_back(row);
    }
    const std::string models = to_json(fitted).dump(2) + "\n";
    if (c.out.empty()) {
        out << models;
        err << report.dump(2) << "\n";
    } else {
        write_text_file(c.out, models);
        out << report.dump(2) << "\n";
    }
    if (failed) {
        err << "fit failed for at least one action\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_plan(const RunConfig& c, std::ostream& out) {
    require(!c.instance.empty(), "--instance is required");
    auto inst = parse_instance(read_text_file(c.instance));
    if (c.epsilon) inst.epsilon = *c.epsilon;
    validate(inst);
    const auto kind = single_planner(c, PlannerKind::robust);
    CandidateTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = solve(kind, inst, c.trace ? &trace : nullptr);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::string human, robot;
    for (std::size_t i = 0; i < inst.k(); ++i) {
        auto& list = a.x_h[i] ? human : robot;
        list += (list.empty() ? "" : " ") + inst.action_ids[i];
    }
    out << "planner     " << to_string(kind) << "\n"
        << "human       " << human << "\n"
        << "robot       " << robot << "\n"
        << "t_plan      " << fmt("%.6f", a.t_plan) << "\n"
        << "protection  " << fmt("%.6f", a.protection) << "\n"
        << "human_bound " << fmt("%.6f", a.human_bound) << "\n"
        << "robot_load  " << fmt("%.6f", a.robot_load) << "\n"
        << "solve_ms    " << fmt("%.4f", ms) << "\n";
    for (const auto& e : trace.entries) {
        std::string x;
        for (int v : e.x_h) x += v ? 'h' : 'r';
        out << "candidate " << x << " human " << fmt("%.6f", e.human_bound) << " robot " << fmt("%.6f", e.robot_load)
            << " protection " << fmt("%.6f", e.protection) << " t " << fmt("%.6f", e.t) << "\n";
    }
    if (!c.out.empty()) {
        json j = to_json(a, inst);
        j["planner"] = to_string(kind);
        j["solve_ms"] = ms;
        write_text_file(c.out, j.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    require(c.seed.has_value(), "--seed is required for simulate");
    require(c.profiles.size() <= 1, "only one --profile allowed for simulate");
    const auto sc = scenario_of(c);
    PlannerSettings p = sc.planner;
    SimSettings s = sc.sim;
    apply_overrides(c, p, s);
    p.kind = single_planner(c, p.kind);
    const std::string profile = c.profiles.empty() ? "efficient" : c.profiles.front();
    const auto m = run_episode(sc, sc.profile(profile), p, s, *c.seed);

    out << "profile " << profile << "  planner " << to_string(p.kind) << "  seed " << *c.seed << "\n"
        << "completion_time " << fmt("%.3f", m.completion_time) << " s\n";
    for (const auto& a : m.actions) {
        out << "  " << a.action_id << " " << to_string(a.agent) << " " << fmt("%.2f", a.start) << " -> "
            << fmt("%.2f", a.end) << "\n";
    }
    if (c.trace) {
        for (const auto& pl : m.plans) {
            out << "plan t=" << fmt("%.2f", pl.time) << " " << pl.trigger << " current=" << pl.current_action
                << " t0=" << fmt("%.2f", pl.t0_bar) << "+-" << fmt("%.2f", pl.sigma_0);
            for (std::size_t k = 0; k < pl.horizon.size(); ++k) {
                out << " " << pl.horizon[k] << "=" << pl.assignment[k] << "(" << fmt("%.2f", pl.t_h_bar[k]) << "+-"
                    << fmt("%.2f", pl.sigma_h[k]) << ")";
            }
            out << " t=" << fmt("%.2f", pl.t_plan) << (pl.robot_dispatch.empty() ? "" : " dispatch " + pl.robot_dispatch)
                << "\n";
        }
    }
    if (!c.out.empty()) {
        const auto dir = ensure_dir(c.out);
        write_text_file(dir / "episode.json", to_json(m).dump(2) + "\n");
        write_text_file(dir / "actions.csv", actions_csv(m));
        write_text_file(dir / "events.jsonl", events_json_lines(m));
        write_text_file(dir / "beliefs.csv", belief_csv(m.beliefs));
    }
    if (m.watchdog) {
        err << "watchdog expired\n" << m.diagnostic << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_batch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    require(c.seed.has_value(), "--seed is required for batch");
    require(c.seeds >= 0, "--seeds must be nonnegative");
    const auto sc = scenario_of(c);
    BatchOptions o;
    o.planner = sc.planner;
    o.sim = sc.sim;
    apply_overrides(c, o.planner, o.sim);
    if (!c.profiles.empty()) o.profiles = c.profiles;
    for (const auto& name : o.profiles) sc.profile(name);
    if (!c.planners.empty()) {
        o.planners.clear();
        for (const auto& k : c.planners) o.planners.push_back(parse_planner_kind(k));
    }
    o.seed = *c.seed;
    o.n_seeds = c.seeds;
    o.jobs = c.jobs > 0 ? c.jobs : std::max(1u, std::thread::hardware_concurrency());

    const auto rows = run_batch(sc, o);
    const auto cells = summarize_batch(rows, o);
    const auto csv = batch_csv(rows);
    const auto table = summary_table(cells, o);
    if (c.out.empty()) {
        out << csv;
        err << table;
    } else {
        const auto dir = ensure_dir(c.out);
        write_text_file(dir / "results.csv", csv);
        write_text_file(dir / "summary.csv", summary_csv(cells));
        out << table;
    }
    return kExitOk;
}

int cmd_serve(const RunConfig& c, std::ostream& out) {
    const auto sc = scenario_of(c);
    SessionConfig sess = default_session_config(sc);
    SimSettings unused;
    apply_overrides(c, sess.planner, unused);
    sess.planner.kind = single_planner(c, sess.planner.kind);
    if (c.seed) sess.seed = *c.seed;
    ServerConfig cfg;
    cfg.port = c.port;
    cfg.http_port = c.http_port;
    cfg.max_sessions = c.max_sessions;
    if (c.dt) cfg.tick_dt = *c.dt;
    cfg.static_dir = c.static_dir;
    if (!c.record_dir.empty()) cfg.record_dir = ensure_dir(c.record_dir);
    SessionServer server(sc, sess, cfg);
    server.start();
    out << "frames on tcp://" << cfg.host << ":" << server.port() << "\n";
    if (!cfg.static_dir.empty()) out << "static files on http://" << cfg.host << ":" << server.http_port() << "/\n";
    out.flush();

    g_interrupted = false;
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    const auto t0 = std::chrono::steady_clock::now();
    while (!g_interrupted) {
        if (c.duration > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= c.duration) {
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    server.stop();
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Plan, simulate and serve human-robot assembly sessions", "hrcplan"};
    app.set_config("--config", "", "TOML config file; flags take precedence");
    app.require_subcommand(1);
    RunConfig c;
    app.add_flag("--show-config", c.show_config, "Print the resolved configuration and exit");

    auto* fit = app.add_subcommand("fit", "Fit nominal motion models to a velocity corpus");
    auto* plan = app.add_subcommand("plan", "Solve one planning instance");
    auto* simulate = app.add_subcommand("simulate", "Run one simulated episode");
    auto* batch = app.add_subcommand("batch", "Run all profiles and planners over a range of seeds");
    auto* serve = app.add_subcommand("serve", "Run the interactive session server");
    for (auto* s : {fit, plan, simulate, batch, serve}) s->configurable()->fallthrough();

    auto existing = [](CLI::Option* o) { o->check(CLI::ExistingFile); };
    existing(fit->add_option("--corpus", c.corpus, "Velocity corpus CSV"));
    existing(fit->add_option("--models", c.models, "Model file used as the initial guess"));
    fit->add_option("--out", c.out, "Fitted model file (stdout when omitted)");

    existing(plan->add_option("--instance", c.instance, "Planning instance file"));
    plan->add_option("--planner", c.planners, "baseline or robust")->expected(1);
    plan->add_option("--epsilon", c.epsilon, "Chance-constraint violation level");
    plan->add_option("--out", c.out, "Assignment JSON file");
    plan->add_flag("--trace", c.trace, "Print every enumerated candidate");

    for (auto* s : {simulate, batch, serve}) {
        existing(s->add_option("--scenario", c.scenario, "Scenario file"));
        s->add_option("--epsilon", c.epsilon, "Chance-constraint violation level");
        s->add_option("--samples", c.samples, "Completion-time samples per planning event");
        s->add_option("--g-unc", c.g_unc, "Uncertainty gain");
        s->add_option("--seed", c.seed, "Random seed");
    }
    existing(simulate->add_option("--task", c.task, "Task file (informational; the scenario names its task)"));
    simulate->add_option("--planner", c.planners, "baseline or robust")->expected(1);
    simulate->add_option("--profile", c.profiles, "Worker profile")->expected(1);
    simulate->add_option("--dt", c.dt, "Simulation step, s");
    simulate->add_option("--out", c.out, "Output directory for episode files");
    simulate->add_flag("--trace", c.trace, "Print every planning event");

    batch->add_option("--planner", c.planners, "Restrict to these planners");
    batch->add_option("--profile", c.profiles, "Restrict to these profiles");
    batch->add_option("--seeds", c.seeds, "Number of seeds per cell");
    batch->add_option("--jobs", c.jobs, "Concurrent episodes (0: one per core)");
    batch->add_option("--dt", c.dt, "Simulation step, s");
    batch->add_option("--out", c.out, "Output directory for results.csv and summary.csv");

    serve->add_option("--planner", c.planners, "baseline or robust")->expected(1);
    serve->add_option("--port", c.port, "Frame protocol port (0: any free port)");
    serve->add_option("--http-port", c.http_port, "Static file port (0: any free port)");
    serve->add_option("--static", c.static_dir, "Directory with web assets")->check(CLI::ExistingDirectory);
    serve->add_option("--record", c.record_dir, "Directory for session replay files");
    serve->add_option("--max-sessions", c.max_sessions, "Concurrent session limit");
    serve->add_option("--dt", c.dt, "Session seconds per tick");
    serve->add_option("--duration", c.duration, "Stop after this many seconds (0: run until interrupted)");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        check_epsilon(c);
        if (c.show_config) {
            out << resolved_config(sub->get_name(), c).dump(2) << "\n";
            return kExitOk;
        }
        if (sub == fit) return cmd_fit(c, out, err);
        if (sub == plan) return cmd_plan(c, out);
        if (sub == simulate) return cmd_simulate(c, out, err);
        if (sub == batch) return cmd_batch(c, out, err);
        return cmd_serve(c, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace hrc
