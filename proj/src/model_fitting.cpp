#include "hrc/model_fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr AdaptationParams kIdentity{};

double axis_residual(const TrajectoryCorpus& corpus, int axis, const LognormalComponent& c) {
    double s = 0.0;
    for (const auto& tr : corpus.trajectories) {
        for (const auto& smp : tr.samples) {
            const double r = smp.v[axis] - axis_velocity(c, kIdentity, smp.t);
            s += r * r;
        }
    }
    return s;
}

LognormalComponent project(LognormalComponent c, const FitOptions& opts) {
    c.sigma = std::max(c.sigma, opts.min_sigma);
    c.t0 = std::max(c.t0, 0.0);
    return c;
}

LognormalComponent step(const LognormalComponent& c, const Eigen::Vector4d& delta) {
    return {c.D + delta[kAmplitude], c.t0 + delta[kOnset], c.mu + delta[kLogMean], c.sigma + delta[kLogStd]};
}

AxisFit fit_axis(const TrajectoryCorpus& corpus, int axis, LognormalComponent p, const FitOptions& opts) {
    AxisFit fit;
    p = project(p, opts);
    double S = axis_residual(corpus, axis, p);
    if (!std::isfinite(S)) throw NumericError("non-finite residual at the initial guess");
    fit.accepted_residuals.push_back(S);

    double lambda = -1.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (S <= 1e-30) {
            fit.converged = true;
            break;
        }
        Eigen::Matrix4d JtJ = Eigen::Matrix4d::Zero();
        Eigen::Vector4d Jtr = Eigen::Vector4d::Zero();
        for (const auto& tr : corpus.trajectories) {
            for (const auto& smp : tr.samples) {
                const auto g = alpha_gradient(p, kIdentity, smp.t);
                const Eigen::Vector4d J(g[0], g[1], g[2], g[3]);
                const double r = smp.v[axis] - axis_velocity(p, kIdentity, smp.t);
                JtJ.noalias() += J * J.transpose();
                Jtr.noalias() += J * r;
            }
        }
        if (lambda < 0.0) {
            lambda = opts.initial_damping * JtJ.diagonal().mean();
            if (!(lambda > 0.0)) {
                int idx = 0;
                JtJ.diagonal().minCoeff(&idx);
                throw SingularSystemError("damped normal equations are singular", idx);
            }
        }

        ++fit.iterations;
        const Eigen::Matrix4d A = JtJ + lambda * Eigen::Matrix4d::Identity();
        const Eigen::LDLT<Eigen::Matrix4d> ldlt(A);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            int idx = 0;
            A.diagonal().minCoeff(&idx);
            throw SingularSystemError("damped normal equations are singular", idx);
        }
        const Eigen::Vector4d delta = ldlt.solve(Jtr);
        if (!delta.allFinite()) {
            int idx = 0;
            for (int i = 0; i < 4; ++i) {
                if (!std::isfinite(delta[i])) idx = i;
            }
            throw SingularSystemError("damped step is not finite", idx);
        }

        const auto candidate = project(step(p, delta), opts);
        const double S_new = axis_residual(corpus, axis, candidate);
        if (!std::isfinite(S_new)) {
            lambda *= 10.0;
            continue;
        }
        const double rel = std::abs(S - S_new) / S;
        if (S_new < S) {
            p = candidate;
            S = S_new;
            lambda /= 10.0;
            fit.accepted_residuals.push_back(S);
        } else {
            lambda *= 10.0;
        }
        if (rel < opts.tolerance || lambda > 1e20) {
            fit.converged = true;
            break;
        }
    }
    fit.alpha = p;
    fit.residual = S;
    return fit;
}

}  // namespace

void validate(const TrajectoryCorpus& corpus) {
    if (corpus.trajectories.empty()) throw ValidationError("trajectory corpus is empty");
    for (const auto& tr : corpus.trajectories) {
        if (tr.samples.size() < kMinSamplesPerTrajectory) {
            throw ValidationError("trajectory '" + tr.trajectory_id + "' has fewer than 8 samples");
        }
        for (std::size_t j = 0; j < tr.samples.size(); ++j) {
            const auto& s = tr.samples[j];
            if (!std::isfinite(s.t) || !finite(s.v)) {
                throw ValidationError("trajectory '" + tr.trajectory_id + "' has non-finite samples");
            }
            if (j > 0 && s.t <= tr.samples[j - 1].t) {
                throw ValidationError("trajectory '" + tr.trajectory_id + "' is not time-ordered");
            }
        }
    }
}

double fit_residual(const TrajectoryCorpus& corpus, const AxisComponents& alpha) {
    double s = 0.0;
    for (int i = 0; i < kAxes; ++i) s += axis_residual(corpus, i, alpha[i]);
    return s;
}

Vec2 mean_displacement(const TrajectoryCorpus& corpus) {
    Vec2 sum{};
    for (const auto& tr : corpus.trajectories) {
        for (std::size_t j = 1; j < tr.samples.size(); ++j) {
            const double dt = tr.samples[j].t - tr.samples[j - 1].t;
            sum += 0.5 * dt * (tr.samples[j].v + tr.samples[j - 1].v);
        }
    }
    return sum * (1.0 / static_cast<double>(corpus.trajectories.size()));
}

FitResult fit_nominal(const TrajectoryCorpus& corpus, const AxisComponents& init, const FitOptions& opts) {
    validate(corpus);
    for (const auto& c : init) validate(c);
    const Vec2 disp = mean_displacement(corpus);
    const int lead = std::abs(disp.x) >= std::abs(disp.y) ? 0 : 1;
    const double lead_disp = std::abs(disp[lead]);
    FitResult out;
    out.converged = true;
    // The lead axis goes first so a still axis can borrow its timing.
    for (int i : {lead, 1 - lead}) {
        if (i != lead && lead_disp > 0.0 && std::abs(disp[i]) <= opts.still_axis_ratio * lead_disp) {
            // Only noise to fit here; any stroke LM finds would be spurious.
            AxisFit still;
            still.alpha = out.axes[lead].alpha;
            still.alpha.D = 0.0;
            still.residual = axis_residual(corpus, i, still.alpha);
            still.converged = true;
            still.accepted_residuals = {still.residual};
            out.axes[i] = still;
        } else {
            out.axes[i] = fit_axis(corpus, i, init[i], opts);
        }
        out.alpha[i] = out.axes[i].alpha;
        out.residual += out.axes[i].residual;
        out.iterations = std::max(out.iterations, out.axes[i].iterations);
        out.converged = out.converged && out.axes[i].converged;
    }
    return out;
}

AxisComponents default_init(const TrajectoryCorpus& corpus) {
    validate(corpus);
    constexpr double kSigma = 0.4;
    double onset_sum = 0.0;
    double peak_sum = 0.0;
    Vec2 disp_sum{};
    int used = 0;
    for (const auto& tr : corpus.trajectories) {
        double peak = 0.0;
        double peak_t = tr.samples.front().t;
        for (const auto& s : tr.samples) {
            const double sp = s.v.norm();
            if (sp > peak) {
                peak = sp;
                peak_t = s.t;
            }
        }
        if (peak <= 0.0) continue;
        double onset = peak_t;
        for (const auto& s : tr.samples) {
            if (s.v.norm() > 0.05 * peak) {
                onset = s.t;
                break;
            }
        }
        Vec2 disp{};
        for (std::size_t j = 1; j < tr.samples.size(); ++j) {
            const double dt = tr.samples[j].t - tr.samples[j - 1].t;
            disp += 0.5 * dt * (tr.samples[j].v + tr.samples[j - 1].v);
        }
        onset_sum += onset;
        peak_sum += peak_t;
        disp_sum += disp;
        ++used;
    }
    if (used == 0) throw ValidationError("corpus has zero velocity everywhere");
    const double onset = onset_sum / used;
    const double peak_t = peak_sum / used;
    // A lognormal at sigma falls to 5% of its peak at (t - t0) = mode * r.
    const double r = std::exp(-kSigma * std::sqrt(2.0 * std::log(20.0)));
    const double mode = std::max((peak_t - onset) / (1.0 - r), 1e-3);
    const double t0 = std::max(peak_t - mode, 0.0);
    const double mu = std::log(std::max(peak_t - t0, 1e-3)) + kSigma * kSigma;
    AxisComponents init{};
    for (int i = 0; i < kAxes; ++i) init[i] = {disp_sum[i] / used, t0, mu, kSigma};
    return init;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, int line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ParseError("expected a number, got '" + s + "'", line);
    return v;
}

}  // namespace

TrajectoryCorpus parse_corpus_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    std::unordered_map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto header = split_csv(line);
        for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
        break;
    }
    for (const char* need : {"trajectory_id", "t", "vx", "vy"}) {
        if (!col.count(need)) throw ParseError(std::string("corpus header lacks column '") + need + "'", line_no);
    }
    auto opt_col = [&](const char* name) -> long { return col.count(name) ? static_cast<long>(col[name]) : -1; };
    const long action_col = opt_col("action_id");
    const long subject_col = opt_col("subject_id");

    TrajectoryCorpus corpus;
    std::unordered_map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto cells = split_csv(line);
        if (cells.size() < col.size()) throw ParseError("row has " + std::to_string(cells.size()) + " cells", line_no);
        const auto& id = cells[col["trajectory_id"]];
        auto it = seen.find(id);
        if (it == seen.end()) {
            it = seen.emplace(id, corpus.trajectories.size()).first;
            Trajectory tr;
            tr.trajectory_id = id;
            if (action_col >= 0) tr.action_id = cells[static_cast<std::size_t>(action_col)];
            if (subject_col >= 0) tr.subject_id = cells[static_cast<std::size_t>(subject_col)];
            corpus.trajectories.push_back(std::move(tr));
        } else if (it->second + 1 != corpus.trajectories.size()) {
            throw ParseError("rows of trajectory '" + id + "' are not contiguous", line_no);
        }
        corpus.trajectories[it->second].samples.push_back(
            {to_double(cells[col["t"]], line_no),
             {to_double(cells[col["vx"]], line_no), to_double(cells[col["vy"]], line_no)}});
    }
    return corpus;
}

std::string to_csv(const TrajectoryCorpus& corpus) {
    std::ostringstream out;
    out.precision(12);
    out << "action_id,subject_id,trajectory_id,t,vx,vy\n";
    for (const auto& tr : corpus.trajectories) {
        for (const auto& s : tr.samples) {
            out << tr.action_id << ',' << tr.subject_id << ',' << tr.trajectory_id << ',' << s.t << ',' << s.v.x
                << ',' << s.v.y << '\n';
        }
    }
    return out.str();
}

}  // namespace hrc
