#include "hrc/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hrc/error.hpp"

namespace hrc {

namespace {

double truncated(std::mt19937_64& rng, std::normal_distribution<double>& n) {
    for (;;) {
        const double z = n(rng);
        if (std::abs(z) <= kSampleTruncation) return z;
    }
}

CompletionTimeBelief summarize(const std::vector<double>& all, int n_degenerate, int n) {
    if (2 * n_degenerate > n) {
        throw InvalidBeliefError(std::to_string(n_degenerate) + " of " + std::to_string(n) +
                                 " sampled profiles are degenerate");
    }
    CompletionTimeBelief b;
    b.n_samples = n;
    b.n_degenerate = n_degenerate;
    b.samples = all;
    if (std::all_of(all.begin(), all.end(), [&](double t) { return t == all.front(); })) {
        b.t_bar = all.front();  // point mass, no rounding residue
        return b;
    }
    double sum = 0.0;
    for (double t : all) sum += t;
    b.t_bar = sum / static_cast<double>(all.size());
    double ss = 0.0;
    for (double t : all) ss += (t - b.t_bar) * (t - b.t_bar);
    b.sigma_t = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
    return b;
}

CompletionTimeBelief evaluate(const PredictionTarget& target, const std::vector<BetaSet>& betas, double elapsed,
                              bool floor_at_zero) {
    std::vector<double> times;
    times.reserve(betas.size());
    int degenerate = 0;
    for (const auto& b : betas) {
        try {
            double t = completion_time(with_betas(target.model, b), target.v_min) - elapsed;
            if (floor_at_zero) t = std::max(t, 0.0);
            if (!std::isfinite(t)) {
                ++degenerate;
                continue;
            }
            times.push_back(t);
        } catch (const DegenerateProfileError&) {
            ++degenerate;
        }
    }
    return summarize(times, degenerate, static_cast<int>(betas.size()));
}

}  // namespace

AxisBetaVectors build_covariance(const AxisBetaVectors& grad_v, const AxisBetaVectors& grad_K, const BetaVector& w_unc) {
    for (double w : w_unc) {
        if (!(w >= 0.0) || std::isinf(w)) throw ValidationError("uncertainty weights must be finite and nonnegative");
    }
    AxisBetaVectors c{};
    for (int i = 0; i < kAxes; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double g = grad_v[i][j] + grad_K[i][j];
            if (!std::isfinite(g)) throw NumericError("non-finite gradient in covariance");
            c[i][j] = w_unc[j] * std::abs(g);
        }
    }
    return c;
}

double default_threshold(const ActionMotionModel& model) {
    ActionMotionModel nominal = model;
    nominal.beta = BetaSet{};
    return 0.01 * peak_speed(nominal).speed;
}

std::vector<BetaSet> draw_betas(const ParameterDistribution& dist, int n, std::uint64_t seed) {
    if (n < 2) throw ValidationError("at least two samples are required");
    for (const auto& axis : dist.cov_diag) {
        for (double v : axis) {
            if (!(v >= 0.0) || std::isinf(v)) throw ValidationError("covariance entries must be finite and nonnegative");
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<BetaSet> out(static_cast<std::size_t>(n));
    for (auto& b : out) {
        for (int i = 0; i < kAxes; ++i) {
            const auto& m = dist.mean[i];
            const auto& c = dist.cov_diag[i];
            b[i].S_t = std::max(m.S_t + std::sqrt(c[kScaleTime]) * truncated(rng, normal), kMinTimeScale);
            b[i].s_t = m.s_t + std::sqrt(c[kShiftTime]) * truncated(rng, normal);
            b[i].S_D = m.S_D + std::sqrt(c[kScaleAmplitude]) * truncated(rng, normal);
        }
    }
    return out;
}

CompletionTimeBelief sample_completion_times(const ActionMotionModel& model, const ParameterDistribution& dist,
                                             int n, double v_min, std::uint64_t seed) {
    return evaluate({model, v_min}, draw_betas(dist, n, seed), 0.0, false);
}

HorizonBeliefs horizon_beliefs(const PredictionTarget& current, double elapsed,
                               const std::vector<PredictionTarget>& future, const ParameterDistribution& dist, int n,
                               std::uint64_t seed) {
    const auto betas = draw_betas(dist, n, seed);
    HorizonBeliefs out;
    out.current = evaluate(current, betas, elapsed, true);
    out.horizon.reserve(future.size());
    for (const auto& f : future) out.horizon.push_back(evaluate(f, betas, 0.0, false));
    return out;
}

std::vector<CompletionTimeBelief> future_beliefs(const std::vector<PredictionTarget>& future,
                                                 const ParameterDistribution& dist, int n, std::uint64_t seed) {
    const auto betas = draw_betas(dist, n, seed);
    std::vector<CompletionTimeBelief> out;
    out.reserve(future.size());
    for (const auto& f : future) out.push_back(evaluate(f, betas, 0.0, false));
    return out;
}

std::string belief_csv(const std::vector<BeliefLogRow>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "event_time,action_id,t_bar,sigma_t,n_degenerate\n";
    for (const auto& r : rows) {
        out << r.event_time << ',' << r.action_id << ',' << r.t_bar << ',' << r.sigma_t << ',' << r.n_degenerate
            << '\n';
    }
    return out.str();
}

}  // namespace hrc
