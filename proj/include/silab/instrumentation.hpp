#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "silab/elr.hpp"
#include "silab/errors.hpp"
#include "silab/grouped_params.hpp"
#include "silab/objective.hpp"

namespace silab {

// One instrumentation snapshot of a training run.
struct StepRecord {
    std::size_t step = 0;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double test_error = std::numeric_limits<double>::quiet_NaN();

    double total_elr = 0.0;
    double total_eff_grad = 0.0;
    double total_ess = 0.0;

    double sharpness_mean_grad_norm = std::numeric_limits<double>::quiet_NaN();
    double grad_cov_trace = std::numeric_limits<double>::quiet_NaN();
    // 1 - cos between the parameter vectors on the two most recent iterations.
    double adjacent_cosine_distance = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> group_rho;
    std::vector<double> group_elr;
    std::vector<double> group_eff_grad;
    std::vector<double> group_ess;
};

// Mean over mini-batches of the stochastic gradient norm. In effective mode
// the norm is taken on the unit sphere, i.e. multiplied by the parameter norm.
inline double sharpness_mean_grad_norm(const SIObjective& objective, const GroupedParams& params,
                                       const std::vector<std::vector<std::size_t>>& batches,
                                       bool effective = true) {
    if (batches.empty()) throw std::invalid_argument("sharpness: at least one batch required");
    const double scale = effective ? params.norm() : 1.0;
    std::vector<double> grad;
    double sum = 0.0;
    for (const auto& batch : batches) {
        objective.value_and_gradient(params, grad, batch);
        sum += norm(grad) * scale;
    }
    return sum / static_cast<double>(batches.size());
}

// Mean over mini-batches of the squared stochastic gradient norm, i.e. the
// trace of the (uncentered) gradient covariance. Same effective-mode scaling
// as the mean-norm proxy so the Jensen relation between the two is preserved.
inline double grad_cov_trace(const SIObjective& objective, const GroupedParams& params,
                             const std::vector<std::vector<std::size_t>>& batches,
                             bool effective = true) {
    if (batches.empty()) throw std::invalid_argument("grad_cov_trace: at least one batch required");
    const double scale = effective ? params.norm() : 1.0;
    std::vector<double> grad;
    double sum = 0.0;
    for (const auto& batch : batches) {
        objective.value_and_gradient(params, grad, batch);
        const double g = norm(grad) * scale;
        sum += g * g;
    }
    return sum / static_cast<double>(batches.size());
}

inline double adjacent_cosine_distance(const GroupedParams& a, const GroupedParams& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("adjacent_cosine_distance: dimension mismatch");
    return cosine_distance(a.values, b.values);
}

// ---------------------------------------------------------------------------
// Trajectory analysis

// Index of the first record inside the analysis tail: the window covers the
// last half of the run, but at least `min_steps` optimizer steps.
inline std::size_t tail_begin_index(const std::vector<StepRecord>& records,
                                    std::size_t min_steps) {
    if (records.empty()) throw InsufficientDataError("empty trajectory");
    const std::size_t last = records.back().step;
    const std::size_t span = std::max(last / 2, std::min(last, min_steps));
    const std::size_t cutoff = last - span;
    std::size_t begin = 0;
    while (begin + 1 < records.size() && records[begin].step < cutoff) ++begin;
    return begin;
}

enum class Regime {
    Convergence,
    ChaoticEquilibrium,
    Divergence,
    BoundaryUndetermined,
};

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Convergence: return "R1-convergence";
        case Regime::ChaoticEquilibrium: return "R2-equilibrium";
        case Regime::Divergence: return "R3-divergence";
        case Regime::BoundaryUndetermined: return "boundary-undetermined";
    }
    return "?";
}

inline Regime regime_from_name(const std::string& s) {
    if (s == "R1-convergence") return Regime::Convergence;
    if (s == "R2-equilibrium") return Regime::ChaoticEquilibrium;
    if (s == "R3-divergence") return Regime::Divergence;
    if (s == "boundary-undetermined") return Regime::BoundaryUndetermined;
    throw ParseError("unknown regime label '" + s + "'");
}

// The statistics the classification was based on.
struct RegimeEvidence {
    double initial_loss = 0.0;
    double tail_mean_loss = 0.0;
    double tail_std_loss = 0.0;
    double tail_slope = 0.0;        // least-squares, per optimizer step
    double tail_slope_tstat = 0.0;  // slope / its standard error
    double tail_mean_ess = 0.0;
    double random_guess_level = 0.0;
    double convergence_threshold = 0.0;  // loss below this counts as converged
    bool diverged = false;
    std::string reason;
};

struct RegimeLabel {
    Regime regime = Regime::BoundaryUndetermined;
    RegimeEvidence evidence;
};

struct ClassifierOptions {
    std::size_t min_records = 200;
    std::size_t tail_min_steps = 1000;
    // Random-guess band half-width, relative to the random-guess level.
    double band_width = 0.1;
    // Convergence threshold: max(conv_floor, conv_fraction * initial loss).
    double conv_floor = 0.05;
    double conv_fraction = 0.05;
    // A tail is flat when its slope is below this (per step), or when the
    // trend is statistically indistinguishable from zero against the
    // oscillation (|t| at or below plateau_max_tstat).
    double slope_threshold = 1e-5;
    double plateau_max_tstat = 3.0;
    // A plateau level must be separated from both the converged region and the
    // random-guess band to count as an equilibrium.
    double sep_above_conv = 1.5;
    double sep_below_band = 0.85;
    // Oscillation bound for a plateau: tail std / tail mean.
    double max_plateau_cv = 0.5;
    // Mean effective step size above which an in-band run counts as divergent
    // (distinguishes random-walk behaviour from a run that merely starts there).
    double divergence_min_ess = 0.1;
    // A step of pi radians traverses the unit sphere end to end, so the
    // direction is resampled every iteration; together with a loss at most
    // this far below the random-guess level it marks divergence even when
    // partial equilibration (or a collapsed group) shifts the level outside
    // the band proper.
    double divergence_memoryless_ess = 3.14159265358979;
    double divergence_level_fraction = 0.8;
    // Slow-but-steady descent evidence: slope t-statistic at or below this,
    // with a total fitted decrease of at least `descent_min_drop` x initial.
    double descent_tstat = -4.0;
    double descent_min_drop = 0.005;
};

namespace detail {

struct TailFit {
    double mean = 0.0;
    double stddev = 0.0;
    double slope = 0.0;
    double tstat = 0.0;
    double span_steps = 0.0;
};

inline TailFit fit_tail_loss(std::span<const StepRecord> tail) {
    TailFit fit;
    const std::size_t n = tail.size();
    double mean_t = 0.0, mean_y = 0.0;
    for (const StepRecord& r : tail) {
        mean_t += static_cast<double>(r.step);
        mean_y += r.train_loss;
    }
    mean_t /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (const StepRecord& r : tail) {
        const double dt = static_cast<double>(r.step) - mean_t;
        const double dy = r.train_loss - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    fit.mean = mean_y;
    fit.stddev = std::sqrt(syy / static_cast<double>(n));
    fit.slope = stt > 0.0 ? sty / stt : 0.0;
    fit.span_steps = static_cast<double>(tail.back().step - tail.front().step);
    if (n > 2 && stt > 0.0) {
        const double ss_res = std::max(0.0, syy - fit.slope * sty);
        const double sigma_sq = ss_res / static_cast<double>(n - 2);
        const double se = std::sqrt(sigma_sq / stt);
        fit.tstat = se > 0.0 ? fit.slope / se : (fit.slope < 0.0 ? -1e9 : 1e9);
    }
    return fit;
}

}  // namespace detail

// Labels a trajectory as convergence, chaotic equilibrium, or divergence from
// its statistics alone. `random_guess_level` is the loss of an uninformed
// predictor: ln(num_classes) for cross-entropy, the mean value over random
// sphere points for analytic objectives.
inline RegimeLabel classify_regime(const std::vector<StepRecord>& records,
                                   double random_guess_level, bool diverged = false,
                                   const ClassifierOptions& opt = {}) {
    RegimeLabel out;
    RegimeEvidence& ev = out.evidence;
    ev.random_guess_level = random_guess_level;
    ev.diverged = diverged;

    // Divergence is decisive no matter how short the record is.
    if (diverged) {
        out.regime = Regime::Divergence;
        ev.reason = "non-finite values encountered";
        if (!records.empty()) ev.initial_loss = records.front().train_loss;
        return out;
    }

    if (records.size() < opt.min_records)
        throw InsufficientDataError("need at least " + std::to_string(opt.min_records) +
                                    " recorded points, got " + std::to_string(records.size()));

    ev.initial_loss = records.front().train_loss;
    ev.convergence_threshold = std::max(opt.conv_floor, opt.conv_fraction * ev.initial_loss);

    const std::size_t begin = tail_begin_index(records, opt.tail_min_steps);
    const std::span<const StepRecord> tail(records.data() + begin, records.size() - begin);
    const detail::TailFit fit = detail::fit_tail_loss(tail);
    ev.tail_mean_loss = fit.mean;
    ev.tail_std_loss = fit.stddev;
    ev.tail_slope = fit.slope;
    ev.tail_slope_tstat = fit.tstat;
    double ess_sum = 0.0;
    for (const StepRecord& r : tail) ess_sum += r.total_ess;
    ev.tail_mean_ess = ess_sum / static_cast<double>(tail.size());

    const double band_lo = random_guess_level * (1.0 - opt.band_width);
    const double band_hi = random_guess_level * (1.0 + opt.band_width);
    const bool in_band = fit.mean >= band_lo && fit.mean <= band_hi;

    if (in_band && ev.tail_mean_ess >= opt.divergence_min_ess) {
        out.regime = Regime::Divergence;
        ev.reason = "loss sits in the random-guess band with random-walk-scale steps";
        return out;
    }
    if (fit.mean >= opt.divergence_level_fraction * random_guess_level &&
        ev.tail_mean_ess >= opt.divergence_memoryless_ess) {
        out.regime = Regime::Divergence;
        ev.reason = "memoryless movement at random-guess-scale loss";
        return out;
    }

    if (fit.mean < ev.convergence_threshold && fit.slope <= 0.0) {
        out.regime = Regime::Convergence;
        ev.reason = "tail loss below the convergence threshold and not increasing";
        return out;
    }

    const bool flat = std::abs(fit.slope) <= opt.slope_threshold ||
                      std::abs(fit.tstat) <= opt.plateau_max_tstat;
    const bool separated = fit.mean >= opt.sep_above_conv * ev.convergence_threshold &&
                           fit.mean <= opt.sep_below_band * band_lo;
    const bool bounded = fit.stddev <= opt.max_plateau_cv * fit.mean;
    if (flat && separated && bounded) {
        out.regime = Regime::ChaoticEquilibrium;
        ev.reason = "loss plateaued strictly between the minimum and random guess";
        return out;
    }

    const double fitted_drop = -fit.slope * fit.span_steps;
    if (fit.slope < 0.0 && fit.tstat <= opt.descent_tstat &&
        fitted_drop >= opt.descent_min_drop * ev.initial_loss) {
        out.regime = Regime::Convergence;
        ev.reason = "sustained descent; converging but not yet at low loss";
        return out;
    }

    out.regime = Regime::BoundaryUndetermined;
    ev.reason = "no regime signature matched";
    return out;
}

// Time averages of the per-group effective quantities over the tail window.
struct EquilibrationStats {
    std::size_t tail_records = 0;
    std::size_t tail_first_step = 0;
    std::vector<double> mean_elr;
    std::vector<double> mean_eff_grad;
    std::vector<double> mean_ess;
    std::vector<double> mean_ess_sq;
    double mean_total_ess = 0.0;
    // Dispersion of the time-averaged step sizes across groups.
    double ess_cv = 0.0;
};

inline EquilibrationStats equilibration_stats(const std::vector<StepRecord>& records,
                                              std::size_t tail_min_steps = 1000) {
    if (records.empty()) throw InsufficientDataError("empty trajectory");
    if (records.back().step < tail_min_steps)
        throw InsufficientDataError("equilibration statistics need a run of at least " +
                                    std::to_string(tail_min_steps) + " steps");
    const std::size_t begin = tail_begin_index(records, tail_min_steps);
    const std::size_t groups = records.back().group_elr.size();

    EquilibrationStats st;
    st.tail_records = records.size() - begin;
    st.tail_first_step = records[begin].step;
    st.mean_elr.assign(groups, 0.0);
    st.mean_eff_grad.assign(groups, 0.0);
    st.mean_ess.assign(groups, 0.0);
    st.mean_ess_sq.assign(groups, 0.0);

    for (std::size_t k = begin; k < records.size(); ++k) {
        const StepRecord& r = records[k];
        st.mean_total_ess += r.total_ess;
        for (std::size_t i = 0; i < groups; ++i) {
            st.mean_elr[i] += r.group_elr[i];
            st.mean_eff_grad[i] += r.group_eff_grad[i];
            st.mean_ess[i] += r.group_ess[i];
            st.mean_ess_sq[i] += r.group_ess[i] * r.group_ess[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(st.tail_records);
    st.mean_total_ess *= inv;
    for (std::size_t i = 0; i < groups; ++i) {
        st.mean_elr[i] *= inv;
        st.mean_eff_grad[i] *= inv;
        st.mean_ess[i] *= inv;
        st.mean_ess_sq[i] *= inv;
    }

    double m = 0.0;
    for (double e : st.mean_ess) m += e;
    m /= static_cast<double>(groups);
    double var = 0.0;
    for (double e : st.mean_ess) var += (e - m) * (e - m);
    var /= static_cast<double>(groups);
    st.ess_cv = m > 0.0 ? std::sqrt(var) / m : 0.0;
    return st;
}

// ---------------------------------------------------------------------------
// Landscape probes

struct InterpolationPoint {
    double tau = 0.0;
    double loss = 0.0;
};

struct InterpolationProbe {
    std::vector<InterpolationPoint> points;
    // Highest interior loss above the higher of the two endpoint losses.
    double barrier = 0.0;
};

// Loss along the projected linear path between two sphere points: each convex
// combination is rescaled back onto the sphere before evaluation.
inline InterpolationProbe linear_interpolation_probe(
    const SIObjective& objective, const GroupedParams& a, const GroupedParams& b,
    std::size_t num_points, const std::vector<std::vector<std::size_t>>& batches) {
    if (!(a.layout == b.layout) || a.radius != b.radius)
        throw IncompatibilityError("interpolation endpoints have different layouts or radii");
    if (num_points < 3)
        throw std::invalid_argument("linear_interpolation_probe: need at least 3 points");
    if (batches.empty())
        throw std::invalid_argument("linear_interpolation_probe: need at least one batch");

    const auto loss_at = [&](const GroupedParams& p) {
        double sum = 0.0;
        std::size_t total = 0;
        for (const auto& batch : batches) {
            const std::size_t weight = batch.empty() ? 1 : batch.size();
            sum += objective.value(p, batch) * static_cast<double>(weight);
            total += weight;
        }
        return sum / static_cast<double>(total);
    };

    InterpolationProbe probe;
    probe.points.resize(num_points);
    GroupedParams mix = a;
    for (std::size_t k = 0; k < num_points; ++k) {
        const double tau =
            static_cast<double>(k) / static_cast<double>(num_points - 1);
        for (std::size_t i = 0; i < mix.values.size(); ++i)
            mix.values[i] = (1.0 - tau) * a.values[i] + tau * b.values[i];
        if (norm(mix.values) < 1e-8 * a.radius)
            throw DegeneratePathError("interpolation path passes through the origin");
        probe.points[k] = {tau, loss_at(project_to_sphere(mix))};
    }

    double max_interior = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < num_points; ++k)
        max_interior = std::max(max_interior, probe.points[k].loss);
    const double max_endpoint = std::max(probe.points.front().loss, probe.points.back().loss);
    probe.barrier = std::max(0.0, max_interior - max_endpoint);
    return probe;
}

// Location and height of the most prominent interior rise of a series: the
// largest climb above the running minimum. Flat or monotone series score 0.
struct PeakInfo {
    std::size_t index = 0;
    double prominence = 0.0;
};

inline PeakInfo peak_prominence(std::span<const double> series) {
    PeakInfo peak;
    if (series.empty()) return peak;
    double running_min = series[0];
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double rise = series[i] - running_min;
        if (rise > peak.prominence) {
            peak.prominence = rise;
            peak.index = i;
        }
        running_min = std::min(running_min, series[i]);
    }
    return peak;
}

}  // namespace silab
