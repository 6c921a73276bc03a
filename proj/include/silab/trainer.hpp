#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "silab/config.hpp"
#include "silab/dataset.hpp"
#include "silab/elr.hpp"
#include "silab/idx.hpp"
#include "silab/instrumentation.hpp"
#include "silab/invariance.hpp"
#include "silab/mlp.hpp"
#include "silab/optimizer.hpp"
#include "silab/toy.hpp"

namespace silab {

// Objective materialized from a run configuration, together with everything
// the run loop needs to know about it.
struct BuiltObjective {
    std::shared_ptr<SIObjective> objective;
    std::shared_ptr<const Dataset> dataset;  // null for data-free objectives
    GroupedParams initial;
    // Loss of an uninformed predictor; used by the regime classifier.
    double random_guess_level = 0.0;
    std::size_t batches_per_epoch = 1;
};

inline Dataset build_dataset(const ObjectiveConfig& cfg, const SeedsConfig& seeds) {
    Dataset ds;
    if (cfg.dataset.kind == DatasetKind::Blobs) {
        ds = make_blobs(cfg.num_classes, cfg.dataset.blobs.samples_per_class,
                        cfg.dataset.blobs.input_dim, cfg.dataset.blobs.separation, seeds.data);
    } else {
        ds = load_idx(cfg.dataset.idx.train_images, cfg.dataset.idx.train_labels);
        if (!cfg.dataset.idx.test_images.empty()) {
            const Dataset test =
                load_idx(cfg.dataset.idx.test_images, cfg.dataset.idx.test_labels);
            ds = combine_idx_splits(ds, test);
        }
    }
    if (cfg.label_noise_fraction > 0.0)
        ds = inject_label_noise(ds, cfg.label_noise_fraction, seeds.data + 0x9e3779b9);
    return ds;
}

inline BuiltObjective build_objective(const RunConfig& cfg) {
    BuiltObjective built;
    if (cfg.is_toy()) {
        const ToySystem sys(cfg.objective.alphas);
        auto objective = std::make_shared<ToyObjective>(sys);
        Rng init_rng(cfg.seeds.init);
        built.initial = random_sphere_point(objective->layout(), 1.0, init_rng);
        built.random_guess_level = 0.5 * sys.alpha_sum();
        built.batches_per_epoch = 1;
        built.objective = std::move(objective);
        return built;
    }

    auto data = std::make_shared<const Dataset>(build_dataset(cfg.objective, cfg.seeds));
    SiMlpSpec spec;
    spec.input_dim = cfg.objective.input_dim;
    spec.hidden_dims = cfg.objective.hidden_dims;
    spec.num_classes = cfg.objective.num_classes;
    spec.bn_epsilon = cfg.objective.bn_epsilon;
    spec.last_layer_norm = cfg.objective.last_layer_norm;
    spec.seed = cfg.seeds.init;
    auto net = std::make_shared<SiMlp>(spec, data);
    built.initial = net->initial_params();
    built.random_guess_level = std::log(static_cast<double>(spec.num_classes));
    built.batches_per_epoch =
        SiMlp::evaluation_chunks(data->train_indices, cfg.batch_size).size();
    built.dataset = std::move(data);
    built.objective = std::move(net);
    return built;
}

inline std::size_t total_steps_for(const RunConfig& cfg, const BuiltObjective& built) {
    return cfg.is_toy() ? cfg.steps : cfg.epochs * built.batches_per_epoch;
}

inline std::size_t log_cadence_for(const RunConfig& cfg, const BuiltObjective& built) {
    if (cfg.log_every != 0) return cfg.log_every;
    return cfg.is_toy() ? 10 : built.batches_per_epoch;
}

// Geometry and movement statistics accumulated over every optimizer step.
struct TrainStats {
    double max_norm_drift = 0.0;
    double min_pre_projection_ratio = std::numeric_limits<double>::infinity();
    double max_orthogonality = 0.0;  // at logged steps
    double mean_increment_abs_cos = std::numeric_limits<double>::quiet_NaN();
    std::size_t increment_cos_count = 0;
};

struct TrainResult {
    std::vector<StepRecord> records;
    GroupedParams final_params;
    std::vector<double> prev_values;  // parameters one step before the end
    std::size_t steps_done = 0;
    bool diverged = false;
    TrainStats stats;
    std::string batch_rng_state;
    std::string optimizer_rng_state;
};

namespace detail {

// Full-train loss and gradient via fixed-order chunked passes; the same pass
// also collects the per-batch gradient norms for the sharpness proxies.
struct FullBatchEval {
    double loss = 0.0;
    std::vector<double> gradient;
    double mean_batch_grad_norm = 0.0;     // effective (times parameter norm)
    double mean_batch_grad_norm_sq = 0.0;  // effective
};

inline FullBatchEval full_train_eval(const SIObjective& objective, const GroupedParams& params,
                                     const std::vector<std::vector<std::size_t>>& chunks) {
    FullBatchEval out;
    out.gradient.assign(params.dim(), 0.0);
    std::vector<double> grad;
    double total_weight = 0.0;
    const double scale = params.norm();
    for (const auto& chunk : chunks) {
        const double w = chunk.empty() ? 1.0 : static_cast<double>(chunk.size());
        out.loss += objective.value_and_gradient(params, grad, chunk) * w;
        axpy(w, grad, out.gradient);
        total_weight += w;
        const double g = norm(grad) * scale;
        out.mean_batch_grad_norm += g;
        out.mean_batch_grad_norm_sq += g * g;
    }
    out.loss /= total_weight;
    scale_in_place(out.gradient, 1.0 / total_weight);
    out.mean_batch_grad_norm /= static_cast<double>(chunks.size());
    out.mean_batch_grad_norm_sq /= static_cast<double>(chunks.size());
    return out;
}

}  // namespace detail

using StepRecordCallback = std::function<void(const StepRecord&)>;

// Runs the configured optimizer from `start` at step `start_step` up to the
// configured total. Pure in everything except the supplied RNG streams; a
// resumed run with restored streams continues the interrupted trajectory
// exactly.
inline TrainResult train_run(const RunConfig& cfg, const BuiltObjective& built,
                             GroupedParams start, std::size_t start_step, Rng batch_rng,
                             Rng optimizer_rng, std::vector<double> prev_values = {},
                             const StepRecordCallback& on_record = nullptr) {
    const SIObjective& objective = *built.objective;
    const std::size_t total_steps = total_steps_for(cfg, built);
    const std::size_t cadence = log_cadence_for(cfg, built);

    // Fixed-order evaluation chunks for logging passes; one empty chunk for
    // full-batch objectives.
    std::vector<std::vector<std::size_t>> eval_chunks;
    if (built.dataset != nullptr)
        eval_chunks = SiMlp::evaluation_chunks(evaluation_order(built.dataset->train_indices),
                                               cfg.batch_size);
    else
        eval_chunks.push_back({});

    TrainResult result;
    result.final_params = std::move(start);
    result.prev_values = std::move(prev_values);
    result.steps_done = start_step;

    GroupedParams& params = result.final_params;
    const double rho = params.radius;

    std::vector<std::size_t> epoch_order;
    std::vector<std::vector<std::size_t>> epoch_batches;
    std::size_t batch_in_epoch = 0;
    if (built.dataset != nullptr) {
        epoch_order = built.dataset->train_indices;
        if (start_step % built.batches_per_epoch != 0)
            throw IncompatibilityError("network runs can only start at epoch boundaries");
    }

    double increment_cos_sum = 0.0;
    std::vector<double> prev_increment;

    const auto base_rate = [&]() -> double {
        switch (cfg.optimizer.mode) {
            case OptimizerMode::ProjectedSphere: return cfg.optimizer.elr;
            case OptimizerMode::WholeSpaceWd: return cfg.optimizer.lr;
            case OptimizerMode::RandomWalk: return cfg.optimizer.reference_step_size;
        }
        return 0.0;
    }();

    const auto log_record = [&](std::size_t step) {
        const detail::FullBatchEval eval =
            detail::full_train_eval(objective, params, eval_chunks);
        StepRecord rec;
        rec.step = step;
        rec.train_loss = eval.loss;
        if (objective.has_test_metrics())
            rec.test_error = objective.test_error(params, cfg.batch_size);

        // Rate the report is computed for: the scheduled rate in gradient
        // modes; for the random walk, the rate that would reproduce the step
        // length with the measured gradient.
        const double mult = schedule_value(cfg.optimizer.schedule, step, base_rate);
        double lr = 0.0;
        switch (cfg.optimizer.mode) {
            case OptimizerMode::ProjectedSphere:
                lr = cfg.optimizer.elr * mult * rho * rho;
                break;
            case OptimizerMode::WholeSpaceWd:
                lr = cfg.optimizer.lr * mult;
                break;
            case OptimizerMode::RandomWalk:
                lr = cfg.optimizer.reference_step_size * mult /
                     std::max(norm(eval.gradient), 1e-300);
                break;
        }
        if (lr > 0.0) {
            const ElrReport report = compute_elr_report(params, eval.gradient, lr);
            rec.total_elr = report.total_elr;
            rec.total_eff_grad = report.total_eff_grad;
            rec.total_ess = report.total_ess;
            rec.group_rho = report.group_rho;
            rec.group_elr = report.group_elr;
            rec.group_eff_grad = report.group_eff_grad;
            rec.group_ess = report.group_ess;
        } else {
            // A schedule can drive the rate to zero (cosine at the horizon);
            // geometry fields are still well defined.
            rec.group_rho = params.group_norms();
            rec.group_elr.assign(params.num_groups(), 0.0);
            rec.group_eff_grad.resize(params.num_groups());
            for (std::size_t i = 0; i < params.num_groups(); ++i)
                rec.group_eff_grad[i] =
                    norm(params.layout.group(std::span<const double>(eval.gradient), i)) *
                    rec.group_rho[i];
            rec.group_ess.assign(params.num_groups(), 0.0);
        }

        rec.sharpness_mean_grad_norm = eval.mean_batch_grad_norm;
        rec.grad_cov_trace = eval.mean_batch_grad_norm_sq;
        if (!result.prev_values.empty())
            rec.adjacent_cosine_distance = cosine_distance(result.prev_values, params.values);

        result.stats.max_orthogonality =
            std::max(result.stats.max_orthogonality,
                     max_group_orthogonality(params, eval.gradient));

        if (!std::isfinite(eval.loss)) result.diverged = true;
        result.records.push_back(rec);
        if (on_record) on_record(result.records.back());
    };

    std::vector<double> grad;
    for (std::size_t step = start_step; step <= total_steps; ++step) {
        if (step == start_step || step % cadence == 0 || step == total_steps) {
            try {
                log_record(step);
            } catch (const DegeneratePointError&) {
                // A group collapsed to numerical zero: the sphere dynamics are
                // over; record the run as diverged.
                result.diverged = true;
                result.steps_done = step;
            }
        }
        if (result.diverged || step == total_steps) break;

        std::span<const std::size_t> batch;
        if (built.dataset != nullptr) {
            if (step % built.batches_per_epoch == 0) {
                // Each epoch's order is a fresh shuffle of the identity list,
                // so a restored RNG stream reproduces it without needing the
                // previous permutation.
                epoch_order = built.dataset->train_indices;
                batch_rng.shuffle(epoch_order);
                epoch_batches = SiMlp::evaluation_chunks(epoch_order, cfg.batch_size);
                batch_in_epoch = 0;
            }
            batch = epoch_batches[batch_in_epoch];
            ++batch_in_epoch;
        }

        const double mult = schedule_value(cfg.optimizer.schedule, step, base_rate);
        std::vector<double> increment = params.values;
        try {
            switch (cfg.optimizer.mode) {
                case OptimizerMode::ProjectedSphere: {
                    objective.value_and_gradient(params, grad, batch);
                    const double lr = cfg.optimizer.elr * mult * rho * rho;
                    if (lr > 0.0) {
                        double pre_norm = 0.0;
                        GroupedParams next = projected_sgd_step(params, grad, lr, &pre_norm);
                        result.stats.min_pre_projection_ratio =
                            std::min(result.stats.min_pre_projection_ratio, pre_norm / rho);
                        result.stats.max_norm_drift =
                            std::max(result.stats.max_norm_drift,
                                     std::abs(next.norm() - rho) / rho);
                        result.prev_values = std::move(params.values);
                        params.values = std::move(next.values);
                    } else {
                        result.prev_values = params.values;
                    }
                    break;
                }
                case OptimizerMode::WholeSpaceWd: {
                    objective.value_and_gradient(params, grad, batch);
                    const double lr = cfg.optimizer.lr * mult;
                    if (lr > 0.0) {
                        GroupedParams next =
                            whole_space_wd_step(params, grad, lr, cfg.optimizer.weight_decay);
                        result.prev_values = std::move(params.values);
                        params.values = std::move(next.values);
                    } else {
                        result.prev_values = params.values;
                    }
                    break;
                }
                case OptimizerMode::RandomWalk: {
                    const double step_size = cfg.optimizer.reference_step_size * mult;
                    if (step_size > 0.0) {
                        GroupedParams next = random_walk_step(params, step_size, optimizer_rng);
                        result.stats.max_norm_drift =
                            std::max(result.stats.max_norm_drift,
                                     std::abs(next.norm() - rho) / rho);
                        result.prev_values = std::move(params.values);
                        params.values = std::move(next.values);
                    } else {
                        result.prev_values = params.values;
                    }
                    break;
                }
            }
        } catch (const DivergenceError&) {
            result.diverged = true;
            result.steps_done = step;
            break;
        } catch (const DegeneratePointError&) {
            result.diverged = true;
            result.steps_done = step;
            break;
        }

        if (!all_finite(params.values)) {
            result.diverged = true;
            result.steps_done = step;
            break;
        }

        for (std::size_t i = 0; i < increment.size(); ++i)
            increment[i] = params.values[i] - increment[i];
        if (norm(increment) > 0.0) {
            if (!prev_increment.empty()) {
                increment_cos_sum += std::abs(1.0 - cosine_distance(prev_increment, increment));
                ++result.stats.increment_cos_count;
            }
            prev_increment = std::move(increment);
        }

        result.steps_done = step + 1;
    }

    if (result.diverged && (result.records.empty() || result.records.back().step != result.steps_done)) {
        // Final snapshot of a diverged run, so the partial trajectory shows
        // where it broke; fields that need finite values may be NaN.
        StepRecord rec;
        rec.step = result.steps_done;
        rec.train_loss = std::numeric_limits<double>::quiet_NaN();
        rec.group_rho.assign(params.num_groups(), std::numeric_limits<double>::quiet_NaN());
        rec.group_elr = rec.group_rho;
        rec.group_eff_grad = rec.group_rho;
        rec.group_ess = rec.group_rho;
        if (all_finite(params.values)) {
            try {
                rec.train_loss = objective.value(params, {});
            } catch (const std::exception&) {
            }
        }
        result.records.push_back(rec);
        if (on_record) on_record(result.records.back());
    }

    if (result.stats.increment_cos_count > 0)
        result.stats.mean_increment_abs_cos =
            increment_cos_sum / static_cast<double>(result.stats.increment_cos_count);
    result.batch_rng_state = batch_rng.serialize();
    result.optimizer_rng_state = optimizer_rng.serialize();
    return result;
}

}  // namespace silab
