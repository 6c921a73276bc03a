#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "silab/checkpoint.hpp"
#include "silab/config.hpp"
#include "silab/csv.hpp"
#include "silab/instrumentation.hpp"
#include "silab/trainer.hpp"

namespace silab {

struct RunPaths {
    std::string dir;
    std::string config;
    std::string trajectory;
    std::string summary;
    std::string checkpoint;
};

struct RunOutcome {
    RunConfig config;
    bool diverged = false;
    std::size_t steps_done = 0;
    std::vector<StepRecord> records;
    std::optional<RegimeLabel> regime;
    std::optional<EquilibrationStats> equilibration;
    TrainStats stats;
    double random_guess_level = 0.0;
    double radius = 0.0;
    std::string parent_run_id;  // set for fine-tuned runs
    RunPaths paths;

    double final_train_loss() const {
        return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : records.back().train_loss;
    }
    double final_test_error() const {
        return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : records.back().test_error;
    }
    double tail_mean_loss() const {
        if (!regime) return std::numeric_limits<double>::quiet_NaN();
        return regime->evidence.tail_mean_loss;
    }
    double tail_sharpness() const {
        if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
        const std::size_t begin = tail_begin_index(records, 1000);
        double sum = 0.0;
        for (std::size_t i = begin; i < records.size(); ++i)
            sum += records[i].sharpness_mean_grad_norm;
        return sum / static_cast<double>(records.size() - begin);
    }
};

inline double get_rate(const RunConfig& cfg) {
    switch (cfg.optimizer.mode) {
        case OptimizerMode::ProjectedSphere: return cfg.optimizer.elr;
        case OptimizerMode::WholeSpaceWd: return cfg.optimizer.lr;
        case OptimizerMode::RandomWalk: return cfg.optimizer.reference_step_size;
    }
    return 0.0;
}

inline void set_rate(RunConfig& cfg, double rate) {
    switch (cfg.optimizer.mode) {
        case OptimizerMode::ProjectedSphere: cfg.optimizer.elr = rate; break;
        case OptimizerMode::WholeSpaceWd: cfg.optimizer.lr = rate; break;
        case OptimizerMode::RandomWalk: cfg.optimizer.reference_step_size = rate; break;
    }
}

// Sweep grid {1, 2, 5} x 10^-k for k in [k_min, k_max], ascending.
inline std::vector<double> paper_grid(int k_min, int k_max) {
    if (k_min > k_max) throw ConfigError("grid", "k_min must not exceed k_max");
    std::vector<double> rates;
    for (int k = k_max; k >= k_min; --k) {
        const double base = std::pow(10.0, -k);
        rates.push_back(base);
        rates.push_back(2.0 * base);
        rates.push_back(5.0 * base);
    }
    return rates;
}

namespace detail {

inline std::string compact_rate(double rate) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    return buf;
}

inline json json_finite(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline json summary_json(const RunOutcome& out) {
    json j;
    j["schema_version"] = 1;
    j["run_id"] = out.config.run_id;
    j["status"] = out.diverged ? "diverged" : "completed";
    j["steps_done"] = out.steps_done;
    j["random_guess_level"] = out.random_guess_level;
    j["radius"] = out.radius;
    j["final"] = {{"train_loss", json_finite(out.final_train_loss())},
                  {"test_error", json_finite(out.final_test_error())}};

    if (out.regime) {
        const RegimeEvidence& ev = out.regime->evidence;
        j["regime"] = {{"label", regime_name(out.regime->regime)},
                       {"evidence",
                        {{"initial_loss", json_finite(ev.initial_loss)},
                         {"tail_mean_loss", json_finite(ev.tail_mean_loss)},
                         {"tail_std_loss", json_finite(ev.tail_std_loss)},
                         {"tail_slope", json_finite(ev.tail_slope)},
                         {"tail_slope_tstat", json_finite(ev.tail_slope_tstat)},
                         {"tail_mean_ess", json_finite(ev.tail_mean_ess)},
                         {"random_guess_level", json_finite(ev.random_guess_level)},
                         {"convergence_threshold", json_finite(ev.convergence_threshold)},
                         {"diverged", ev.diverged},
                         {"reason", ev.reason}}}};
    } else {
        j["regime"] = nullptr;
    }

    if (out.equilibration) {
        const EquilibrationStats& eq = *out.equilibration;
        j["equilibration"] = {{"tail_records", eq.tail_records},
                              {"tail_first_step", eq.tail_first_step},
                              {"mean_elr", eq.mean_elr},
                              {"mean_eff_grad", eq.mean_eff_grad},
                              {"mean_ess", eq.mean_ess},
                              {"mean_ess_sq", eq.mean_ess_sq},
                              {"mean_total_ess", eq.mean_total_ess},
                              {"ess_cv", json_finite(eq.ess_cv)}};
    } else {
        j["equilibration"] = nullptr;
    }

    json geometry;
    geometry["max_norm_drift"] = json_finite(out.stats.max_norm_drift);
    if (std::isfinite(out.stats.min_pre_projection_ratio))
        geometry["min_pre_projection_ratio"] = out.stats.min_pre_projection_ratio;
    geometry["max_orthogonality"] = json_finite(out.stats.max_orthogonality);
    geometry["mean_adjacent_increment_abs_cos"] =
        json_finite(out.stats.mean_increment_abs_cos);
    j["geometry"] = geometry;

    if (out.config.is_toy() && out.config.optimizer.mode == OptimizerMode::ProjectedSphere) {
        const ToySystem sys(out.config.objective.alphas);
        const double elr = out.config.optimizer.elr;
        const ToyOracle oracle = oracle_for(sys, elr);
        json comparison;
        comparison["convergence_threshold"] = oracle.convergence_threshold;
        comparison["predicts_convergence"] = oracle.predicts_convergence;
        comparison["equilibrium_elrs"] = oracle.equilibrium_elrs;
        comparison["equilibrium_ess_sq"] = oracle.equilibrium_ess_sq;
        comparison["equilibrium_value"] = oracle.equilibrium_value;
        comparison["asymptotic_chaos_value"] = oracle.asymptotic_chaos_value;
        if (out.equilibration && !oracle.predicts_convergence) {
            json measured;
            measured["tail_mean_elr"] = out.equilibration->mean_elr;
            measured["tail_mean_ess_sq"] = out.equilibration->mean_ess_sq;
            measured["tail_mean_loss"] = json_finite(out.tail_mean_loss());
            json rel_err = json::array();
            for (std::size_t i = 0; i < oracle.equilibrium_elrs.size(); ++i)
                rel_err.push_back(std::abs(out.equilibration->mean_elr[i] -
                                           oracle.equilibrium_elrs[i]) /
                                  oracle.equilibrium_elrs[i]);
            measured["elr_rel_error"] = rel_err;
            comparison["measured"] = measured;
        }
        j["toy_oracle"] = comparison;
    }

    if (!out.parent_run_id.empty()) {
        j["fine_tune"] = {{"parent_run_id", out.parent_run_id},
                          {"rate", get_rate(out.config)}};
    }

    j["files"] = {{"config", "config.json"},
                  {"trajectory", "trajectory.csv"},
                  {"checkpoint", "checkpoint.json"}};
    return j;
}

inline RunPaths make_paths(const std::string& dir) {
    RunPaths paths;
    paths.dir = dir;
    paths.config = dir + "/config.json";
    paths.trajectory = dir + "/trajectory.csv";
    paths.summary = dir + "/summary.json";
    paths.checkpoint = dir + "/checkpoint.json";
    return paths;
}

inline void analyze(RunOutcome& out) {
    try {
        out.regime = classify_regime(out.records, out.random_guess_level, out.diverged);
    } catch (const InsufficientDataError&) {
        if (out.diverged) {
            RegimeLabel label;
            label.regime = Regime::Divergence;
            label.evidence.diverged = true;
            label.evidence.reason = "non-finite values encountered";
            label.evidence.random_guess_level = out.random_guess_level;
            out.regime = label;
        }
    }
    if (!out.diverged) {
        try {
            out.equilibration = equilibration_stats(out.records);
        } catch (const InsufficientDataError&) {
        }
    }
}

inline void write_outputs(RunOutcome& out, const TrainResult& result,
                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    out.paths = make_paths(out_dir);

    std::ofstream cfg_file(out.paths.config, std::ios::binary);
    cfg_file << serialize_config(out.config);
    cfg_file.close();

    const std::size_t groups =
        out.records.empty()
            ? (out.config.is_toy() ? out.config.objective.alphas.size()
                                   : out.config.objective.hidden_dims.size())
            : out.records.back().group_rho.size();
    write_trajectory_csv(out.paths.trajectory, out.records, groups);

    Checkpoint cp;
    cp.config = out.config;
    cp.step = result.steps_done;
    cp.radius = result.final_params.radius;
    cp.values = result.final_params.values;
    cp.prev_values = result.prev_values;
    cp.batch_rng = result.batch_rng_state;
    cp.optimizer_rng = result.optimizer_rng_state;
    save_checkpoint(out.paths.checkpoint, cp);

    std::ofstream summary_file(out.paths.summary, std::ios::binary);
    summary_file << summary_json(out).dump(2) << "\n";
}

}  // namespace detail

// Runs one configuration and writes config, trajectory CSV, summary JSON, and
// checkpoint into `out_dir`. Divergence is a recorded outcome, not a failure.
inline RunOutcome execute_run(RunConfig cfg, const std::string& out_dir,
                              const std::string& parent_run_id = "") {
    if (!(get_rate(cfg) > 0.0))
        throw ConfigError("optimizer.rate", "must be positive");
    const BuiltObjective built = build_objective(cfg);

    RunOutcome out;
    out.config = cfg;
    out.random_guess_level = built.random_guess_level;
    out.radius = built.initial.radius;
    out.parent_run_id = parent_run_id;

    TrainResult result = train_run(cfg, built, built.initial, 0, Rng(cfg.seeds.batch),
                                   Rng(cfg.seeds.optimizer));
    out.diverged = result.diverged;
    out.steps_done = result.steps_done;
    out.records = std::move(result.records);
    out.stats = result.stats;

    detail::analyze(out);
    detail::write_outputs(out, result, out_dir);
    return out;
}

// Continues a checkpointed run, optionally at a different rate (any
// non-positive `new_rate` keeps the checkpointed one). `extra` is in steps
// for toy runs and in epochs for network runs.
inline RunOutcome fine_tune(const Checkpoint& cp, double new_rate, std::size_t extra,
                            const std::string& out_dir, const std::string& run_id = "") {
    RunConfig cfg = cp.config;
    const std::string parent = cfg.run_id;
    cfg.run_id = run_id.empty() ? parent + "-ft" : run_id;
    if (new_rate > 0.0) set_rate(cfg, new_rate);

    const BuiltObjective built = build_objective(cfg);
    if (cp.values.size() != built.initial.dim())
        throw IncompatibilityError("checkpoint parameter count does not match the objective");
    if (cfg.is_toy()) {
        cfg.steps = cp.step + extra;
    } else {
        if (cp.step % built.batches_per_epoch != 0)
            throw IncompatibilityError("network checkpoint is not at an epoch boundary");
        cfg.epochs = cp.step / built.batches_per_epoch + extra;
    }

    GroupedParams start(cp.values, built.initial.layout, cp.radius);

    RunOutcome out;
    out.config = cfg;
    out.random_guess_level = built.random_guess_level;
    out.radius = cp.radius;
    out.parent_run_id = parent;

    TrainResult result =
        train_run(cfg, built, std::move(start), cp.step, Rng::deserialize(cp.batch_rng),
                  Rng::deserialize(cp.optimizer_rng), cp.prev_values);
    out.diverged = result.diverged;
    out.steps_done = result.steps_done;
    out.records = std::move(result.records);
    out.stats = result.stats;

    detail::analyze(out);
    detail::write_outputs(out, result, out_dir);
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepEntry {
    double rate = 0.0;
    std::optional<RunOutcome> outcome;
    std::string error;  // non-empty when the run failed outright
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::string aggregate_csv;
};

// One run per rate. Seeds are shared across the grid so runs differ only in
// the rate; `decouple_seeds` gives every run its own streams instead.
inline SweepResult sweep(const RunConfig& base, std::vector<double> rates,
                         const std::string& out_root, std::size_t workers = 1,
                         bool decouple_seeds = false) {
    if (rates.empty()) throw ConfigError("sweep.rates", "grid must be non-empty");
    std::sort(rates.begin(), rates.end());

    SweepResult result;
    result.entries.resize(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) result.entries[i].rate = rates[i];

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rates.size()) return;
            RunConfig cfg = base;
            set_rate(cfg, rates[i]);
            cfg.run_id = base.run_id + "-" + detail::compact_rate(rates[i]);
            if (decouple_seeds) {
                const std::uint64_t bump = 1000003ull * (i + 1);
                cfg.seeds.init += bump;
                cfg.seeds.data += bump;
                cfg.seeds.batch += bump;
                cfg.seeds.optimizer += bump;
            }
            const std::string dir = out_root + "/rate_" + detail::compact_rate(rates[i]);
            try {
                result.entries[i].outcome = execute_run(cfg, dir);
            } catch (const std::exception& e) {
                result.entries[i].error = e.what();
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, rates.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::filesystem::create_directories(out_root);
    result.aggregate_csv = out_root + "/aggregate.csv";
    std::ofstream agg(result.aggregate_csv, std::ios::binary);
    agg << "rate,final_loss,final_test_error,tail_sharpness,regime\n";
    for (const SweepEntry& entry : result.entries) {
        agg << format_double(entry.rate) << ",";
        if (entry.outcome) {
            const RunOutcome& out = *entry.outcome;
            agg << format_double(out.final_train_loss()) << ","
                << format_double(out.final_test_error()) << ","
                << format_double(out.tail_sharpness()) << ","
                << (out.regime ? regime_name(out.regime->regime) : "unclassified");
        } else {
            agg << ",,,failed";
        }
        agg << "\n";
    }
    return result;
}

// ---------------------------------------------------------------------------
// Probes

struct InterpolationProbeReport {
    InterpolationProbe probe;
    double loss_a = 0.0;
    double loss_b = 0.0;
    std::string csv_path;
    std::string json_path;
};

// Loss along the projected linear path between two checkpointed solutions.
inline InterpolationProbeReport probe_interpolate(const Checkpoint& a, const Checkpoint& b,
                                                  std::size_t num_points,
                                                  const std::string& out_dir) {
    const BuiltObjective built = build_objective(a.config);
    if (a.values.size() != b.values.size())
        throw IncompatibilityError("checkpoints have different parameter counts");
    if (a.radius != b.radius)
        throw IncompatibilityError("checkpoints live on different spheres");

    GroupedParams pa(a.values, built.initial.layout, a.radius);
    GroupedParams pb(b.values, built.initial.layout, b.radius);

    std::vector<std::vector<std::size_t>> chunks;
    if (built.dataset != nullptr)
        chunks = SiMlp::evaluation_chunks(evaluation_order(built.dataset->train_indices),
                                          a.config.batch_size);
    else
        chunks.push_back({});

    InterpolationProbeReport report;
    report.probe = linear_interpolation_probe(*built.objective, pa, pb, num_points, chunks);
    report.loss_a = report.probe.points.front().loss;
    report.loss_b = report.probe.points.back().loss;

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    report.csv_path = out_dir + "/interpolation.csv";
    std::ofstream csv(report.csv_path, std::ios::binary);
    csv << "tau,loss\n";
    for (const InterpolationPoint& p : report.probe.points)
        csv << format_double(p.tau) << "," << format_double(p.loss) << "\n";
    csv.close();

    report.json_path = out_dir + "/probe.json";
    json j;
    j["kind"] = "interpolate";
    j["num_points"] = num_points;
    j["barrier"] = report.probe.barrier;
    j["loss_a"] = report.loss_a;
    j["loss_b"] = report.loss_b;
    std::ofstream out(report.json_path, std::ios::binary);
    out << j.dump(2) << "\n";
    return report;
}

struct RandomWalkProbeReport {
    double reference_step_size = 0.0;
    RunOutcome walk;
    // Tail means of the adjacent-iterate cosine distance.
    double walk_adjacent_cosine = 0.0;
    double paired_adjacent_cosine = 0.0;
    double walk_tail_mean_loss = 0.0;
    std::string json_path;
};

// Mean pre-projection step length of a recorded run: rho * mean effective
// step size over the tail.
inline double reference_step_from_records(const std::vector<StepRecord>& records, double radius,
                                          std::size_t tail_min_steps = 1000) {
    const std::size_t begin = tail_begin_index(records, tail_min_steps);
    double sum = 0.0;
    for (std::size_t i = begin; i < records.size(); ++i) sum += records[i].total_ess;
    return radius * sum / static_cast<double>(records.size() - begin);
}

inline double tail_mean_field(const std::vector<StepRecord>& records,
                              double StepRecord::*field, std::size_t tail_min_steps = 1000) {
    const std::size_t begin = tail_begin_index(records, tail_min_steps);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = begin; i < records.size(); ++i) {
        const double v = records[i].*field;
        if (std::isfinite(v)) {
            sum += v;
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

// Reruns a recorded run as a pure random walk with matched step length and
// reports the movement/loss comparison.
inline RandomWalkProbeReport probe_random_walk(const Checkpoint& paired,
                                               const std::vector<StepRecord>& paired_records,
                                               const std::string& out_dir) {
    RandomWalkProbeReport report;
    report.reference_step_size = reference_step_from_records(paired_records, paired.radius);

    RunConfig cfg = paired.config;
    cfg.run_id = cfg.run_id + "-rw";
    cfg.optimizer = OptimizerConfig{};
    cfg.optimizer.mode = OptimizerMode::RandomWalk;
    cfg.optimizer.reference_step_size = report.reference_step_size;

    report.walk = execute_run(cfg, out_dir + "/walk");
    report.walk_adjacent_cosine =
        tail_mean_field(report.walk.records, &StepRecord::adjacent_cosine_distance);
    report.paired_adjacent_cosine =
        tail_mean_field(paired_records, &StepRecord::adjacent_cosine_distance);
    report.walk_tail_mean_loss = tail_mean_field(report.walk.records, &StepRecord::train_loss);

    json j;
    j["kind"] = "random-walk";
    j["reference_step_size"] = report.reference_step_size;
    j["walk_tail_mean_loss"] = detail::json_finite(report.walk_tail_mean_loss);
    j["walk_adjacent_cosine"] = detail::json_finite(report.walk_adjacent_cosine);
    j["paired_adjacent_cosine"] = detail::json_finite(report.paired_adjacent_cosine);
    j["walk_mean_increment_abs_cos"] =
        detail::json_finite(report.walk.stats.mean_increment_abs_cos);
    j["random_guess_level"] = report.walk.random_guess_level;

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    report.json_path = out_dir + "/probe.json";
    std::ofstream out(report.json_path, std::ios::binary);
    out << j.dump(2) << "\n";
    return report;
}

struct InvarianceAuditReport {
    double max_value_deviation = 0.0;
    double max_gradient_deviation = 0.0;
    bool pass = false;
    std::string json_path;
};

// Scale-invariance audit of a checkpointed model: every group and the whole
// vector, over a fixed scale ladder.
inline InvarianceAuditReport probe_invariance_audit(const Checkpoint& cp,
                                                    const std::string& out_dir) {
    const BuiltObjective built = build_objective(cp.config);
    GroupedParams params(cp.values, built.initial.layout, cp.radius);

    std::vector<std::size_t> batch;
    if (built.dataset != nullptr) {
        const auto chunks =
            SiMlp::evaluation_chunks(evaluation_order(built.dataset->train_indices),
                                     cp.config.batch_size);
        batch = chunks.front();
    }

    InvarianceAuditReport report;
    for (double c : {0.1, 0.5, 2.0, 3.7}) {
        for (std::size_t g = 0; g < params.num_groups(); ++g) {
            const InvarianceReport r = check_scale_invariance(*built.objective, params, g, c, batch);
            report.max_value_deviation = std::max(report.max_value_deviation, r.value_deviation);
            report.max_gradient_deviation =
                std::max(report.max_gradient_deviation, r.gradient_deviation);
        }
        const InvarianceReport total =
            check_total_scale_invariance(*built.objective, params, c, batch);
        report.max_value_deviation = std::max(report.max_value_deviation, total.value_deviation);
        report.max_gradient_deviation =
            std::max(report.max_gradient_deviation, total.gradient_deviation);
    }
    report.pass =
        report.max_value_deviation <= 1e-9 && report.max_gradient_deviation <= 1e-8;

    json j;
    j["kind"] = "invariance-audit";
    j["max_value_deviation"] = report.max_value_deviation;
    j["max_gradient_deviation"] = report.max_gradient_deviation;
    j["value_tolerance"] = 1e-9;
    j["gradient_tolerance"] = 1e-8;
    j["pass"] = report.pass;

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    report.json_path = out_dir + "/probe.json";
    std::ofstream out(report.json_path, std::ios::binary);
    out << j.dump(2) << "\n";
    return report;
}

}  // namespace silab
