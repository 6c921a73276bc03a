// Command-line front end: single runs, rate sweeps, fine-tuning from
// checkpoints, landscape/movement probes, and re-classification of recorded
// trajectories. All behavior flows from the config file and flags.

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "silab/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

silab::RunConfig load_config(const std::string& path, const std::string& out_override,
                             std::vector<std::pair<std::string, std::uint64_t>> seed_overrides) {
    silab::RunConfig cfg = silab::load_config_file(path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    for (const auto& [name, value] : seed_overrides) {
        if (name == "init") cfg.seeds.init = value;
        else if (name == "data") cfg.seeds.data = value;
        else if (name == "batch") cfg.seeds.batch = value;
        else if (name == "optimizer") cfg.seeds.optimizer = value;
        else throw silab::ConfigError("seeds." + name, "unknown seed stream");
    }
    if (cfg.output_dir.empty())
        throw silab::ConfigError("config.output_dir", "set it in the config or pass --out");
    return cfg;
}

void print_outcome(const silab::RunOutcome& out) {
    std::printf("run %s: %s after %zu steps\n", out.config.run_id.c_str(),
                out.diverged ? "diverged" : "completed", out.steps_done);
    if (out.regime)
        std::printf("  regime: %s (%s)\n", silab::regime_name(out.regime->regime),
                    out.regime->evidence.reason.c_str());
    std::printf("  final train loss: %.6g\n", out.final_train_loss());
    if (std::isfinite(out.final_test_error()))
        std::printf("  final test error: %.6g\n", out.final_test_error());
    std::printf("  outputs: %s\n", out.paths.dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scale-invariant training laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::pair<std::string, std::uint64_t>> seed_overrides;

    // run
    auto* cmd_run = app.add_subcommand("run", "execute a single configured run");
    cmd_run->add_option("--config", config_path, "run configuration file")->required();
    cmd_run->add_option("--out", out_dir, "output directory (overrides the config)");
    cmd_run->add_option("--seed", seed_overrides,
                        "override one seed stream, e.g. --seed init 7")
        ->expected(-1);

    // sweep
    std::vector<double> sweep_rates;
    std::vector<int> grid_range;
    std::size_t workers = 1;
    bool decouple_seeds = false;
    auto* cmd_sweep = app.add_subcommand("sweep", "one run per rate in a grid");
    cmd_sweep->add_option("--config", config_path, "base configuration file")->required();
    cmd_sweep->add_option("--out", out_dir, "output root directory")->required();
    cmd_sweep->add_option("--rates", sweep_rates, "explicit rate grid");
    cmd_sweep->add_option("--paper-grid", grid_range,
                          "expands to {1,2,5}x10^-k for k in [KMIN, KMAX]")
        ->expected(2);
    cmd_sweep->add_option("--workers", workers, "parallel runs");
    cmd_sweep->add_flag("--decouple-seeds", decouple_seeds,
                        "give every run its own seed streams");

    // fine-tune
    std::string checkpoint_path;
    std::string run_id;
    double new_rate = 0.0;
    std::size_t extra = 0;
    auto* cmd_ft = app.add_subcommand("fine-tune", "resume a checkpoint, optionally at a new rate");
    cmd_ft->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    cmd_ft->add_option("--rate", new_rate, "new rate (default: keep the checkpointed rate)");
    cmd_ft->add_option("--extra", extra, "additional steps (toy) or epochs (network)")
        ->required();
    cmd_ft->add_option("--out", out_dir, "output directory")->required();
    cmd_ft->add_option("--run-id", run_id, "identifier for the continued run");

    // probe
    std::string probe_kind;
    std::string checkpoint_b;
    std::string paired_dir;
    std::size_t num_points = 41;
    auto* cmd_probe = app.add_subcommand("probe", "landscape and movement probes");
    cmd_probe->add_option("kind", probe_kind, "interpolate | random-walk | invariance-audit")
        ->required();
    cmd_probe->add_option("--checkpoint", checkpoint_path, "primary checkpoint")->required();
    cmd_probe->add_option("--checkpoint-b", checkpoint_b, "second endpoint (interpolate)");
    cmd_probe->add_option("--points", num_points, "interpolation points");
    cmd_probe->add_option("--paired-run", paired_dir,
                          "directory of the recorded run to pair against (random-walk)");
    cmd_probe->add_option("--out", out_dir, "output directory")->required();

    // classify
    std::string trajectory_path;
    double random_level = 0.0;
    std::size_t classes = 0;
    bool diverged_flag = false;
    auto* cmd_classify = app.add_subcommand("classify", "re-run the regime classifier on a CSV");
    cmd_classify->add_option("--trajectory", trajectory_path, "trajectory CSV")->required();
    cmd_classify->add_option("--classes", classes, "class count (random level = ln C)");
    cmd_classify->add_option("--random-level", random_level,
                             "random-guess loss level (overrides --classes)");
    cmd_classify->add_flag("--diverged", diverged_flag, "the run ended with non-finite values");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_run) {
            const silab::RunConfig cfg = load_config(config_path, out_dir, seed_overrides);
            const silab::RunOutcome out = silab::execute_run(cfg, cfg.output_dir);
            print_outcome(out);
            return out.diverged ? kExitDiverged : kExitOk;
        }

        if (*cmd_sweep) {
            silab::RunConfig cfg = load_config(config_path, out_dir, {});
            std::vector<double> rates = sweep_rates;
            if (!grid_range.empty()) {
                const auto grid = silab::paper_grid(grid_range[0], grid_range[1]);
                rates.insert(rates.end(), grid.begin(), grid.end());
            }
            const silab::SweepResult result =
                silab::sweep(cfg, rates, out_dir, workers, decouple_seeds);
            std::printf("%-14s %-12s %-12s %s\n", "rate", "final_loss", "test_error", "regime");
            for (const silab::SweepEntry& entry : result.entries) {
                if (entry.outcome) {
                    const silab::RunOutcome& out = *entry.outcome;
                    std::printf("%-14g %-12.5g %-12.5g %s\n", entry.rate, out.final_train_loss(),
                                out.final_test_error(),
                                out.regime ? silab::regime_name(out.regime->regime)
                                           : "unclassified");
                } else {
                    std::printf("%-14g failed: %s\n", entry.rate, entry.error.c_str());
                }
            }
            std::printf("aggregate: %s\n", result.aggregate_csv.c_str());
            return kExitOk;
        }

        if (*cmd_ft) {
            const silab::Checkpoint cp = silab::load_checkpoint(checkpoint_path);
            const silab::RunOutcome out =
                silab::fine_tune(cp, new_rate, extra, out_dir, run_id);
            print_outcome(out);
            return out.diverged ? kExitDiverged : kExitOk;
        }

        if (*cmd_probe) {
            const silab::Checkpoint cp = silab::load_checkpoint(checkpoint_path);
            if (probe_kind == "interpolate") {
                if (checkpoint_b.empty())
                    throw silab::ConfigError("probe.checkpoint-b", "interpolation needs two checkpoints");
                const silab::Checkpoint cpb = silab::load_checkpoint(checkpoint_b);
                const auto report = silab::probe_interpolate(cp, cpb, num_points, out_dir);
                std::printf("barrier %.6g (endpoints %.6g / %.6g)\n", report.probe.barrier,
                            report.loss_a, report.loss_b);
                std::printf("outputs: %s, %s\n", report.csv_path.c_str(), report.json_path.c_str());
            } else if (probe_kind == "random-walk") {
                if (paired_dir.empty())
                    throw silab::ConfigError("probe.paired-run", "random-walk needs a paired run");
                const auto records = silab::read_trajectory_csv(paired_dir + "/trajectory.csv");
                const auto report = silab::probe_random_walk(cp, records, out_dir);
                std::printf("reference step %.6g; walk loss %.6g; adjacent cosine walk %.3g vs paired %.3g\n",
                            report.reference_step_size, report.walk_tail_mean_loss,
                            report.walk_adjacent_cosine, report.paired_adjacent_cosine);
                std::printf("outputs: %s\n", report.json_path.c_str());
            } else if (probe_kind == "invariance-audit") {
                const auto report = silab::probe_invariance_audit(cp, out_dir);
                std::printf("%s: max value deviation %.3g, max gradient deviation %.3g\n",
                            report.pass ? "PASS" : "FAIL", report.max_value_deviation,
                            report.max_gradient_deviation);
                std::printf("outputs: %s\n", report.json_path.c_str());
                return report.pass ? kExitOk : kExitError;
            } else {
                throw silab::ConfigError("probe.kind", "unknown probe '" + probe_kind + "'");
            }
            return kExitOk;
        }

        if (*cmd_classify) {
            if (classes == 0 && random_level <= 0.0 && !diverged_flag)
                throw silab::ConfigError("classify", "need --classes or --random-level");
            const double level =
                random_level > 0.0 ? random_level : std::log(static_cast<double>(classes));
            const auto records = silab::read_trajectory_csv(trajectory_path);
            const silab::RegimeLabel label =
                silab::classify_regime(records, level, diverged_flag);
            std::printf("%s\n", silab::regime_name(label.regime));
            std::printf("  tail mean loss %.6g, slope %.3g, mean step size %.3g\n",
                        label.evidence.tail_mean_loss, label.evidence.tail_slope,
                        label.evidence.tail_mean_ess);
            std::printf("  %s\n", label.evidence.reason.c_str());
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitOk;
}
