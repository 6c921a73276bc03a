#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "silab/errors.hpp"
#include "silab/mlp.hpp"
#include "silab/optimizer.hpp"

namespace silab {

using nlohmann::json;

struct BlobsConfig {
    std::size_t samples_per_class = 200;
    std::size_t input_dim = 20;
    double separation = 6.0;
    bool operator==(const BlobsConfig&) const = default;
};

struct IdxConfig {
    std::string train_images;
    std::string train_labels;
    std::string test_images;  // optional pair
    std::string test_labels;
    bool operator==(const IdxConfig&) const = default;
};

enum class DatasetKind { Blobs, Idx };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Blobs;
    BlobsConfig blobs;
    IdxConfig idx;
    bool operator==(const DatasetConfig&) const = default;
};

enum class ObjectiveKind { Toy, SiMlp };

struct ObjectiveConfig {
    ObjectiveKind kind = ObjectiveKind::Toy;
    // Toy objective.
    std::vector<double> alphas;
    // Network objective; SiMlpSpec.seed is filled from seeds.init at build time.
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t num_classes = 0;
    double bn_epsilon = 1e-5;
    double last_layer_norm = 10.0;
    DatasetConfig dataset;
    double label_noise_fraction = 0.0;
    bool operator==(const ObjectiveConfig&) const = default;
};

struct SeedsConfig {
    std::uint64_t init = 1;
    std::uint64_t data = 1;
    std::uint64_t batch = 1;
    std::uint64_t optimizer = 1;
    bool operator==(const SeedsConfig&) const = default;
};

// Complete description of one experiment. Serializes to a single JSON file;
// parsing is strict, unknown keys are errors.
struct RunConfig {
    int version = 1;
    std::string run_id = "run";
    ObjectiveConfig objective;
    OptimizerConfig optimizer;
    // Toy runs are step-counted; network runs are epoch-counted.
    std::size_t steps = 0;
    std::size_t epochs = 0;
    std::size_t batch_size = 64;
    // Logging cadence in optimizer steps; 0 means the default (10 for toy
    // runs, once per epoch for network runs).
    std::size_t log_every = 0;
    SeedsConfig seeds;
    std::string output_dir;

    bool operator==(const RunConfig&) const = default;

    bool is_toy() const { return objective.kind == ObjectiveKind::Toy; }
};

// ---------------------------------------------------------------------------
// Strict JSON reading

namespace detail {

// Wraps a JSON object, tracks which keys were consumed, and reports leftovers
// (with their full path) as configuration errors.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& require(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(path_ + "." + key, "missing required key");
        seen_.insert(key);
        return j_.at(key);
    }

    const json* optional(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    std::string child_path(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key()))
                throw ConfigError(path_ + "." + item.key(), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename T>
T as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "wrong value type");
    }
}

inline double positive(const json& j, const std::string& path) {
    const double v = as<double>(j, path);
    if (!(v > 0.0)) throw ConfigError(path, "must be positive");
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Serialization (only mode-relevant keys are emitted, so a serialize/parse
// round trip reproduces the struct exactly)

inline json to_json(const Schedule& s) {
    json j;
    switch (s.kind) {
        case ScheduleKind::Constant:
            j["kind"] = "constant";
            break;
        case ScheduleKind::Cosine:
            j["kind"] = "cosine";
            j["t_max"] = s.t_max;
            break;
        case ScheduleKind::StepChange:
            j["kind"] = "step-change";
            j["at"] = s.at;
            j["new_value"] = s.new_value;
            break;
    }
    return j;
}

inline json to_json(const OptimizerConfig& c) {
    json j;
    switch (c.mode) {
        case OptimizerMode::ProjectedSphere:
            j["mode"] = "projected-sphere";
            j["elr"] = c.elr;
            break;
        case OptimizerMode::WholeSpaceWd:
            j["mode"] = "whole-space-wd";
            j["lr"] = c.lr;
            j["weight_decay"] = c.weight_decay;
            break;
        case OptimizerMode::RandomWalk:
            j["mode"] = "random-walk";
            j["reference_step_size"] = c.reference_step_size;
            break;
    }
    j["schedule"] = to_json(c.schedule);
    return j;
}

inline json to_json(const DatasetConfig& c) {
    json j;
    if (c.kind == DatasetKind::Blobs) {
        j["kind"] = "blobs";
        j["samples_per_class"] = c.blobs.samples_per_class;
        j["input_dim"] = c.blobs.input_dim;
        j["separation"] = c.blobs.separation;
    } else {
        j["kind"] = "idx";
        j["train_images"] = c.idx.train_images;
        j["train_labels"] = c.idx.train_labels;
        if (!c.idx.test_images.empty()) {
            j["test_images"] = c.idx.test_images;
            j["test_labels"] = c.idx.test_labels;
        }
    }
    return j;
}

inline json to_json(const ObjectiveConfig& c) {
    json j;
    if (c.kind == ObjectiveKind::Toy) {
        j["kind"] = "toy";
        j["alphas"] = c.alphas;
    } else {
        j["kind"] = "si-mlp";
        j["input_dim"] = c.input_dim;
        j["hidden_dims"] = c.hidden_dims;
        j["num_classes"] = c.num_classes;
        j["bn_epsilon"] = c.bn_epsilon;
        j["last_layer_norm"] = c.last_layer_norm;
        j["dataset"] = to_json(c.dataset);
        j["label_noise_fraction"] = c.label_noise_fraction;
    }
    return j;
}

inline json to_json(const RunConfig& c) {
    json j;
    j["version"] = c.version;
    j["run_id"] = c.run_id;
    j["objective"] = to_json(c.objective);
    j["optimizer"] = to_json(c.optimizer);
    if (c.is_toy()) {
        j["steps"] = c.steps;
    } else {
        j["epochs"] = c.epochs;
        j["batch_size"] = c.batch_size;
    }
    if (c.log_every != 0) j["log_every"] = c.log_every;
    j["seeds"] = {{"init", c.seeds.init},
                  {"data", c.seeds.data},
                  {"batch", c.seeds.batch},
                  {"optimizer", c.seeds.optimizer}};
    if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
    return j;
}

// ---------------------------------------------------------------------------
// Parsing

inline Schedule schedule_from_json(const json& j, const std::string& path) {
    detail::StrictObject obj(j, path);
    const std::string kind = detail::as<std::string>(obj.require("kind"), obj.child_path("kind"));
    Schedule s;
    if (kind == "constant") {
        s.kind = ScheduleKind::Constant;
    } else if (kind == "cosine") {
        s.kind = ScheduleKind::Cosine;
        s.t_max = detail::as<std::size_t>(obj.require("t_max"), obj.child_path("t_max"));
        if (s.t_max == 0) throw ConfigError(obj.child_path("t_max"), "must be positive");
    } else if (kind == "step-change") {
        s.kind = ScheduleKind::StepChange;
        s.at = detail::as<std::size_t>(obj.require("at"), obj.child_path("at"));
        s.new_value = detail::positive(obj.require("new_value"), obj.child_path("new_value"));
    } else {
        throw ConfigError(obj.child_path("kind"), "unknown schedule kind '" + kind + "'");
    }
    obj.finish();
    return s;
}

inline OptimizerConfig optimizer_from_json(const json& j, const std::string& path) {
    detail::StrictObject obj(j, path);
    const std::string mode = detail::as<std::string>(obj.require("mode"), obj.child_path("mode"));
    OptimizerConfig c;
    if (mode == "projected-sphere") {
        c.mode = OptimizerMode::ProjectedSphere;
        c.elr = detail::positive(obj.require("elr"), obj.child_path("elr"));
    } else if (mode == "whole-space-wd") {
        c.mode = OptimizerMode::WholeSpaceWd;
        c.lr = detail::positive(obj.require("lr"), obj.child_path("lr"));
        c.weight_decay =
            detail::as<double>(obj.require("weight_decay"), obj.child_path("weight_decay"));
        if (c.weight_decay < 0.0)
            throw ConfigError(obj.child_path("weight_decay"), "must be >= 0");
    } else if (mode == "random-walk") {
        c.mode = OptimizerMode::RandomWalk;
        c.reference_step_size = detail::positive(obj.require("reference_step_size"),
                                                 obj.child_path("reference_step_size"));
    } else {
        throw ConfigError(obj.child_path("mode"), "unknown optimizer mode '" + mode + "'");
    }
    if (const json* sched = obj.optional("schedule"))
        c.schedule = schedule_from_json(*sched, obj.child_path("schedule"));
    obj.finish();
    return c;
}

inline DatasetConfig dataset_from_json(const json& j, const std::string& path) {
    detail::StrictObject obj(j, path);
    const std::string kind = detail::as<std::string>(obj.require("kind"), obj.child_path("kind"));
    DatasetConfig c;
    if (kind == "blobs") {
        c.kind = DatasetKind::Blobs;
        c.blobs.samples_per_class = detail::as<std::size_t>(obj.require("samples_per_class"),
                                                            obj.child_path("samples_per_class"));
        c.blobs.input_dim =
            detail::as<std::size_t>(obj.require("input_dim"), obj.child_path("input_dim"));
        c.blobs.separation =
            detail::positive(obj.require("separation"), obj.child_path("separation"));
    } else if (kind == "idx") {
        c.kind = DatasetKind::Idx;
        c.idx.train_images =
            detail::as<std::string>(obj.require("train_images"), obj.child_path("train_images"));
        c.idx.train_labels =
            detail::as<std::string>(obj.require("train_labels"), obj.child_path("train_labels"));
        if (obj.has("test_images") || obj.has("test_labels")) {
            c.idx.test_images = detail::as<std::string>(obj.require("test_images"),
                                                        obj.child_path("test_images"));
            c.idx.test_labels = detail::as<std::string>(obj.require("test_labels"),
                                                        obj.child_path("test_labels"));
        }
    } else {
        throw ConfigError(obj.child_path("kind"), "unknown dataset kind '" + kind + "'");
    }
    obj.finish();
    return c;
}

inline ObjectiveConfig objective_from_json(const json& j, const std::string& path) {
    detail::StrictObject obj(j, path);
    const std::string kind = detail::as<std::string>(obj.require("kind"), obj.child_path("kind"));
    ObjectiveConfig c;
    if (kind == "toy") {
        c.kind = ObjectiveKind::Toy;
        c.alphas = detail::as<std::vector<double>>(obj.require("alphas"), obj.child_path("alphas"));
        if (c.alphas.empty()) throw ConfigError(obj.child_path("alphas"), "must be non-empty");
        for (double a : c.alphas)
            if (!(a > 0.0)) throw ConfigError(obj.child_path("alphas"), "must all be positive");
    } else if (kind == "si-mlp") {
        c.kind = ObjectiveKind::SiMlp;
        c.input_dim =
            detail::as<std::size_t>(obj.require("input_dim"), obj.child_path("input_dim"));
        c.hidden_dims = detail::as<std::vector<std::size_t>>(obj.require("hidden_dims"),
                                                             obj.child_path("hidden_dims"));
        c.num_classes =
            detail::as<std::size_t>(obj.require("num_classes"), obj.child_path("num_classes"));
        if (const json* v = obj.optional("bn_epsilon"))
            c.bn_epsilon = detail::positive(*v, obj.child_path("bn_epsilon"));
        if (const json* v = obj.optional("last_layer_norm"))
            c.last_layer_norm = detail::positive(*v, obj.child_path("last_layer_norm"));
        c.dataset = dataset_from_json(obj.require("dataset"), obj.child_path("dataset"));
        if (const json* v = obj.optional("label_noise_fraction")) {
            c.label_noise_fraction = detail::as<double>(*v, obj.child_path("label_noise_fraction"));
            if (c.label_noise_fraction < 0.0 || c.label_noise_fraction > 1.0)
                throw ConfigError(obj.child_path("label_noise_fraction"), "must lie in [0, 1]");
        }
    } else {
        throw ConfigError(obj.child_path("kind"), "unknown objective kind '" + kind + "'");
    }
    obj.finish();
    return c;
}

inline RunConfig config_from_json(const json& j, const std::string& path = "config") {
    detail::StrictObject obj(j, path);
    RunConfig c;
    c.version = detail::as<int>(obj.require("version"), obj.child_path("version"));
    if (c.version != 1) throw ConfigError(obj.child_path("version"), "unsupported version");
    if (const json* v = obj.optional("run_id"))
        c.run_id = detail::as<std::string>(*v, obj.child_path("run_id"));
    c.objective = objective_from_json(obj.require("objective"), obj.child_path("objective"));
    c.optimizer = optimizer_from_json(obj.require("optimizer"), obj.child_path("optimizer"));

    if (c.is_toy()) {
        c.steps = detail::as<std::size_t>(obj.require("steps"), obj.child_path("steps"));
        if (c.steps == 0) throw ConfigError(obj.child_path("steps"), "must be positive");
        if (obj.has("epochs"))
            throw ConfigError(obj.child_path("epochs"), "toy runs are step-counted");
        if (obj.has("batch_size"))
            throw ConfigError(obj.child_path("batch_size"), "toy runs are full-batch");
    } else {
        c.epochs = detail::as<std::size_t>(obj.require("epochs"), obj.child_path("epochs"));
        if (c.epochs == 0) throw ConfigError(obj.child_path("epochs"), "must be positive");
        if (obj.has("steps"))
            throw ConfigError(obj.child_path("steps"), "network runs are epoch-counted");
        if (const json* v = obj.optional("batch_size")) {
            c.batch_size = detail::as<std::size_t>(*v, obj.child_path("batch_size"));
            if (c.batch_size < 2) throw ConfigError(obj.child_path("batch_size"), "must be >= 2");
        }
    }
    if (const json* v = obj.optional("log_every"))
        c.log_every = detail::as<std::size_t>(*v, obj.child_path("log_every"));

    if (const json* v = obj.optional("seeds")) {
        detail::StrictObject seeds(*v, obj.child_path("seeds"));
        if (const json* s = seeds.optional("init"))
            c.seeds.init = detail::as<std::uint64_t>(*s, "seeds.init");
        if (const json* s = seeds.optional("data"))
            c.seeds.data = detail::as<std::uint64_t>(*s, "seeds.data");
        if (const json* s = seeds.optional("batch"))
            c.seeds.batch = detail::as<std::uint64_t>(*s, "seeds.batch");
        if (const json* s = seeds.optional("optimizer"))
            c.seeds.optimizer = detail::as<std::uint64_t>(*s, "seeds.optimizer");
        seeds.finish();
    }
    if (const json* v = obj.optional("output_dir"))
        c.output_dir = detail::as<std::string>(*v, obj.child_path("output_dir"));
    obj.finish();
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace silab
