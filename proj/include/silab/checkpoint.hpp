#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "silab/config.hpp"
#include "silab/errors.hpp"
#include "silab/grouped_params.hpp"

namespace silab {

// Everything needed to continue a run exactly where it stopped: the full
// configuration, the raw parameter state (plus the previous iterate so the
// first resumed record matches), the step counter, and both RNG streams.
struct Checkpoint {
    int format_version = 1;
    RunConfig config;
    std::size_t step = 0;
    double radius = 0.0;
    std::vector<double> values;
    std::vector<double> prev_values;
    std::string batch_rng;
    std::string optimizer_rng;

    bool operator==(const Checkpoint&) const = default;
};

inline json to_json(const Checkpoint& cp) {
    json j;
    j["format_version"] = cp.format_version;
    j["config"] = to_json(cp.config);
    j["step"] = cp.step;
    j["radius"] = cp.radius;
    j["values"] = cp.values;
    j["prev_values"] = cp.prev_values;
    j["rng"] = {{"batch", cp.batch_rng}, {"optimizer", cp.optimizer_rng}};
    return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
    detail::StrictObject obj(j, "checkpoint");
    Checkpoint cp;
    cp.format_version = detail::as<int>(obj.require("format_version"), "checkpoint.format_version");
    if (cp.format_version != 1)
        throw ParseError("checkpoint: unsupported format version " +
                         std::to_string(cp.format_version));
    cp.config = config_from_json(obj.require("config"), "checkpoint.config");
    cp.step = detail::as<std::size_t>(obj.require("step"), "checkpoint.step");
    cp.radius = detail::as<double>(obj.require("radius"), "checkpoint.radius");
    cp.values = detail::as<std::vector<double>>(obj.require("values"), "checkpoint.values");
    cp.prev_values =
        detail::as<std::vector<double>>(obj.require("prev_values"), "checkpoint.prev_values");
    detail::StrictObject rng(obj.require("rng"), "checkpoint.rng");
    cp.batch_rng = detail::as<std::string>(rng.require("batch"), "checkpoint.rng.batch");
    cp.optimizer_rng = detail::as<std::string>(rng.require("optimizer"), "checkpoint.rng.optimizer");
    rng.finish();
    obj.finish();
    return cp;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << to_json(cp).dump() << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace silab
