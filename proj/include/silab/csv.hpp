#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "silab/errors.hpp"
#include "silab/instrumentation.hpp"

namespace silab {

// 17 significant digits: enough for exact double round-trips, so trajectory
// files can be diffed and re-parsed without loss.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trajectory_csv_header(std::size_t num_groups) {
    std::string h =
        "step,train_loss,test_error,total_elr,total_eff_grad,total_ess,"
        "sharpness_mean_grad_norm,grad_cov_trace,adjacent_cosine_distance";
    const char* families[] = {"rho_", "elr_", "eff_grad_", "ess_"};
    for (const char* family : families)
        for (std::size_t i = 0; i < num_groups; ++i)
            h += "," + std::string(family) + std::to_string(i);
    return h;
}

inline std::string trajectory_csv_row(const StepRecord& r) {
    std::string row = std::to_string(r.step);
    const auto push = [&row](double v) { row += "," + format_double(v); };
    push(r.train_loss);
    push(r.test_error);
    push(r.total_elr);
    push(r.total_eff_grad);
    push(r.total_ess);
    push(r.sharpness_mean_grad_norm);
    push(r.grad_cov_trace);
    push(r.adjacent_cosine_distance);
    for (const auto* family : {&r.group_rho, &r.group_elr, &r.group_eff_grad, &r.group_ess})
        for (double v : *family) push(v);
    return row;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<StepRecord>& records,
                                 std::size_t num_groups) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << trajectory_csv_header(num_groups) << "\n";
    for (const StepRecord& r : records) out << trajectory_csv_row(r) << "\n";
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_cell(const std::string& cell) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) throw ParseError("bad numeric cell '" + cell + "'");
    return v;
}

}  // namespace detail

inline std::vector<StepRecord> read_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");

    const auto header = detail::split_csv_line(line);
    constexpr std::size_t kFixed = 9;
    if (header.size() < kFixed || (header.size() - kFixed) % 4 != 0)
        throw ParseError(path + ": unrecognized trajectory header");
    const std::size_t groups = (header.size() - kFixed) / 4;

    std::vector<StepRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(path + ": row width does not match header");
        StepRecord r;
        r.step = static_cast<std::size_t>(std::strtoull(cells[0].c_str(), nullptr, 10));
        r.train_loss = detail::parse_cell(cells[1]);
        r.test_error = detail::parse_cell(cells[2]);
        r.total_elr = detail::parse_cell(cells[3]);
        r.total_eff_grad = detail::parse_cell(cells[4]);
        r.total_ess = detail::parse_cell(cells[5]);
        r.sharpness_mean_grad_norm = detail::parse_cell(cells[6]);
        r.grad_cov_trace = detail::parse_cell(cells[7]);
        r.adjacent_cosine_distance = detail::parse_cell(cells[8]);
        for (std::size_t i = 0; i < groups; ++i)
            r.group_rho.push_back(detail::parse_cell(cells[kFixed + i]));
        for (std::size_t i = 0; i < groups; ++i)
            r.group_elr.push_back(detail::parse_cell(cells[kFixed + groups + i]));
        for (std::size_t i = 0; i < groups; ++i)
            r.group_eff_grad.push_back(detail::parse_cell(cells[kFixed + 2 * groups + i]));
        for (std::size_t i = 0; i < groups; ++i)
            r.group_ess.push_back(detail::parse_cell(cells[kFixed + 3 * groups + i]));
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace silab
