#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <system_error>

#include "snn/error.hpp"
#include "snn/optimize.hpp"
#include "snn/sparsity.hpp"

namespace snn {

/// Locale-independent shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw ValueError("cannot format double");
    return std::string(buf, res.ptr);
}

inline void emit_history_csv(const TrainingHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write history file '" + path + "'");
    out << "epoch,mean_cost,accuracy,weight_sparsity,activation_sparsity\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',' << format_double(e.mean_cost) << ',' << format_double(e.accuracy)
            << ',' << format_double(e.weight_sparsity) << ','
            << format_double(e.activation_sparsity) << '\n';
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline void emit_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write sweep file '" + path + "'");
    out << "epsilon,activation_sparsity,weight_sparsity,accuracy,mean_cost\n";
    for (const SweepRow& r : rows) {
        out << format_double(r.epsilon) << ',' << format_double(r.activation_sparsity) << ','
            << format_double(r.weight_sparsity) << ',' << format_double(r.accuracy) << ','
            << format_double(r.mean_cost) << '\n';
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

} // namespace snn
