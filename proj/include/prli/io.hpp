#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "prli/hybrid.hpp"

namespace prli {

/// Shortest round-trip decimal form, stable across runs.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

/// Arc export: one row per recorded sample, post-jump rows included. Columns
/// are t, j, tau, u_1..u_n, w_1..w_m (omitted when m = 0), p_1..p_n, phi.
inline void write_arc_csv(const std::string& path, const HybridArc& arc,
                          const PrliLayout& layout) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_arc_csv: cannot open " + path);

    out << "t,j,tau";
    for (int i = 1; i <= layout.n; ++i) out << ",u_" << i;
    for (int i = 1; i <= layout.m; ++i) out << ",w_" << i;
    for (int i = 1; i <= layout.n; ++i) out << ",p_" << i;
    out << ",phi\n";

    for (std::size_t row = 0; row < arc.samples.size(); ++row) {
        const HybridSample& sample = arc.samples[row];
        out << format_double(sample.t) << ',' << sample.j << ','
            << format_double(layout.tau(sample.x));
        for (int i = 0; i < layout.n + layout.m; ++i)
            out << ',' << format_double(sample.x[i]);
        for (int i = 0; i < layout.n; ++i)
            out << ',' << format_double(sample.x[layout.p_offset() + i]);
        out << ',' << (row < arc.outputs.size() ? format_double(arc.outputs[row]) : "");
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_arc_csv: write failed for " + path);
}

inline void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
    out << contents;
    if (!out) throw std::runtime_error("write_text_file: write failed for " + path);
}

}  // namespace prli
