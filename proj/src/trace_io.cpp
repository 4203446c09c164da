#include "mlbpgd/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double normalized(double fval, double f0, double f_ref) {
    const double denom = f0 - f_ref;
    if (!(denom > 0.0)) return 0.0;
    const double n = (fval - f_ref) / denom;
    return std::min(1.0, std::max(0.0, n));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    return out;
}

} // namespace

void write_trace_csv(const SolverTrace& trace, double f_ref, const std::string& path) {
    if (trace.records.empty()) throw ArgError("write_trace_csv: empty trace");
    const double f0 = trace.records.front().fval;

    std::ofstream out = open_out(path);
    out << kTraceHeader << "\n";
    for (const IterRecord& r : trace.records) {
        out << r.iter << ',' << fmt(r.fval) << ','
            << fmt(normalized(r.fval, f0, f_ref)) << ',' << fmt(r.seconds) << ','
            << r.deepest_level << ',' << (r.any_triggered() ? 1 : 0) << ','
            << fmt(r.alpha_finest()) << "\n";
    }
    if (!out) throw FormatError("short write to " + path);
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw FormatError(path + ": missing or wrong header");

    std::vector<TraceRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7)
            throw FormatError(path + ":" + std::to_string(lineno) + ": want 7 cells");
        TraceRow r;
        try {
            r.iter = std::stoi(cells[0]);
            r.fval = std::stod(cells[1]);
            r.normalized_fval = std::stod(cells[2]);
            r.cpu_seconds = std::stod(cells[3]);
            r.deepest_level = std::stoi(cells[4]);
            r.triggered = std::stoi(cells[5]);
            r.alpha_finest = std::stod(cells[6]);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad number");
        }
        rows.push_back(r);
    }
    return rows;
}

void emit_plot_data(const SolverTrace& sl, const SolverTrace& ml, double f_ref,
                    const std::string& path) {
    if (sl.records.empty() || ml.records.empty())
        throw ArgError("emit_plot_data: empty trace");
    const double sl_f0 = sl.records.front().fval;
    const double ml_f0 = ml.records.front().fval;

    std::ofstream out = open_out(path);
    out << "iter,sl_cpu_seconds,sl_normalized_fval,ml_cpu_seconds,ml_normalized_fval\n";
    const std::size_t n = std::max(sl.records.size(), ml.records.size());
    for (std::size_t i = 0; i < n; ++i) {
        out << i;
        if (i < sl.records.size()) {
            const IterRecord& r = sl.records[i];
            out << ',' << fmt(r.seconds) << ',' << fmt(normalized(r.fval, sl_f0, f_ref));
        } else {
            out << ",,";
        }
        if (i < ml.records.size()) {
            const IterRecord& r = ml.records[i];
            out << ',' << fmt(r.seconds) << ',' << fmt(normalized(r.fval, ml_f0, f_ref));
        } else {
            out << ",,";
        }
        out << "\n";
    }
    if (!out) throw FormatError("short write to " + path);
}

} // namespace mlbpgd
