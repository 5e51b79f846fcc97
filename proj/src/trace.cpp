#include "spider/trace.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace spider {

const char* const kTraceCsvHeader =
    "t,k,delta,iterate_sq_norm,objective,oracle_calls_cum,prox_calls_cum,"
    "epoch_fraction,wall_ns";

namespace {

// shortest round-trip representation, locale independent
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string format_trace_row(const TraceRecord& r) {
    std::string row;
    row += std::to_string(r.t);
    row += ',';
    row += std::to_string(r.k);
    row += ',';
    row += format_double(r.delta);
    row += ',';
    row += format_double(r.iterate_sq_norm);
    row += ',';
    if (r.objective) row += format_double(*r.objective);
    row += ',';
    row += std::to_string(r.oracle_calls_cum);
    row += ',';
    row += std::to_string(r.prox_calls_cum);
    row += ',';
    row += format_double(r.epoch_fraction);
    row += ',';
    row += std::to_string(r.wall_ns);
    return row;
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<TraceRecord>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF on all hosts
    if (!out) throw std::runtime_error("cannot open trace file " + path.string());
    out << kTraceCsvHeader << '\n';
    for (const auto& r : rows) out << format_trace_row(r) << '\n';
    if (!out) throw std::runtime_error("failed writing trace file " + path.string());
}

}  // namespace spider
