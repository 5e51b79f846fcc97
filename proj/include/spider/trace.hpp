#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spider {

/// One diagnostics row per iteration; mirrors the axes of the experiment
/// plots (stationarity measure vs epochs, iterate norm, call counters).
struct TraceRecord {
    std::int64_t t = 0;
    std::int64_t k = 0;
    double delta = 0.0;
    double iterate_sq_norm = 0.0;
    std::optional<double> objective;
    std::int64_t oracle_calls_cum = 0;
    std::int64_t prox_calls_cum = 0;
    double epoch_fraction = 0.0;
    std::int64_t wall_ns = 0;
};

// fixed column set, LF line endings, '.' decimal separator
extern const char* const kTraceCsvHeader;

std::string format_trace_row(const TraceRecord& r);
void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<TraceRecord>& rows);

}  // namespace spider
