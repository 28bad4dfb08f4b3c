#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wstreamlet/config.hpp"

namespace wstreamlet::scenario {

// One output curve point: a (sweep value, mode, metric) cell with per-run
// samples and their aggregate.
struct ResultRow {
    std::string experiment;
    std::string sweep;   // "name=value"
    std::string mode;    // policy or storage/chain mode
    std::string metric;
    std::vector<double> samples;  // one per run, run-index order
    double mean = 0.0;
    double ci95 = 0.0;  // Student-t 95% half width; 0 when runs < 2
    uint64_t runs = 0;
    uint64_t seed = 0;
};

struct ResultTable {
    config::ScenarioConfig config;  // resolved config, echoed into every output
    std::vector<ResultRow> rows;
};

// Two-sided 95% Student-t quantile (0.975, df degrees of freedom). Exact
// table for df 1..30, anchor interpolation above.
double student_t_975(uint64_t df);

// Fills runs, mean and ci95 from samples.
void finalize_row(ResultRow& row);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// CSV: one '#'-prefixed compact-JSON config line, a fixed header row
// (experiment,sweep,mode,metric,mean,ci95,runs,seed), one line per row.
std::string emit_csv(const ResultTable& t);

// JSON mirrors the CSV schema and adds per-run samples.
std::string emit_json(const ResultTable& t);
ResultTable parse_json(const std::string& text);

}  // namespace wstreamlet::scenario
