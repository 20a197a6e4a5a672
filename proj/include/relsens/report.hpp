#ifndef RELSENS_REPORT_HPP
#define RELSENS_REPORT_HPP

#include <ostream>
#include <string>

#include "relsens/pipeline.hpp"

namespace relsens {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

// Deterministic for fixed config and seeds, except for the "timestamp" field.
std::string report_to_json(const AnalysisResult& result);

void print_report_table(const AnalysisResult& result, std::ostream& out);

// Flat quantity,value,std_error rows; numbers round-trip to the JSON values.
void print_report_csv(const AnalysisResult& result, std::ostream& out);

}  // namespace relsens

#endif  // RELSENS_REPORT_HPP
