#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "carnot/verify.hpp"

namespace carnot {

constexpr int kReportSchema = 1;

// JSON with keys schema, check, params, measurements, slope, intercept, r2,
// constant, verdict, pass, notes. Wall-clock time is left out so equal inputs
// give equal bytes.
std::string report_json(const VerificationReport& r);
VerificationReport report_from_json(const std::string& text);  // StructuralError on bad input

// Long-format table: check,subject,key,value.
std::string report_csv(const VerificationReport& r);

// Overall verdict: any fail is a fail, then any inconclusive; empty is a pass.
Verdict combine(const std::vector<VerificationReport>& reports);
// 0 pass, 2 inconclusive, 1 fail.
int exit_code(Verdict v);

// {schema, verdict, checks: [{check, verdict}], config}.
std::string summary_json(const std::vector<VerificationReport>& reports, const std::string& config_text);
// {check: seconds}; the only place timings are written.
std::string timings_json(const std::vector<VerificationReport>& reports);

// Writes <check>.json and <check>.csv per report plus summary.json and
// timings.json into dir, creating it. Returns the paths written.
std::vector<std::filesystem::path> write_reports(const std::filesystem::path& dir,
                                                 const std::vector<VerificationReport>& reports,
                                                 const std::string& config_text);

}  // namespace carnot
