#include "carnot/report.hpp"

#include <fstream>

#include "carnot/errors.hpp"
#include "json.hpp"

namespace carnot {

namespace {

using json = nlohmann::ordered_json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DomainError("cannot write " + p.string());
  out << text;
}

}  // namespace

std::string report_json(const VerificationReport& r) {
  r.validate();
  json j;
  j["schema"] = kReportSchema;
  j["check"] = r.check;
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  json ms = json::array();
  for (const auto& m : r.measurements) {
    json values = json::object();
    for (const auto& [k, v] : m.values) values[k] = v;
    ms.push_back({{"subject", m.subject}, {"values", values}});
  }
  j["measurements"] = ms;
  j["slope"] = optional_number(r.slope);
  j["intercept"] = optional_number(r.intercept);
  j["r2"] = optional_number(r.r2);
  j["constant"] = optional_number(r.constant);
  j["verdict"] = verdict_name(r.verdict);
  j["pass"] = r.passed();
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

VerificationReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<int>() != kReportSchema) throw StructuralError("unsupported report schema");
    VerificationReport r;
    r.check = j.at("check").get<std::string>();
    for (const auto& [k, v] : j.at("params").items()) r.params.emplace_back(k, v.get<std::string>());
    for (const auto& m : j.at("measurements")) {
      Measurement row{m.at("subject").get<std::string>(), {}};
      for (const auto& [k, v] : m.at("values").items()) row.values.emplace_back(k, v.get<double>());
      r.measurements.push_back(std::move(row));
    }
    r.slope = read_optional(j, "slope");
    r.intercept = read_optional(j, "intercept");
    r.r2 = read_optional(j, "r2");
    r.constant = read_optional(j, "constant");
    const auto v = j.at("verdict").get<std::string>();
    if (v == "pass") r.verdict = Verdict::pass;
    else if (v == "fail") r.verdict = Verdict::fail;
    else if (v == "inconclusive") r.verdict = Verdict::inconclusive;
    else throw StructuralError("unknown verdict '" + v + "'");
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed report: ") + e.what());
  }
}

std::string report_csv(const VerificationReport& r) {
  std::string out = "check,subject,key,value\n";
  for (const auto& m : r.measurements)
    for (const auto& [k, v] : m.values)
      out += csv_field(r.check) + "," + csv_field(m.subject) + "," + csv_field(k) + "," + format_number(v) + "\n";
  return out;
}

Verdict combine(const std::vector<VerificationReport>& reports) {
  Verdict v = Verdict::pass;
  for (const auto& r : reports) {
    if (r.verdict == Verdict::fail) return Verdict::fail;
    if (r.verdict == Verdict::inconclusive) v = Verdict::inconclusive;
  }
  return v;
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass: return 0;
    case Verdict::inconclusive: return 2;
    case Verdict::fail: return 1;
  }
  return 1;
}

std::string summary_json(const std::vector<VerificationReport>& reports, const std::string& config_text) {
  json j;
  j["schema"] = kReportSchema;
  j["verdict"] = verdict_name(combine(reports));
  json checks = json::array();
  for (const auto& r : reports) checks.push_back({{"check", r.check}, {"verdict", verdict_name(r.verdict)}});
  j["checks"] = checks;
  j["config"] = config_text;
  return j.dump(2) + "\n";
}

std::string timings_json(const std::vector<VerificationReport>& reports) {
  json j = json::object();
  for (const auto& r : reports) j[r.check] = r.runtime_seconds;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_reports(const std::filesystem::path& dir,
                                                 const std::vector<VerificationReport>& reports,
                                                 const std::string& config_text) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& r : reports) {
    written.push_back(dir / (r.check + ".json"));
    write_file(written.back(), report_json(r));
    written.push_back(dir / (r.check + ".csv"));
    write_file(written.back(), report_csv(r));
  }
  written.push_back(dir / "summary.json");
  write_file(written.back(), summary_json(reports, config_text));
  written.push_back(dir / "timings.json");
  write_file(written.back(), timings_json(reports));
  return written;
}

}  // namespace carnot
