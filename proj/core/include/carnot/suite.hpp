#pragma once

#include <string>
#include <vector>

#include "carnot/config.hpp"
#include "carnot/verify.hpp"

namespace carnot {

// Every check id in suite order: module checks first, then the estimates.
const std::vector<std::string>& check_ids();
// The estimate checks run by `verify all`.
const std::vector<std::string>& estimate_ids();

// Runs one check with parameters taken from the config. ConfigError for an
// unknown id; DomainError from a violated precondition propagates.
VerificationReport run_check(const std::string& id, const RunConfig& cfg);
// Runs several, at most cfg.workers at a time; reports come back in input order.
std::vector<VerificationReport> run_checks(const std::vector<std::string>& ids, const RunConfig& cfg);

// p used by the single-exponent checks: the entry of cfg.p closest to 2.
double primary_p(const RunConfig& cfg);

}  // namespace carnot
