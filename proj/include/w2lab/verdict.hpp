#pragma once

#include <string>

#include "json.hpp"

namespace w2lab {

using Json = nlohmann::ordered_json;

enum class VerdictStatus { pass, fail, inconclusive };

std::string to_string(VerdictStatus s);

/// Outcome of one checked inequality, ready for the reporter.
/// margin is signed so that margin >= 0 means the inequality held.
struct Verdict {
  std::string name;
  Json inputs = Json::object();
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  VerdictStatus status = VerdictStatus::pass;
  Json details = Json::object();

  bool passed() const noexcept { return status == VerdictStatus::pass; }
  Json to_json() const;
};

/// lhs <= rhs + slack.
Verdict verdict_le(std::string name, Json inputs, double lhs, double rhs, double slack = 0.0);
/// |lhs - rhs| <= tol.
Verdict verdict_close(std::string name, Json inputs, double lhs, double rhs, double tol);

}  // namespace w2lab
