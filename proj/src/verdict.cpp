#include "w2lab/verdict.hpp"

#include <cmath>

namespace w2lab {

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::pass: return "pass";
    case VerdictStatus::fail: return "fail";
    case VerdictStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Json Verdict::to_json() const {
  Json j;
  j["name"] = name;
  j["inputs"] = inputs;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["margin"] = margin;
  j["verdict"] = to_string(status);
  if (!details.empty()) j["details"] = details;
  return j;
}

Verdict verdict_le(std::string name, Json inputs, double lhs, double rhs, double slack) {
  Verdict v;
  v.name = std::move(name);
  v.inputs = std::move(inputs);
  v.lhs = lhs;
  v.rhs = rhs;
  v.margin = rhs + slack - lhs;
  v.status = (std::isfinite(v.margin) && v.margin >= 0.0) ? VerdictStatus::pass : VerdictStatus::fail;
  if (slack != 0.0) v.details["slack"] = slack;
  return v;
}

Verdict verdict_close(std::string name, Json inputs, double lhs, double rhs, double tol) {
  Verdict v;
  v.name = std::move(name);
  v.inputs = std::move(inputs);
  v.lhs = lhs;
  v.rhs = rhs;
  v.margin = tol - std::abs(lhs - rhs);
  v.status = (std::isfinite(v.margin) && v.margin >= 0.0) ? VerdictStatus::pass : VerdictStatus::fail;
  v.details["tolerance"] = tol;
  return v;
}

}  // namespace w2lab
