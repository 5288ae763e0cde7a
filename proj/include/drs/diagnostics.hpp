#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace drs {

struct Finding {
  std::string check;
  bool passed = true;
  std::string detail;
};

// Report-only result of a validation pass: named checks plus free-form metrics.
struct DiagnosticsReport {
  std::vector<Finding> findings;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();

  void add(std::string check, bool passed, std::string detail = {}) {
    findings.push_back({std::move(check), passed, std::move(detail)});
  }

  bool ok() const {
    for (const auto& f : findings)
      if (!f.passed) return false;
    return true;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["ok"] = ok();
    j["metrics"] = metrics;
    j["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : findings)
      j["findings"].push_back({{"check", f.check}, {"passed", f.passed}, {"detail", f.detail}});
    return j;
  }
};

}  // namespace drs
