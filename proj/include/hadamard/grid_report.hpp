#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace hadamard {

// Minimum margin of one inequality over the nodes it was evaluated on.
struct CheckSummary {
  std::string name;
  double min_margin = std::numeric_limits<double>::infinity();
  double argmin_s = 0.0;
  double argmin_r = 0.0;
  std::size_t nodes = 0;
  std::size_t failures = 0;
};

struct FailedNode {
  std::string check;
  double s;
  double r;
  double margin;
};

// Per-node margins of verified inequalities. Margins are oriented so that
// the inequality holds iff margin >= 0; a check passes iff min >= -tol.
class GridReport {
public:
  explicit GridReport(std::string subject = {}, double tol = 0.0,
                      std::size_t max_listed = 200);

  void record(const std::string& check, double s, double r, double margin);
  // Adds a check whose tolerance differs from the report default.
  void set_tolerance(const std::string& check, double tol);
  // Non-grid facts (junction radii, ratios, flags) carried alongside.
  void note(const std::string& key, nlohmann::json value);
  void merge(const GridReport& other);

  bool pass() const;
  bool check_pass(const std::string& check) const;
  double tolerance(const std::string& check) const;
  const CheckSummary& check(const std::string& name) const;
  const std::vector<CheckSummary>& checks() const { return checks_; }
  const std::vector<FailedNode>& failed_nodes() const { return failed_; }
  const std::string& subject() const { return subject_; }
  const nlohmann::json& notes() const { return notes_; }
  double tol() const { return tol_; }

  nlohmann::json to_json() const;

private:
  CheckSummary& slot(const std::string& check);

  std::string subject_;
  double tol_;
  std::size_t max_listed_;
  std::vector<CheckSummary> checks_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, double> tolerances_;
  std::vector<FailedNode> failed_;
  nlohmann::json notes_ = nlohmann::json::object();
};

} // namespace hadamard
