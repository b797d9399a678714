#include "hadamard/grid_report.hpp"

#include <cmath>
#include <stdexcept>

#include "hadamard/errors.hpp"

namespace hadamard {

ConstraintViolation::ConstraintViolation(std::string name, double r, double margin)
    : Error("ConstraintViolation",
            name + " violated at r=" + std::to_string(r) +
                " (margin " + std::to_string(margin) + ")"),
      name_(std::move(name)), r_(r), margin_(margin) {}

SearchExhausted::SearchExhausted(std::string junction, double lo, double hi)
    : Error("SearchExhausted", junction + " not found in [" + std::to_string(lo) +
                                   ", " + std::to_string(hi) + "]"),
      junction_(std::move(junction)) {}

ContainmentFailed::ContainmentFailed(double slack, double r)
    : Error("ContainmentFailed", "slack " + std::to_string(slack) + " at r=" +
                                     std::to_string(r) + "; increase b"),
      slack_(slack), r_(r) {}

GridReport::GridReport(std::string subject, double tol, std::size_t max_listed)
    : subject_(std::move(subject)), tol_(tol), max_listed_(max_listed) {}

CheckSummary& GridReport::slot(const std::string& check) {
  auto it = index_.find(check);
  if (it != index_.end()) return checks_[it->second];
  index_[check] = checks_.size();
  checks_.push_back(CheckSummary{check});
  return checks_.back();
}

void GridReport::record(const std::string& check, double s, double r,
                        double margin) {
  CheckSummary& c = slot(check);
  ++c.nodes;
  // NaN counts as a failure and as the minimum.
  if (std::isnan(margin) || margin < c.min_margin) {
    if (!std::isnan(c.min_margin)) {
      c.min_margin = margin;
      c.argmin_s = s;
      c.argmin_r = r;
    }
  }
  if (std::isnan(margin) || margin < -tolerance(check)) {
    ++c.failures;
    if (failed_.size() < max_listed_) failed_.push_back({check, s, r, margin});
  }
}

void GridReport::set_tolerance(const std::string& check, double tol) {
  tolerances_[check] = tol;
  slot(check);
}

double GridReport::tolerance(const std::string& check) const {
  auto it = tolerances_.find(check);
  return it == tolerances_.end() ? tol_ : it->second;
}

void GridReport::note(const std::string& key, nlohmann::json value) {
  notes_[key] = std::move(value);
}

void GridReport::merge(const GridReport& other) {
  for (const auto& [name, tol] : other.tolerances_) tolerances_[name] = tol;
  for (const CheckSummary& c : other.checks_) {
    CheckSummary& mine = slot(c.name);
    if (c.nodes > 0 && (mine.nodes == 0 || c.min_margin < mine.min_margin ||
                        std::isnan(c.min_margin))) {
      mine.min_margin = c.min_margin;
      mine.argmin_s = c.argmin_s;
      mine.argmin_r = c.argmin_r;
    }
    mine.nodes += c.nodes;
    mine.failures += c.failures;
  }
  for (const FailedNode& f : other.failed_)
    if (failed_.size() < max_listed_) failed_.push_back(f);
  for (auto it = other.notes_.begin(); it != other.notes_.end(); ++it)
    notes_[it.key()] = it.value();
}

bool GridReport::check_pass(const std::string& name) const {
  const CheckSummary& c = check(name);
  return c.failures == 0;
}

bool GridReport::pass() const {
  for (const CheckSummary& c : checks_)
    if (c.failures > 0) return false;
  return true;
}

const CheckSummary& GridReport::check(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no check named " + name);
  return checks_[it->second];
}

namespace {
nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}
} // namespace

nlohmann::json GridReport::to_json() const {
  nlohmann::json j;
  j["subject"] = subject_;
  j["pass"] = pass();
  j["tolerance"] = tol_;
  auto& cs = j["checks"] = nlohmann::json::array();
  for (const CheckSummary& c : checks_) {
    cs.push_back({{"name", c.name},
                  {"min_margin", number(c.min_margin)},
                  {"argmin", {{"s", c.argmin_s}, {"r", c.argmin_r}}},
                  {"nodes", c.nodes},
                  {"failures", c.failures},
                  {"tolerance", tolerance(c.name)},
                  {"pass", c.failures == 0}});
  }
  auto& fs = j["failed_nodes"] = nlohmann::json::array();
  for (const FailedNode& f : failed_)
    fs.push_back({{"check", f.check}, {"s", f.s}, {"r", f.r}, {"margin", number(f.margin)}});
  j["notes"] = notes_;
  return j;
}

} // namespace hadamard
