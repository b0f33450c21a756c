#include "tiledit/estimator.hpp"

#include <sstream>

#include "tiledit/errors.hpp"

namespace tiledit {

DilationProfile DilationProfile::uniform(int factor) {
  DilationProfile p;
  p.rules.push_back({"*", factor, 0, 1 << 30});
  return p;
}

DilationProfile DilationProfile::parse(const std::string& text) {
  DilationProfile p;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    DilationRule rule;
    if (!(fields >> rule.pattern >> rule.factor >> rule.t_min >> rule.t_max)) {
      throw Error(ErrorCode::bad_format,
                  "dilation profile line " + std::to_string(line_no) +
                      " needs 'pattern factor t_min t_max'");
    }
    if (rule.factor < 1 || rule.t_min < 0 || rule.t_max < rule.t_min) {
      throw Error(ErrorCode::invalid_range,
                  "dilation profile line " + std::to_string(line_no) + " out of range");
    }
    p.rules.push_back(rule);
  }
  return p;
}

std::string DilationProfile::serialize() const {
  std::ostringstream out;
  for (const DilationRule& r : rules) {
    out << r.pattern << " " << r.factor << " " << r.t_min << " " << r.t_max << "\n";
  }
  return out.str();
}

namespace {

bool pattern_matches(const std::string& pattern, const std::string& layer) {
  if (pattern == "*") return true;
  if (!pattern.empty() && pattern.back() == '*') {
    return layer.rfind(pattern.substr(0, pattern.size() - 1), 0) == 0;
  }
  return pattern == layer;
}

}  // namespace

int DilationProfile::factor_for(const std::string& layer, int t) const {
  for (const DilationRule& r : rules) {
    if (t >= r.t_min && t <= r.t_max && pattern_matches(r.pattern, layer)) {
      return r.factor;
    }
  }
  return 1;
}

std::shared_ptr<const NoiseEstimator> NoiseEstimator::redilate_with(
    int, const DilationProfile&) const {
  throw Error(ErrorCode::unsupported_backend,
              "estimator '" + id() + "' has no convolution layers to re-dilate");
}

std::shared_ptr<const NoiseEstimator> redilate(std::shared_ptr<const NoiseEstimator> estimator,
                                               int factor) {
  return redilate(std::move(estimator), factor, DilationProfile{});
}

std::shared_ptr<const NoiseEstimator> redilate(std::shared_ptr<const NoiseEstimator> estimator,
                                               int factor, const DilationProfile& profile) {
  if (factor < 1) {
    throw Error(ErrorCode::invalid_factor, "dilation factor must be >= 1");
  }
  if (factor == 1 && profile.empty()) {
    return estimator;
  }
  if (!estimator->supports_dilation()) {
    // Resolution-agnostic backends absorb any factor.
    return estimator;
  }
  const DilationProfile& effective = profile.empty() ? DilationProfile::uniform(factor) : profile;
  return estimator->redilate_with(factor, effective);
}

void require_same_schedule(const NoiseEstimator& estimator, const NoiseSchedule& schedule) {
  if (!estimator.schedule().same_as(schedule)) {
    throw Error(ErrorCode::schedule_mismatch,
                "estimator '" + estimator.id() + "' is bound to a different schedule");
  }
}

}  // namespace tiledit
