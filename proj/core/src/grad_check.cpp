#include "step/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "step/rng.hpp"

namespace step {

namespace {

double rel_err(double a, double b) {
  const double denom = std::max(std::abs(a) + std::abs(b), 1e-6);
  return std::abs(a - b) / denom;
}

}  // namespace

GradCheckReport grad_check(const std::function<double(const ParameterSet&)>& loss_fn,
                           ParameterSet& params, double tolerance,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(options.seed);

  for (std::size_t ti = 0; ti < params.count(); ++ti) {
    auto& entry = params.entry(ti);
    const std::size_t n = entry.value.size();
    if (n == 0) continue;

    std::vector<std::size_t> coords;
    if (n <= options.coords_per_tensor) {
      coords.resize(n);
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      // Seeded sample without replacement (partial Fisher-Yates).
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t i = 0; i < options.coords_per_tensor; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(all[i], all[j]);
      }
      coords.assign(all.begin(), all.begin() + options.coords_per_tensor);
    }

    GradCheckEntry ge;
    ge.path = entry.path;
    ge.checked = coords.size();
    for (std::size_t c : coords) {
      const double w = entry.value[c];
      const double h = options.step_scale * std::max(1.0, std::abs(w));
      entry.value[c] = w + h;
      const double lp = loss_fn(params);
      entry.value[c] = w - h;
      const double lm = loss_fn(params);
      entry.value[c] = w;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = entry.grad[c];
      const double e = rel_err(analytic, numeric);
      if (e > ge.max_rel_err) {
        ge.max_rel_err = e;
        ge.worst_coord = c;
        ge.analytic_at_worst = analytic;
        ge.numeric_at_worst = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, ge.max_rel_err);
    report.entries.push_back(std::move(ge));
  }
  report.passed = report.max_rel_err < tolerance;
  return report;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " tol=" << tolerance << "\n";
  for (const auto& e : entries) {
    os << "  " << e.path << ": checked=" << e.checked << " max_rel_err=" << e.max_rel_err;
    if (e.max_rel_err >= tolerance) {
      os << " [worst coord " << e.worst_coord << ": analytic=" << e.analytic_at_worst
         << " numeric=" << e.numeric_at_worst << "]";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace step
