#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "step/params.hpp"

namespace step {

struct GradCheckOptions {
  double step_scale = 1e-5;        // h = step_scale * max(1, |w|)
  std::size_t coords_per_tensor = 200;  // subsample size; small tensors are checked fully
  std::uint64_t seed = 0x9c0ffee;
};

struct GradCheckEntry {
  std::string path;
  std::size_t checked = 0;
  std::size_t worst_coord = 0;
  double max_rel_err = 0.0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> entries;

  std::string summary() const;
};

// Central finite differences of loss_fn against the gradients already stored
// in params (run forward+backward before calling). A failing check is a
// report, not an exception.
GradCheckReport grad_check(const std::function<double(const ParameterSet&)>& loss_fn,
                           ParameterSet& params, double tolerance,
                           const GradCheckOptions& options = {});

}  // namespace step
