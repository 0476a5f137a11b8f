// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "raybos/config.hpp"

namespace raybos {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;  // "measured ... expected ..." one-liner
};

struct SuiteResult {
  std::string suite;
  bool passed = false;
  std::vector<ValidationCheck> checks;
  std::vector<std::string> table;  // optional CSV rows (e.g. step-size vs error)
  double seconds = 0.0;
};

// Suite names: snell, rk4-convergence, lens-focus, energy, bos-uniform,
// bos-blob. Throws std::runtime_error for unknown names.
SuiteResult run_validation_suite(const std::string& name);
std::vector<std::string> validation_suite_names();

// Shared experiment configurations used by the validation suites, the
// acceptance tests and the shipped example configs.
ExperimentConfig make_bos_uniform_config();
ExperimentConfig make_bos_blob_config();
ExperimentConfig make_null_test_config();
ExperimentConfig make_determinism_config();

}  // namespace raybos
