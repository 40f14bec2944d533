#pragma once

// Versioned single-file text persistence for PoseModel. Doubles are written
// in shortest round-trip form, so a loaded model predicts bit-identically.

#include <string>

#include "proprio/svr.hpp"

namespace proprio {

void save_model(const PoseModel& pm, const std::string& path);

/// Rejects unknown format versions and mismatched block-order strings.
PoseModel load_model(const std::string& path);

}  // namespace proprio
