#pragma once

#include <string>

#include "legest/mhe_core.hpp"
#include "legest/sim.hpp"

namespace legest {

// Flat key-value config text: one `key = value...` assignment per line,
// `#` starts a comment, blank lines are skipped.  Covariance keys accept a
// single variance (isotropic), three values (diagonal), or nine values
// (full matrix, row-major).  Unknown keys and malformed values raise
// ConfigParse with the offending line number.
NoiseConfig parse_noise_config(const std::string& text);
SimConfig parse_sim_config(const std::string& text);

// File loaders: IoFailure if the file cannot be read, ConfigParse (prefixed
// with the path) on parse errors.
NoiseConfig load_noise_config(const std::string& path);
SimConfig load_sim_config(const std::string& path);

// Maps "position" / "velocity" / "both" onto the estimator's leg-odometry
// policy; returns false for anything else.
bool parse_lo_policy(const std::string& name, LoPolicy& out);

}  // namespace legest
