#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridid/measurement.hpp"
#include "gridid/types.hpp"

namespace gridid {

// All floats are written with %.17g so identical runs give identical bytes.
std::string fmt_g17(double v);

// Measurement/state table: `t,bus,v_mag_pu,theta_rad,p_pu,q_pu` with a header
// row; theta_rad left empty when the set has no phase. One row per (t, bus),
// bus ids 1-based.
void save_measurements_csv(const MeasurementSet& ms, const std::string& path);
MeasurementSet load_measurements_csv(const std::string& path);

void save_states_csv(const TrueStates& truth, const std::string& path);

struct SweepRow {
  double noise_level = 0;
  std::string method;
  double rrmse_y = 0;
  bool failed = false;
  std::string error;
};
void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gridid
