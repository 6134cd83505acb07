#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecmki {

// Input applied to the cell at one sample instant. Negative current
// discharges the cell, positive current charges it.
struct InputSample {
  double current_A = 0.0;
  double amb_temp_K = 298.15;
};

// Measured pair produced by either model: terminal voltage and surface
// temperature.
struct OutputSample {
  double voltage_V = 0.0;
  double surf_temp_K = 0.0;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter vector does not match the model's schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data; row is 1-based over data rows (header excluded).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what, std::size_t row_ = 0)
      : std::runtime_error(what), row(row_) {}
  std::size_t row = 0;
};

// Forward integration failure; step is the sample index at which the
// state stopped being finite.
struct SimulationError : std::runtime_error {
  SimulationError(const std::string& what, std::size_t step_)
      : std::runtime_error(what), step(step_) {}
  std::size_t step = 0;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ecmki
