#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmswarm {

enum class Errc {
  // lut
  missing_column,
  non_monotonic_axis,
  empty_length,
  parse_error,
  length_not_in_grid,
  gmid_out_of_range,
  unknown_column,
  non_positive_current,
  invalid_range,
  // pso
  init_exhausted,
  // verify
  missing_placeholder_value,
  unknown_placeholder,
  simulator_not_found,
  non_zero_exit,
  timeout,
  output_parse_error,
  missing_testbench,
  // cli / io
  invalid_config,
  invalid_sizing,
  io_error,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gmswarm
