#include "gmswarm/error.hpp"

namespace gmswarm {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::missing_column: return "MissingColumn";
    case Errc::non_monotonic_axis: return "NonMonotonicAxis";
    case Errc::empty_length: return "EmptyLength";
    case Errc::parse_error: return "ParseError";
    case Errc::length_not_in_grid: return "LengthNotInGrid";
    case Errc::gmid_out_of_range: return "GmidOutOfRange";
    case Errc::unknown_column: return "UnknownColumn";
    case Errc::non_positive_current: return "NonPositiveCurrent";
    case Errc::invalid_range: return "InvalidRange";
    case Errc::init_exhausted: return "InitExhausted";
    case Errc::missing_placeholder_value: return "MissingPlaceholderValue";
    case Errc::unknown_placeholder: return "UnknownPlaceholder";
    case Errc::simulator_not_found: return "SimulatorNotFound";
    case Errc::non_zero_exit: return "NonZeroExit";
    case Errc::timeout: return "Timeout";
    case Errc::output_parse_error: return "OutputParseError";
    case Errc::missing_testbench: return "MissingTestbench";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_sizing: return "InvalidSizing";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace gmswarm
