#include "gateway/error.hpp"

namespace gateway {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "InputError";
    case ErrorKind::Capability: return "CapabilityError";
    case ErrorKind::Numeric: return "NumericError";
    case ErrorKind::GaugeDegeneracy: return "GaugeDegeneracy";
    case ErrorKind::DarkState: return "DarkState";
    case ErrorKind::FewerPeaks: return "FewerPeaks";
    case ErrorKind::Underdetermined: return "Underdetermined";
    case ErrorKind::NearZeroDivision: return "NearZeroDivision";
    case ErrorKind::InconsistentData: return "InconsistentData";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::RankDeficientUnresolvable: return "RankDeficientUnresolvable";
    case ErrorKind::SignAmbiguity: return "SignAmbiguity";
  }
  return "Unknown";
}

}  // namespace gateway
