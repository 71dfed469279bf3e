#pragma once

#include <stdexcept>
#include <string>

namespace fusedim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// camera model
struct BehindCamera : Error { using Error::Error; };
struct DenominatorNonPositive : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };

// stereo geometry
struct DegenerateBaseline : Error { using Error::Error; };
struct NonPositiveDisparity : Error { using Error::Error; };

// matching / post-processing
struct DimensionMismatch : Error { using Error::Error; };
struct EmptyDisparity : Error { using Error::Error; };
struct NoEdges : Error { using Error::Error; };
struct NonPositiveSpan : Error { using Error::Error; };

// LRF packet decoding
struct BadStart : Error { using Error::Error; };
struct BadLength : Error { using Error::Error; };
struct BadIndex : Error { using Error::Error; };
struct NoSweeps : Error { using Error::Error; };

// I/O and orchestration
struct IoFailure : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Wraps any stage error with the pipeline stage name attached.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_name(stage) {}
  std::string stage_name;
};

}  // namespace fusedim
