#pragma once
#include <stdexcept>
#include <string>

namespace vdflow {

// Base for every numerical failure raised by the library. CLI maps these to exit code 2.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "SolverError"; }
};

#define VDFLOW_DECLARE_ERROR(Name)                                          \
  class Name : public SolverError {                                         \
   public:                                                                  \
    using SolverError::SolverError;                                         \
    const char* kind() const noexcept override { return #Name; }           \
  };

VDFLOW_DECLARE_ERROR(SingularJacobian)
VDFLOW_DECLARE_ERROR(SeriesDiverged)
VDFLOW_DECLARE_ERROR(NoConvergence)
VDFLOW_DECLARE_ERROR(ContractionViolated)
VDFLOW_DECLARE_ERROR(CompatibilityViolated)
VDFLOW_DECLARE_ERROR(PicardNoConvergence)
VDFLOW_DECLARE_ERROR(SelfIntersection)
VDFLOW_DECLARE_ERROR(DegenerateInput)
VDFLOW_DECLARE_ERROR(CflViolated)
VDFLOW_DECLARE_ERROR(JumpCapExceeded)

#undef VDFLOW_DECLARE_ERROR

// Configuration problems (bad keys, bad values). CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vdflow
