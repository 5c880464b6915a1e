#ifndef NLSLAB_ERROR_HPP
#define NLSLAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nlslab {

enum class ErrorKind {
  ContractViolation,
  NumericalFailure,
  HypothesisViolated,
  NoGroundState,
  DegenerateBasis,
  UnresolvedSpectrum,
  BlowUp,
  DecompositionLost,
  DegenerateConfiguration,
  VelocitySeparation,
};

const char* to_string(ErrorKind kind);

class LabError : public std::runtime_error {
public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw LabError(ErrorKind::ContractViolation, what);
}

}  // namespace nlslab

#endif
