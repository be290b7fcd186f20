#pragma once

#include <stdexcept>
#include <string>

namespace detour {

// Every error raised by the library derives from Error so callers can catch
// the whole family; the concrete type names the failed precondition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DETOUR_DEFINE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

DETOUR_DEFINE_ERROR(InvalidDistribution);
DETOUR_DEFINE_ERROR(DomainMismatch);
DETOUR_DEFINE_ERROR(IndexOutOfRange);
DETOUR_DEFINE_ERROR(NegativeInput);
DETOUR_DEFINE_ERROR(DegenerateReference);
DETOUR_DEFINE_ERROR(MissingCPT);
DETOUR_DEFINE_ERROR(ArityMismatch);
DETOUR_DEFINE_ERROR(InvalidNetwork);
DETOUR_DEFINE_ERROR(DomainViolation);
DETOUR_DEFINE_ERROR(DuplicateHidden);
DETOUR_DEFINE_ERROR(UnknownVariable);
DETOUR_DEFINE_ERROR(NoHiddenVariable);
DETOUR_DEFINE_ERROR(EmptyData);
DETOUR_DEFINE_ERROR(CardinalityOne);
DETOUR_DEFINE_ERROR(InsufficientData);
DETOUR_DEFINE_ERROR(ZeroBaseEntropy);
DETOUR_DEFINE_ERROR(ConfigInvalid);
DETOUR_DEFINE_ERROR(BundleMismatch);
DETOUR_DEFINE_ERROR(ReplayDivergence);
DETOUR_DEFINE_ERROR(ParseError);

#undef DETOUR_DEFINE_ERROR

}  // namespace detour
