#pragma once

#include <stdexcept>
#include <string>

namespace pwsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define PWSIM_DEFINE_ERROR(Name)                      \
  struct Name : Error {                               \
    using Error::Error;                               \
    Name() : Error(#Name) {}                          \
  }

PWSIM_DEFINE_ERROR(NonSquare);
PWSIM_DEFINE_ERROR(NonPowerOfTwoDimension);
PWSIM_DEFINE_ERROR(IndexOutOfRange);
PWSIM_DEFINE_ERROR(EmptyNetwork);
PWSIM_DEFINE_ERROR(UnassignedOpenLeg);
PWSIM_DEFINE_ERROR(RankBudgetExceeded);
PWSIM_DEFINE_ERROR(ZeroMassBlock);
PWSIM_DEFINE_ERROR(ParameterOutOfRange);
PWSIM_DEFINE_ERROR(NotSubmonomial);
PWSIM_DEFINE_ERROR(NonLSMChannel);
PWSIM_DEFINE_ERROR(NonCompleteChannel);
PWSIM_DEFINE_ERROR(InvalidParams);
PWSIM_DEFINE_ERROR(TooLarge);
PWSIM_DEFINE_ERROR(LengthMismatch);
PWSIM_DEFINE_ERROR(InsufficientDistinctStates);
PWSIM_DEFINE_ERROR(ParseError);

#undef PWSIM_DEFINE_ERROR

}  // namespace pwsim
