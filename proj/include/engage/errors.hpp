#pragma once

#include <stdexcept>
#include <string>

namespace engage {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define ENGAGE_DEFINE_ERROR(Name)          \
  struct Name : Error {                    \
    using Error::Error;                    \
  }

ENGAGE_DEFINE_ERROR(ParseError);
ENGAGE_DEFINE_ERROR(SchemaError);
ENGAGE_DEFINE_ERROR(MissingLandmarkError);
ENGAGE_DEFINE_ERROR(DegenerateTorsoError);
ENGAGE_DEFINE_ERROR(AllInvalidPatchError);
ENGAGE_DEFINE_ERROR(ShortWindowError);
ENGAGE_DEFINE_ERROR(MissingHeadKeypointsError);
ENGAGE_DEFINE_ERROR(SingleClassDataError);
ENGAGE_DEFINE_ERROR(DimensionMismatchError);
ENGAGE_DEFINE_ERROR(InsufficientDataError);
ENGAGE_DEFINE_ERROR(MissingContextError);
ENGAGE_DEFINE_ERROR(BackendError);
ENGAGE_DEFINE_ERROR(AllMalformedError);
ENGAGE_DEFINE_ERROR(InfeasibleScriptError);
ENGAGE_DEFINE_ERROR(NoPreamblesError);
ENGAGE_DEFINE_ERROR(ConfigError);

#undef ENGAGE_DEFINE_ERROR

}  // namespace engage
