#pragma once

#include <stdexcept>
#include <string>

namespace mlif {

// Base for every domain failure raised by the library. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define MLIF_DECLARE_ERROR(Name)                                               \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
        const char* kind() const noexcept override { return #Name; }          \
    }

MLIF_DECLARE_ERROR(InvalidParameters);
MLIF_DECLARE_ERROR(ParseError);
MLIF_DECLARE_ERROR(NoRootInBracket);
MLIF_DECLARE_ERROR(InvalidConfig);
MLIF_DECLARE_ERROR(RealEigenvalues);
MLIF_DECLARE_ERROR(JacobianMismatch);
MLIF_DECLARE_ERROR(DegenerateTransform);
MLIF_DECLARE_ERROR(HardThresholdHasNoRate);
MLIF_DECLARE_ERROR(ThinningBoundExceeded);
MLIF_DECLARE_ERROR(InsufficientSegments);
MLIF_DECLARE_ERROR(DegenerateData);
MLIF_DECLARE_ERROR(NoConvergence);

#undef MLIF_DECLARE_ERROR

}  // namespace mlif
