#pragma once

#include <stdexcept>
#include <string>

namespace scdyn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One exception type per error contract; callers can catch the family or a
// specific failure.
struct InvalidParameterError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct SpanError : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct CostGuardError : Error { using Error::Error; };
struct NotAProbabilityError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct InfiniteSmearingError : Error { using Error::Error; };
struct LeakageError : Error { using Error::Error; };
struct LocalizationResolutionError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace scdyn
