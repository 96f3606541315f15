#pragma once

#include <stdexcept>
#include <string>

namespace abst {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// graph construction / enumeration
struct CycleError : Error { using Error::Error; };
struct SelfLoopError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct CapExceeded : Error { using Error::Error; };
struct NotATree : Error { using Error::Error; };

// generic argument problems
struct DimensionError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };

// numerics
struct FactorizationError : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct Unbounded : Error { using Error::Error; };

// cli / io; the exit-code contract lives in cli.cpp
struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ModelError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace abst
