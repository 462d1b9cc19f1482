#pragma once

#include <stdexcept>
#include <string>

namespace mlmr {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Stationary solve failed; usually means a chain that is not irreducible
// slipped past validation.
class SingularSystem : public Error {
public:
    using Error::Error;
};

// Eigenvalue gap could not be determined (complex spectrum, or the root
// finder ran out of iterations).
class NotComputable : public Error {
public:
    using Error::Error;
};

// P(N,M) exceeds the enumeration cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

// A policy index was requested before every pair had been played once.
class NotInitialized : public Error {
public:
    using Error::Error;
};

// Constant L below the admissibility threshold for the logarithmic bound.
class ThresholdViolated : public Error {
public:
    using Error::Error;
};

// L(t) never reached the divergence threshold below the scan cap.
class DivergenceCapExceeded : public Error {
public:
    using Error::Error;
};

// Every arm attains mu*; delta_min is undefined.
class AllArmsOptimal : public Error {
public:
    using Error::Error;
};

// Config file could not be parsed; message carries line and field.
class ParseError : public Error {
public:
    using Error::Error;
};

// An invariant was violated by otherwise well-formed input; message names it.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace mlmr
