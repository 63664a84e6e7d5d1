#pragma once

#include <stdexcept>
#include <string>

namespace steamnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the supported domain (e.g. pressure outside the property fit).
class RangeError : public Error {
public:
    using Error::Error;
};

/// The boiler state left the envelope where the model equations are well posed.
class ModelValidityError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

/// Regressor matrix is rank deficient (insufficient excitation).
class IdentifiabilityError : public Error {
public:
    using Error::Error;
};

/// Identified or constructed dynamics are not Schur stable.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// A model does not satisfy the structural assumptions required by the upper layers.
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// Template model cannot anchor gain-consistent references (1 + sum f = 0).
class DegenerateTemplateError : public Error {
public:
    using Error::Error;
};

/// Model mismatch does not settle, so no finite disturbance bound exists.
class ModelQualityError : public Error {
public:
    using Error::Error;
};

/// No stabilizing feedback could be designed, or the closed loop is not Schur.
class GainDesignError : public Error {
public:
    using Error::Error;
};

/// Caller violated a documented precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// An optimization problem has no feasible point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Iterative numerics failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Drops the trailing "; " of a list of problems built up one item at a time.
inline std::string problem_list(std::string s)
{
    while (!s.empty() && (s.back() == ' ' || s.back() == ';'))
        s.pop_back();
    return s;
}

} // namespace steamnet
