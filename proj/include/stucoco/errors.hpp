#pragma once

#include <stdexcept>
#include <string>

namespace stucoco {

/// Argument outside the domain of an operation (negative time, t > T, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent inputs across modules, e.g. a posterior built under one
/// measure being integrated against another measure's drifts.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Observed data is incompatible with survival: the Bayes normalisation
/// constant of the filter fell below representable range.
class PosteriorCollapse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Spike reset requested at or below the conversion barrier.
class ConversionTriggered : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejection sampler accepted too few paths to say anything.
class OracleStarvation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stucoco
