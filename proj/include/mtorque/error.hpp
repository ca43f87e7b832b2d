#pragma once

#include <stdexcept>
#include <string>

namespace mtorque {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input rows: self-nominations, out-of-range ids, bad CSV.
class IngestError : public Error {
public:
    using Error::Error;
};

class UnknownLayerError : public Error {
public:
    using Error::Error;
};

/// A statistic whose denominator is empty (no nominations, no dyads, ...).
class UndefinedStatisticError : public Error {
public:
    using Error::Error;
};

/// Criticality requested for a pair that is disconnected in the composite.
class CriticalityUndefinedError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or incomplete data, e.g. a node missing from the panel.
class DataError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    SeparationError(const std::string &regressor)
        : Error("perfect separation detected on regressor '" + regressor + "'"),
          regressor_(regressor) {}
    const std::string &regressor() const noexcept { return regressor_; }

private:
    std::string regressor_;
};

class CollinearityError : public Error {
public:
    using Error::Error;
};

class PredictionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mtorque
