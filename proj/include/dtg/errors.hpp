/// @file errors.hpp
/// @brief Exception types shared by the harness.

#pragma once

#include <stdexcept>
#include <string>

namespace dtg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent corpus files.
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration; the CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A template expanded with a placeholder that has no value.
class TemplateError : public Error {
public:
    using Error::Error;
};

/// Malformed alignment or entity records.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Metric inputs of inconsistent shape.
class MetricInputError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class AuthenticationError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Provider rejected the request in a way retrying will not fix.
class NonTransientProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Transport hiccup or server-side overload; eligible for retry.
class TransientProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class RetriesExhaustedError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class UnscriptedRequestError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

}  // namespace dtg
