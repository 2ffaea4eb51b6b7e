// Copyright (C) 2026 The Proact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace proact {

/// Root of every error thrown by the library. The CLI maps the three
/// families below onto exit codes (config 1, data 2, numeric 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- configuration / usage family -------------------------------------------

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// --- data / format family ----------------------------------------------------

class DataError : public Error {
 public:
  using Error::Error;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

class LabelError : public DataError {
 public:
  using DataError::DataError;
};

class StreamError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class MetricError : public DataError {
 public:
  using DataError::DataError;
};

// --- numeric family ----------------------------------------------------------

class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public NumericError {
 public:
  using NumericError::NumericError;
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SamplingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace proact
