// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pcflow {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Inputs whose shapes do not fit the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Inputs with valid shapes but invalid values (negative sqrt, bad index, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File read/write failures, including format violations.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pcflow
