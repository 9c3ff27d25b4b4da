// Copyright 2026 The besttime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace besttime {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! A profile or aggregate carries no mass, so no schedule can be formed.
//! Callers fall back to a baseline schedule.
class NoSignal : public Error
{
public:
    using Error::Error;
};

//! Not enough observations to estimate a distribution.
class InsufficientData : public Error
{
public:
    using Error::Error;
};

//! A user never received a reaction in the derivation window.
class EmptyHistory : public Error
{
public:
    using Error::Error;
};

//! Bad arguments or configuration. `field` names the offending input.
class ValidationError : public Error
{
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) { }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

//! File could not be read, or too many of its lines were malformed.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace besttime
