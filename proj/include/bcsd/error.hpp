// Copyright 2026 The bcsd Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace bcsd {

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user input (maps to CLI exit status 2).
class ConfigError : public Error
{
  public:
    using Error::Error;
};

/// One of the modelling assumptions A1-A4 does not hold.
class AssumptionError : public ConfigError
{
  public:
    AssumptionError(std::string assumption, const std::string& what)
        : ConfigError(assumption + ": " + what), assumption_(std::move(assumption))
    {
    }

    const std::string& assumption() const noexcept { return assumption_; }

  private:
    std::string assumption_;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error
{
  public:
    using Error::Error;
};

/// Mismatched shapes or other caller-side contract violations.
class ContractError : public Error
{
  public:
    using Error::Error;
};

class SolverError : public Error
{
  public:
    SolverError(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations)
    {
    }

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

  private:
    double residual_;
    int iterations_;
};

class IoError : public Error
{
  public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path)
    {
    }

    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

}  // namespace bcsd
