#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdesym {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// log/sqrt of a negative number, division by zero, ... `subexpr` is the printed node.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string subexpr)
        : Error(what + " in " + subexpr), subexpr_(std::move(subexpr)) {}
    const std::string& subexpr() const noexcept { return subexpr_; }

private:
    std::string subexpr_;
};

class DifferentiationError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class InversionError : public Error { using Error::Error; };
class NotStrongError : public Error { using Error::Error; };
class CatalogError : public Error { using Error::Error; };
class SymmetryPreconditionError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };

class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t path, std::size_t step)
        : Error(what + " (path " + std::to_string(path) + ", step " + std::to_string(step) + ")"),
          path_(path), step_(step) {}
    std::size_t path() const noexcept { return path_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t path_;
    std::size_t step_;
};

class FlowBlowUp : public Error {
public:
    explicit FlowBlowUp(double lambda_reached)
        : Error("flow blew up at lambda = " + std::to_string(lambda_reached)),
          lambda_reached_(lambda_reached) {}
    double lambda_reached() const noexcept { return lambda_reached_; }

private:
    double lambda_reached_;
};

}  // namespace sdesym
