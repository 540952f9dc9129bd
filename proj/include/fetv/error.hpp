#pragma once

#include <stdexcept>
#include <string>

namespace fetv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejected configuration: never starts a solve.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class TopologyError : public Error {
public:
    TopologyError(const std::string& what, int cell)
        : Error("cell " + std::to_string(cell) + ": " + what), cell_(cell) {}
    int cell() const { return cell_; }

private:
    int cell_;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace fetv
