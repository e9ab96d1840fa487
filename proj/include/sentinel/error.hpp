#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

// Pipeline stage an error belongs to; maps onto CLI exit codes.
enum class Stage { config, simulation, evaluation, io };

int exit_code(Stage stage);
const char* stage_name(Stage stage);

class Error : public std::runtime_error {
public:
    Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

// A parameter outside its valid domain. `field` names the offending parameter.
class InvalidParameter : public Error {
public:
    InvalidParameter(std::string field, const std::string& reason)
        : Error(Stage::config, field + ": " + reason), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Violated precondition on a call (wrong lag size, threshold outside (0,1), ...).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(Stage::evaluation, what) {}
};

class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what) : Error(Stage::simulation, what) {}
};

class EvaluationError : public Error {
public:
    explicit EvaluationError(const std::string& what) : Error(Stage::evaluation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(Stage::io, what) {}
};

}  // namespace sentinel
