#pragma once

#include <stdexcept>
#include <string>

namespace stargraph {

// Process exit codes used by the CLI.
enum class ExitCode : int {
    Ok = 0,
    Config = 2,
    Numeric = 3,
    Io = 4,
};

class Error : public std::runtime_error {
  public:
    Error(ExitCode code, std::string module, const std::string& what)
        : std::runtime_error("[" + module + "] " + what),
          code_(code),
          module_(std::move(module)) {}

    ExitCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

  private:
    ExitCode code_;
    std::string module_;
};

struct ConfigError : Error {
    ConfigError(const std::string& module, const std::string& what)
        : Error(ExitCode::Config, module, what) {}
};

struct NumericError : Error {
    NumericError(const std::string& module, const std::string& what)
        : Error(ExitCode::Numeric, module, what) {}
};

struct IoError : Error {
    IoError(const std::string& module, const std::string& what)
        : Error(ExitCode::Io, module, what) {}
};

// graph-spectrum
struct PoleCollisionError : NumericError {
    explicit PoleCollisionError(const std::string& what) : NumericError("spectrum", what) {}
};
struct RootResidualError : NumericError {
    explicit RootResidualError(const std::string& what) : NumericError("spectrum", what) {}
};
struct SinGuardError : NumericError {
    explicit SinGuardError(const std::string& what) : NumericError("spectrum", what) {}
};

// coupling-matrices
struct OracleMismatchError : NumericError {
    explicit OracleMismatchError(const std::string& what) : NumericError("couplings", what) {}
};
struct NoConvergenceError : NumericError {
    NoConvergenceError(const std::string& module, const std::string& what)
        : NumericError(module, what) {}
};

// propagator
struct TruncationTooSmallError : NumericError {
    explicit TruncationTooSmallError(const std::string& what) : NumericError("propagator", what) {}
};
struct SupportViolationError : ConfigError {
    explicit SupportViolationError(const std::string& what) : ConfigError("propagator", what) {}
};
struct NormDriftError : NumericError {
    explicit NormDriftError(const std::string& what) : NumericError("propagator", what) {}
};
struct StepUnderflowError : NumericError {
    explicit StepUnderflowError(const std::string& what) : NumericError("propagator", what) {}
};

// analysis
struct MultiModalError : NumericError {
    explicit MultiModalError(const std::string& what) : NumericError("analysis", what) {}
};
struct NoOscillationError : NumericError {
    explicit NoOscillationError(const std::string& what) : NumericError("analysis", what) {}
};

// scenario-cli
struct SchemaError : ConfigError {
    explicit SchemaError(const std::string& what) : ConfigError("config", what) {}
};
struct UnknownPresetError : ConfigError {
    explicit UnknownPresetError(const std::string& what) : ConfigError("config", what) {}
};

}  // namespace stargraph
