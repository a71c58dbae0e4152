#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gp {

// Base for all library errors. `code()` is a stable, module-qualified
// identifier suitable for machine consumption (CLI exit diagnostics).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct IndexOutOfRange : Error {
    IndexOutOfRange(const std::string& what_index, long long value, long long bound)
        : Error("sparse.IndexOutOfRange",
                what_index + "=" + std::to_string(value) +
                    " out of range, bound=" + std::to_string(bound)) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg)
        : Error("sparse.DimensionMismatch", msg) {}
};

struct DivisionByZero : Error {
    DivisionByZero(long long row, long long col)
        : Error("sparse.DivisionByZero",
                "division by explicit zero at (" + std::to_string(row) + "," +
                    std::to_string(col) + ")") {}
};

struct UnsortedRun : Error {
    explicit UnsortedRun(std::size_t run_index)
        : Error("sorter.UnsortedRun",
                "input run " + std::to_string(run_index) + " is not sorted") {}
};

struct UnsortedInput : Error {
    explicit UnsortedInput(const std::string& where)
        : Error("sorter.UnsortedInput", "unsorted stream in " + where) {}
};

struct UnknownHandle : Error {
    explicit UnknownHandle(const std::string& handle)
        : Error("node.UnknownHandle", "no matrix stored under handle '" + handle + "'") {}
};

struct InvalidDestination : Error {
    InvalidDestination(long long dst, long long node_count)
        : Error("node.InvalidDestination",
                "destination " + std::to_string(dst) + " outside machine of " +
                    std::to_string(node_count) + " nodes") {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg)
        : Error("dist.GridMismatch", msg) {}
};

struct OwnerMapMismatch : Error {
    explicit OwnerMapMismatch(const std::string& msg)
        : Error("dist.OwnerMapMismatch", msg) {}
};

struct ParseError : Error {
    ParseError(std::size_t line, const std::string& reason)
        : Error("io.ParseError",
                "line " + std::to_string(line) + ": " + reason) {}
};

struct UnsupportedFeature : Error {
    explicit UnsupportedFeature(const std::string& feature)
        : Error("io.UnsupportedFeature", "unsupported: " + feature) {}
};

struct SpecInfeasible : Error {
    explicit SpecInfeasible(const std::string& msg)
        : Error("workload.SpecInfeasible", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg)
        : Error("cli.ConfigError", msg) {}
};

// Raised by the network watchdog when no packet makes progress.
struct SimulationStalled : Error {
    explicit SimulationStalled(long long cycle)
        : Error("net.SimulationStalled",
                "no packet progress for 10000 cycles at cycle " + std::to_string(cycle)) {}
};

}  // namespace gp
