#pragma once

#include <stdexcept>
#include <string>

namespace biharm4 {

// All contract violations surface as typed exceptions so callers (CLI, tests)
// can map them to exit codes without string matching.

struct NonZeroMean : std::runtime_error {
    explicit NonZeroMean(const std::string& what) : std::runtime_error(what) {}
};

struct NotDivergenceFree : std::runtime_error {
    explicit NotDivergenceFree(const std::string& what) : std::runtime_error(what) {}
};

struct NotOnSphere : std::runtime_error {
    explicit NotOnSphere(const std::string& what) : std::runtime_error(what) {}
};

struct NotOnManifold : std::runtime_error {
    explicit NotOnManifold(const std::string& what) : std::runtime_error(what) {}
};

struct OutsideTube : std::runtime_error {
    explicit OutsideTube(const std::string& what) : std::runtime_error(what) {}
};

struct CalibrationAmbiguous : std::runtime_error {
    explicit CalibrationAmbiguous(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct NotSmallEnough : std::runtime_error {
    explicit NotSmallEnough(const std::string& what) : std::runtime_error(what) {}
};

struct StepRejected : std::runtime_error {
    explicit StepRejected(const std::string& what) : std::runtime_error(what) {}
};

struct RadiusOutOfRange : std::runtime_error {
    explicit RadiusOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : std::logic_error {
    explicit ShapeMismatch(const std::string& what) : std::logic_error(what) {}
};

} // namespace biharm4
