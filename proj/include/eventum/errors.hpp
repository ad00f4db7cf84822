#pragma once

#include <stdexcept>
#include <string>

namespace eventum {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix dimensions do not match the operation's contract.
struct ShapeError : Error {
    using Error::Error;
};

/// A constructed dimension would exceed the configured cap.
struct SizeError : Error {
    using Error::Error;
};

/// Input claimed to be an isometry fails v*v = I.
struct IsometryError : Error {
    using Error::Error;
};

/// Input claimed to be unitary fails U*U = I.
struct UnitarityError : Error {
    using Error::Error;
};

/// A value-level invariant (normalization, positivity, completeness) failed.
struct InvariantError : Error {
    using Error::Error;
};

/// Strict-mode model with a fully materialized finite label set and a
/// non-injective transition map. Branching needs an infinite label set;
/// a finite window cannot satisfy the strict block conditions.
struct FiniteBranchingError : InvariantError {
    using InvariantError::InvariantError;
};

/// Operation requested in the wrong block mode.
struct ModeError : Error {
    using Error::Error;
};

/// Label not present in the model's materialized window.
struct LabelError : Error {
    using Error::Error;
};

/// Evolution stepped past the materialized window.
struct HorizonError : Error {
    using Error::Error;
};

/// Kraus family violates completeness or labeling conventions.
struct KrausError : Error {
    using Error::Error;
};

/// Constructor parameter out of range.
struct ParameterError : Error {
    using Error::Error;
};

/// Model lacks the structure an operation requires (e.g. not shift-type).
struct StructureError : Error {
    using Error::Error;
};

/// Malformed input file.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace eventum
