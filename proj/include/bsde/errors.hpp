#pragma once

#include <stdexcept>
#include <string>

namespace bsde {

// Base class for every failure this library raises on purpose.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct GridError : SolverError {
    using SolverError::SolverError;
};

// Path segments disagree at a splice node or live on misaligned grids.
struct SpliceError : SolverError {
    using SolverError::SolverError;
};

// A coefficient or state value became non-finite during simulation.
struct NumericBlowupError : SolverError {
    using SolverError::SolverError;
};

struct CatalogError : SolverError {
    using SolverError::SolverError;
};

// A declared assumption constant failed its sampling audit.
struct AuditError : SolverError {
    using SolverError::SolverError;
};

// No admissible partition size below the configured cap.
struct PlannerOverflowError : SolverError {
    using SolverError::SolverError;
};

struct DegenerateConstantsError : SolverError {
    using SolverError::SolverError;
};

// Picard iteration failed to contract.
struct DivergenceError : SolverError {
    using SolverError::SolverError;
};

// Regression design matrix is rank deficient (after dropping constant columns).
struct BasisError : SolverError {
    using SolverError::SolverError;
};

// Requested interval fails the contraction admissibility inequality.
struct ContractionFailureError : SolverError {
    using SolverError::SolverError;
};

// Exponential-transform input left its valid domain (sign change, zero a_i, ...).
struct TransformDomainError : SolverError {
    using SolverError::SolverError;
};

// Perturbation deviation at or above the smallness threshold.
struct SmallnessError : SolverError {
    using SolverError::SolverError;
};

struct PreconditionError : SolverError {
    using SolverError::SolverError;
};

// Reflection target left the admissible domain or projection failed to settle.
struct ProjectionError : SolverError {
    using SolverError::SolverError;
};

struct ConfigError : SolverError {
    using SolverError::SolverError;
};

// A reference computation failed its self-convergence check.
struct OracleError : SolverError {
    using SolverError::SolverError;
};

}  // namespace bsde
