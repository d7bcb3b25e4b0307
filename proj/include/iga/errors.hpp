#pragma once

#include <stdexcept>
#include <string>

namespace iga {

// Parameter-domain evaluation outside [0,1].
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KnotVectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Patch decomposition has a T-junction or otherwise overlapping contact.
struct AdmissibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Interface trace spaces differ (discretization not fully matching).
struct MatchingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Global system has no Dirichlet constraints.
struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CG met a non-positive curvature direction.
struct IndefiniteOperatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DefinitenessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense eigensolver cap exceeded.
struct SizeCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Korn quotient with vanishing H1 seminorm.
struct QuotientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace iga
