#pragma once

#include <stdexcept>
#include <string>

namespace frugal {

/// Base class for all errors raised by the library. Carries a stable
/// category tag so the C API and the CLI can map failures to status codes
/// without string matching.
class Error : public std::runtime_error {
public:
    enum class Category {
        dimension,   // shape mismatch between operands
        numerical,   // instability, singularity, degeneracy
        constraint,  // a precondition on the inputs was violated
        convergence, // an iterative method failed to converge
    };

    Error(Category category, std::string message)
        : std::runtime_error(std::move(message)), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

#define FRUGAL_DEFINE_ERROR(Name, Cat)                                        \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message)                             \
            : Error(Error::Category::Cat, std::string(#Name ": ") + message) {} \
    }

FRUGAL_DEFINE_ERROR(DimensionMismatch, dimension);
FRUGAL_DEFINE_ERROR(UnstableSystem, numerical);
FRUGAL_DEFINE_ERROR(NotSymmetric, constraint);
FRUGAL_DEFINE_ERROR(NoStabilizingSolution, numerical);
FRUGAL_DEFINE_ERROR(MaxIterationsExceeded, convergence);
FRUGAL_DEFINE_ERROR(SingularActionCovariance, numerical);
FRUGAL_DEFINE_ERROR(SingularStateCovariance, numerical);
FRUGAL_DEFINE_ERROR(UnstableStrategy, numerical);
FRUGAL_DEFINE_ERROR(DegenerateCovariance, numerical);
FRUGAL_DEFINE_ERROR(NoStableInitialization, numerical);
FRUGAL_DEFINE_ERROR(ConstraintViolated, constraint);
FRUGAL_DEFINE_ERROR(NotOrthogonal, constraint);
FRUGAL_DEFINE_ERROR(NegativeEigenvalue, numerical);
FRUGAL_DEFINE_ERROR(SeedNotConverged, constraint);
FRUGAL_DEFINE_ERROR(NonInvertibleUpdate, numerical);
FRUGAL_DEFINE_ERROR(InconsistentFixedPoint, numerical);
FRUGAL_DEFINE_ERROR(NotEquilibrium, constraint);
FRUGAL_DEFINE_ERROR(Diverged, numerical);
FRUGAL_DEFINE_ERROR(InvalidArgument, constraint);

#undef FRUGAL_DEFINE_ERROR

} // namespace frugal
