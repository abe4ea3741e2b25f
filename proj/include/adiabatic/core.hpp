#pragma once

/// @file core.hpp
/// @brief Shared numeric types, the uniform time grid, error types and small
/// dense linear-algebra helpers used by every module.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adiabatic
{

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr Complex I{0.0, 1.0};
inline constexpr double Pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Whether a failure stems from bad input (config/usage) or from the numerics.
enum class ErrorClass
{
    Input,
    Numerical
};

/// Base class of every error raised by the library. `kind()` is the stable
/// identifier (e.g. "DegenerateGap") and `module()` names the raising module.
class Error : public std::runtime_error
{
public:
    Error(std::string kind, std::string module, ErrorClass cls, const std::string& detail)
        : std::runtime_error(module + ": " + kind + ": " + detail),
          kind_(std::move(kind)),
          module_(std::move(module)),
          class_(cls)
    {
    }

    const std::string& kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }
    ErrorClass error_class() const noexcept { return class_; }

private:
    std::string kind_;
    std::string module_;
    ErrorClass class_;
};

namespace detail
{
template <ErrorClass Cls>
struct ErrorOf : Error
{
    ErrorOf(const char* kind, const char* module, const std::string& detail)
        : Error(kind, module, Cls, detail)
    {
    }
};
} // namespace detail

#define ADIABATIC_DEFINE_ERROR(Name, Module, Cls)                                                  \
    struct Name : detail::ErrorOf<ErrorClass::Cls>                                                 \
    {                                                                                              \
        explicit Name(const std::string& detail) : ErrorOf(#Name, Module, detail) {}               \
    }

ADIABATIC_DEFINE_ERROR(InvalidArgument, "core", Input);
ADIABATIC_DEFINE_ERROR(GridMismatch, "core", Input);
ADIABATIC_DEFINE_ERROR(ZeroHamiltonian, "model", Numerical);
ADIABATIC_DEFINE_ERROR(GridRequired, "model", Input);
ADIABATIC_DEFINE_ERROR(NonHermitianInput, "model", Input);
ADIABATIC_DEFINE_ERROR(ParseError, "model", Input);
ADIABATIC_DEFINE_ERROR(NonHermitianSample, "model", Input);
ADIABATIC_DEFINE_ERROR(NonMonotoneTime, "model", Input);
ADIABATIC_DEFINE_ERROR(OutOfRange, "model", Input);
ADIABATIC_DEFINE_ERROR(DegenerateGap, "spectrum", Numerical);
ADIABATIC_DEFINE_ERROR(AssignmentAmbiguous, "spectrum", Numerical);
ADIABATIC_DEFINE_ERROR(GaugeUnavailable, "spectrum", Input);
ADIABATIC_DEFINE_ERROR(DerivativeUnavailable, "spectrum", Input);
ADIABATIC_DEFINE_ERROR(RatioBreakdown, "perturb", Numerical);
ADIABATIC_DEFINE_ERROR(PeriodMismatch, "fourier", Input);
ADIABATIC_DEFINE_ERROR(PhaseNotLinear, "fourier", Numerical);

#undef ADIABATIC_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

/// Uniform grid tau_k = k * dtau, k = 0..n_steps, dtau = tau_end / n_steps.
class TimeGrid
{
public:
    TimeGrid() : TimeGrid(1.0, 2) {}
    TimeGrid(double tau_end, std::size_t n_steps) : tau_end_(tau_end), n_steps_(n_steps)
    {
        if (!(tau_end > 0.0) || !std::isfinite(tau_end))
            throw InvalidArgument("grid tau_end must be positive and finite");
        if (n_steps < 2)
            throw InvalidArgument("grid n_steps must be >= 2");
    }

    double tau_end() const noexcept { return tau_end_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return n_steps_ + 1; }
    double step() const noexcept { return tau_end_ / static_cast<double>(n_steps_); }
    double tau(std::size_t k) const noexcept
    {
        return k == n_steps_ ? tau_end_ : static_cast<double>(k) * step();
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b)
    {
        return a.n_steps_ == b.n_steps_ && a.tau_end_ == b.tau_end_;
    }

private:
    double tau_end_;
    std::size_t n_steps_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what)
{
    if (!(a == b))
        throw GridMismatch(std::string(what) + ": inputs sampled on different grids");
}

// ---------------------------------------------------------------------------
// Linear algebra helpers
// ---------------------------------------------------------------------------

/// max_ij |A_ij - conj(A_ji)|
inline double hermiticity_defect(const CMatrix& a)
{
    if (a.rows() != a.cols())
        return INFINITY;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& a, double tol = 1e-12)
{
    return hermiticity_defect(a) < tol;
}

inline CMatrix hermitian_part(const CMatrix& a)
{
    return 0.5 * (a + a.adjoint());
}

/// Hermitian eigendecomposition with ascending eigenvalues.
struct Eigenpairs
{
    RVector values;
    CMatrix vectors; ///< column n is the eigenvector of values(n)
};

inline Eigenpairs hermitian_eigen(const CMatrix& h)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw Error("EigenFailure", "core", ErrorClass::Numerical, "eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// exp(i * s * A) for Hermitian A, via its eigendecomposition (exactly unitary).
inline CMatrix expi_hermitian(const CMatrix& a, double s)
{
    const Eigenpairs ep = hermitian_eigen(hermitian_part(a));
    CVector phases(ep.values.size());
    for (Eigen::Index n = 0; n < ep.values.size(); ++n)
        phases(n) = std::exp(I * (s * ep.values(n)));
    return ep.vectors * phases.asDiagonal() * ep.vectors.adjoint();
}

/// exp(i * s * A) for an arbitrary square A. Hermitian inputs take the
/// unitary eigen route; anything else goes through Pade scaling-and-squaring.
inline CMatrix expi_general(const CMatrix& a, double s, double hermitian_tol = 1e-12)
{
    if (is_hermitian(a, hermitian_tol))
        return expi_hermitian(a, s);
    const CMatrix arg = (I * s) * a;
    return arg.exp();
}

inline double spectral_norm_hermitian(const CMatrix& h)
{
    if (h.size() == 0)
        return 0.0;
    return hermitian_eigen(h).values.cwiseAbs().maxCoeff();
}

/// Composite trapezoid running integral of uniformly spaced samples.
template <typename T, typename F>
std::vector<T> cumulative_trapezoid(std::size_t n, double dt, F&& sample)
{
    std::vector<T> out(n);
    if (n == 0)
        return out;
    T prev = sample(0);
    out[0] = T(0.0 * prev);
    for (std::size_t k = 1; k < n; ++k) {
        T cur = sample(k);
        out[k] = out[k - 1] + 0.5 * dt * (prev + cur);
        prev = cur;
    }
    return out;
}

/// Unwrap a phase sequence so consecutive samples differ by less than pi.
inline void unwrap_in_place(std::vector<double>& phase)
{
    for (std::size_t k = 1; k < phase.size(); ++k) {
        double d = phase[k] - phase[k - 1];
        d -= 2.0 * Pi * std::round(d / (2.0 * Pi));
        phase[k] = phase[k - 1] + d;
    }
}

} // namespace adiabatic
