#pragma once

/// @file frame.hpp
/// @brief U(1)-invariant adiabatic basis, geometric potential and the
/// coupling matrix M that drives the coefficient dynamics.

#include "core.hpp"
#include "spectrum.hpp"

namespace adiabatic
{

/// A sample where |γ_mn| was too small for arg γ_mn to mean anything.
struct UndefinedArg
{
    std::size_t sample;
    Eigen::Index m;
    Eigen::Index n;
};

struct GeometricPotential
{
    std::vector<RMatrix> xi;    ///< ξ_mn(τ_k)
    std::vector<RMatrix> delta; ///< Δ_mn = dξ_mn/dτ
    std::vector<UndefinedArg> undefined;
};

struct InvariantFrame
{
    TimeGrid grid;
    std::vector<RVector> eigenvalues;     ///< e_n(τ_k), copied from the spectrum
    std::vector<RVector> dynamical_phase; ///< Θ_m = ∫₀^τ (e_m − γ_mm) dλ
    std::vector<CMatrix> basis;           ///< column m is e^{−iΘ_m} φ_m
    std::vector<CMatrix> gamma;           ///< γ_nm, copied from the gamma record
    GeometricPotential geometry;
    std::vector<RMatrix> alpha;           ///< α_mn = ∫(e_m − e_n) + ξ_mn
    std::vector<CMatrix> M;               ///< coupling matrix, Hermitian, zero diagonal

    std::size_t dimension() const
    {
        return basis.empty() ? 0 : static_cast<std::size_t>(basis.front().cols());
    }
};

inline constexpr double undefined_arg_threshold = 1e-14;

/// ξ_mn(τ) = ∫₀^τ (γ_nn − γ_mm) dη + arg γ_mn(τ), arg unwrapped along τ.
///
/// Samples where |γ_mn| < 1e-14 are reported in `undefined` and their arg is
/// interpolated linearly from the nearest defined neighbours (nearest value at
/// the ends, zero if the pair never couples).
inline GeometricPotential compute_geometric_potential(const GammaMatrix& gamma)
{
    const std::size_t n = gamma.grid.size();
    const double dt = gamma.grid.step();
    const Eigen::Index d = gamma.gamma.empty() ? 0 : gamma.gamma.front().rows();

    GeometricPotential out;
    out.xi.assign(n, RMatrix::Zero(d, d));
    out.delta.assign(n, RMatrix::Zero(d, d));

    std::vector<double> arg(n);
    std::vector<bool> defined(n);
    for (Eigen::Index m = 0; m < d; ++m) {
        for (Eigen::Index r = 0; r < d; ++r) {
            if (r == m)
                continue;
            std::vector<std::size_t> good;
            std::vector<double> good_arg;
            for (std::size_t k = 0; k < n; ++k) {
                const Complex g = gamma.gamma[k](m, r);
                defined[k] = std::abs(g) >= undefined_arg_threshold;
                if (defined[k]) {
                    good.push_back(k);
                    good_arg.push_back(std::arg(g));
                } else {
                    out.undefined.push_back({k, m, r});
                }
            }
            unwrap_in_place(good_arg);
            if (good.empty()) {
                std::fill(arg.begin(), arg.end(), 0.0);
            } else {
                std::size_t next = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    while (next < good.size() && good[next] < k)
                        ++next;
                    if (next < good.size() && good[next] == k) {
                        arg[k] = good_arg[next];
                    } else if (next == 0) {
                        arg[k] = good_arg.front();
                    } else if (next == good.size()) {
                        arg[k] = good_arg.back();
                    } else {
                        const double w = static_cast<double>(k - good[next - 1]) /
                                         static_cast<double>(good[next] - good[next - 1]);
                        arg[k] = (1.0 - w) * good_arg[next - 1] + w * good_arg[next];
                    }
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const RVector& b = gamma.berry_integral[k];
                out.xi[k](m, r) = (b(r) - b(m)) + arg[k];
            }
            for (std::size_t k = 0; k < n; ++k)
                out.delta[k](m, r) =
                    detail::sampled_derivative(n, k, dt, [&](std::size_t j) { return out.xi[j](m, r); });
        }
    }
    return out;
}

/// Dress every φ_m with exp(−iΘ_m), Θ_m = ∫₀^τ (e_m − γ_mm) dλ.
///
/// The energy integral is a composite trapezoid; the Berry part is the
/// accumulated overlap phase carried by `gamma.berry_integral`, so the result
/// is unchanged (to rounding) by any redressing φ_m → e^{if_m}φ_m, f_m(0) = 0.
inline InvariantFrame build_invariant_basis(const AdiabaticSpectrum& spectrum, const GammaMatrix& gamma)
{
    require_same_grid(spectrum.grid, gamma.grid, "build_invariant_basis");
    const std::size_t n = spectrum.grid.size();
    const double dt = spectrum.grid.step();
    const auto d = static_cast<Eigen::Index>(spectrum.dimension());

    InvariantFrame frame;
    frame.grid = spectrum.grid;
    frame.eigenvalues = spectrum.eigenvalues;
    frame.gamma = gamma.gamma;

    const auto energy_integral = cumulative_trapezoid<RVector>(
        n, dt, [&](std::size_t k) -> RVector { return spectrum.eigenvalues[k]; });
    frame.dynamical_phase.resize(n);
    frame.basis.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0)
            frame.dynamical_phase[k] = RVector::Zero(d);
        else
            frame.dynamical_phase[k] = energy_integral[k] - gamma.berry_integral[k];
        CVector phase(d);
        for (Eigen::Index m = 0; m < d; ++m)
            phase(m) = std::exp(-I * frame.dynamical_phase[k](m));
        frame.basis[k] = spectrum.eigenvectors[k] * phase.asDiagonal();
    }
    return frame;
}

/// M_{k'k''} = e^{iα_{k'k''}} |γ_{k'k''}|, α = ∫₀^τ (e_{k'} − e_{k''}) + ξ_{k'k''}(τ).
///
/// Assembled as e^{i(Θ_{k'} − Θ_{k''})} γ_{k'k''}, which is the same number
/// without going through arg γ, then projected on its Hermitian part with a
/// zero diagonal. Also fills `frame.geometry` and `frame.alpha`.
inline void build_coupling_matrix(InvariantFrame& frame, const GammaMatrix& gamma)
{
    require_same_grid(frame.grid, gamma.grid, "build_coupling_matrix");
    const std::size_t n = frame.grid.size();
    const double dt = frame.grid.step();
    const auto d = static_cast<Eigen::Index>(frame.dimension());

    frame.geometry = compute_geometric_potential(gamma);
    const auto energy_integral = cumulative_trapezoid<RVector>(
        n, dt, [&](std::size_t k) -> RVector { return frame.eigenvalues[k]; });

    frame.alpha.assign(n, RMatrix::Zero(d, d));
    frame.M.assign(n, CMatrix::Zero(d, d));
    for (std::size_t k = 0; k < n; ++k) {
        const RVector& theta = frame.dynamical_phase[k];
        CMatrix m = CMatrix::Zero(d, d);
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) {
                if (a == b)
                    continue;
                frame.alpha[k](a, b) = energy_integral[k](a) - energy_integral[k](b) + frame.geometry.xi[k](a, b);
                m(a, b) = std::exp(I * (theta(a) - theta(b))) * gamma.gamma[k](a, b);
            }
        }
        frame.M[k] = hermitian_part(m);
        frame.M[k].diagonal().setZero();
    }
}

/// Spectrum + γ → complete invariant frame with M.
inline InvariantFrame build_frame(const AdiabaticSpectrum& spectrum, const GammaMatrix& gamma)
{
    InvariantFrame frame = build_invariant_basis(spectrum, gamma);
    build_coupling_matrix(frame, gamma);
    return frame;
}

/// Second route to M: ⟨Φ_{k'}|i∂_τ|Φ_{k''}⟩ by differentiating the sampled
/// invariant-basis vectors directly. Diagonal zeroed, no Hermitian projection.
inline std::vector<CMatrix> coupling_matrix_direct(const InvariantFrame& frame)
{
    const std::size_t n = frame.grid.size();
    const double dt = frame.grid.step();
    const auto d = static_cast<Eigen::Index>(frame.dimension());
    std::vector<CMatrix> out(n, CMatrix::Zero(d, d));
    for (std::size_t k = 0; k < n; ++k) {
        const CMatrix deriv =
            detail::sampled_derivative(n, k, dt, [&](std::size_t j) -> CMatrix { return frame.basis[j]; });
        out[k] = I * (frame.basis[k].adjoint() * deriv);
        out[k].diagonal().setZero();
    }
    return out;
}

} // namespace adiabatic
