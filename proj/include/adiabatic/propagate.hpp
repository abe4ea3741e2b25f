#pragma once

/// @file propagate.hpp
/// @brief Exponential-midpoint integration of i∂_τΦ = hΦ and of the
/// invariant-frame coefficient equation ċ = iMc, time-ordered exponentials
/// and the exact survival probabilities.

#include "core.hpp"
#include "frame.hpp"
#include "model.hpp"

namespace adiabatic
{

struct StateTrajectory
{
    TimeGrid grid;
    std::vector<CVector> states; ///< |Φ(τ_k)⟩
};

struct CoefficientTrajectory
{
    TimeGrid grid;
    std::vector<CVector> coeffs; ///< c_n(τ_k)
    std::size_t initial_level = 0;
};

struct EvolutionResult
{
    std::vector<double> p_exact;       ///< |c_m|²
    std::vector<double> p_direct;      ///< |⟨Φ_m^adia|Φ_m⟩|²
    std::vector<double> norm_residual; ///< |Σ|c_n|² − 1|
    CoefficientTrajectory coefficients;
    StateTrajectory states;
};

/// |Φ(τ_{k+1})⟩ = exp[−iΔτ h(τ_k + Δτ/2)] |Φ(τ_k)⟩.
inline StateTrajectory evolve_schrodinger(const HamiltonianModel& model, const CVector& initial_state,
                                          const TimeGrid& grid)
{
    if (initial_state.size() != static_cast<Eigen::Index>(model.dimension))
        throw InvalidArgument("evolve_schrodinger: initial state has the wrong dimension");
    if (std::abs(initial_state.norm() - 1.0) > 1e-10)
        throw InvalidArgument("evolve_schrodinger: initial state is not normalized");

    StateTrajectory out{grid, {}};
    out.states.reserve(grid.size());
    out.states.push_back(initial_state);
    const double dt = grid.step();
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const CMatrix h = model.evaluate(grid.tau(k) + 0.5 * dt);
        out.states.push_back(expi_hermitian(h, -dt) * out.states.back());
    }
    return out;
}

namespace detail
{

inline void check_coupling_samples(const std::vector<CMatrix>& M, const TimeGrid& grid, const char* what)
{
    if (M.size() != grid.size())
        throw GridMismatch(std::string(what) + ": " + std::to_string(M.size()) +
                           " coupling samples for a grid of " + std::to_string(grid.size()));
}

/// exp(iΔτ M(τ_k + Δτ/2)) with M linearly interpolated to the midpoint.
/// Non-Hermitian input is exponentiated as is (and then the step is not unitary).
inline CMatrix coefficient_step(const std::vector<CMatrix>& M, std::size_t k, double dt)
{
    return expi_general(0.5 * (M[k] + M[k + 1]), dt);
}

} // namespace detail

/// Solve ċ = iM(τ)c from c(0) = e_m with the exponential midpoint rule.
inline CoefficientTrajectory evolve_coefficients(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                 std::size_t initial_level)
{
    detail::check_coupling_samples(M, grid, "evolve_coefficients");
    const Eigen::Index d = M.front().rows();
    if (initial_level >= static_cast<std::size_t>(d))
        throw InvalidArgument("evolve_coefficients: initial level out of range");

    CoefficientTrajectory out{grid, {}, initial_level};
    out.coeffs.reserve(grid.size());
    CVector c = CVector::Zero(d);
    c(static_cast<Eigen::Index>(initial_level)) = 1.0;
    out.coeffs.push_back(c);
    const double dt = grid.step();
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        out.coeffs.push_back(detail::coefficient_step(M, k, dt) * out.coeffs.back());
    return out;
}

/// T exp[i∫₀^τ M] at the requested sample indices (all samples when empty),
/// as the ordered product of midpoint step exponentials.
inline std::vector<CMatrix> time_ordered_exponential(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                     std::vector<std::size_t> at = {})
{
    detail::check_coupling_samples(M, grid, "time_ordered_exponential");
    if (at.empty()) {
        at.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            at[k] = k;
    }
    std::vector<std::size_t> sorted = at;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() >= grid.size())
        throw InvalidArgument("time_ordered_exponential: sample index out of range");

    const Eigen::Index d = M.front().rows();
    const double dt = grid.step();
    std::vector<CMatrix> by_index;
    by_index.reserve(sorted.size());
    CMatrix u = CMatrix::Identity(d, d);
    std::size_t k = 0;
    for (std::size_t target : sorted) {
        for (; k < target; ++k)
            u = detail::coefficient_step(M, k, dt) * u;
        by_index.push_back(u);
    }
    std::vector<CMatrix> out;
    out.reserve(at.size());
    for (std::size_t idx : at) {
        const auto pos = std::lower_bound(sorted.begin(), sorted.end(), idx) - sorted.begin();
        out.push_back(by_index[static_cast<std::size_t>(pos)]);
    }
    return out;
}

/// P_m(τ_k) = |c_m(τ_k)|².
inline std::vector<double> survival_probability_exact(const CoefficientTrajectory& coeffs)
{
    std::vector<double> p;
    p.reserve(coeffs.coeffs.size());
    const auto m = static_cast<Eigen::Index>(coeffs.initial_level);
    for (const CVector& c : coeffs.coeffs)
        p.push_back(std::norm(c(m)));
    return p;
}

/// P(τ_k) = |⟨Φ_m^adia(τ_k)|Φ_m(τ_k)⟩|².
inline std::vector<double> survival_probability_direct(const StateTrajectory& states,
                                                       const InvariantFrame& frame, std::size_t level)
{
    require_same_grid(states.grid, frame.grid, "survival_probability_direct");
    if (level >= frame.dimension())
        throw InvalidArgument("survival_probability_direct: level out of range");
    std::vector<double> p;
    p.reserve(states.states.size());
    for (std::size_t k = 0; k < states.states.size(); ++k)
        p.push_back(std::norm(frame.basis[k].col(static_cast<Eigen::Index>(level)).dot(states.states[k])));
    return p;
}

/// |Σ_n |c_n(τ_k)|² − 1| per sample.
inline std::vector<double> norm_residuals(const CoefficientTrajectory& coeffs)
{
    std::vector<double> r;
    r.reserve(coeffs.coeffs.size());
    for (const CVector& c : coeffs.coeffs)
        r.push_back(std::abs(c.squaredNorm() - 1.0));
    return r;
}

/// max_k |Σ_n |c_n(τ_k)|² − 1|.
inline double conservation_residual(const CoefficientTrajectory& coeffs)
{
    double worst = 0.0;
    for (double r : norm_residuals(coeffs))
        worst = std::max(worst, r);
    return worst;
}

/// Run both routes for initial level m: Schrödinger from φ_m(0) projected on
/// the invariant basis, and the coefficient equation driven by frame.M.
inline EvolutionResult evolve(const HamiltonianModel& model, const InvariantFrame& frame, std::size_t level)
{
    if (level >= frame.dimension())
        throw InvalidArgument("evolve: initial level out of range");
    EvolutionResult out;
    out.coefficients = evolve_coefficients(frame.M, frame.grid, level);
    out.states = evolve_schrodinger(model, frame.basis.front().col(static_cast<Eigen::Index>(level)), frame.grid);
    out.p_exact = survival_probability_exact(out.coefficients);
    out.p_direct = survival_probability_direct(out.states, frame, level);
    out.norm_residual = norm_residuals(out.coefficients);
    return out;
}

} // namespace adiabatic
