#pragma once

/// @file spectrum.hpp
/// @brief Quasi-stationary eigenproblem on a time grid with continuity
/// tracking and gauge fixing, plus the nonadiabatic coupling γ_nm = i⟨φ_n|φ̇_m⟩.

#include "core.hpp"
#include "model.hpp"

#include <limits>
#include <type_traits>
#include <sstream>

namespace adiabatic
{

enum class Gauge
{
    ContinuityFixed, ///< discrete parallel transport: ⟨φ_n(τ_k)|φ_n(τ_{k+1})⟩ > 0
    Analytic         ///< the model's closed-form labelled frame
};

struct AdiabaticSpectrum
{
    TimeGrid grid;
    std::vector<RVector> eigenvalues;  ///< e_n(τ_k)
    std::vector<CMatrix> eigenvectors; ///< column n is φ_n(τ_k)
    Gauge gauge = Gauge::ContinuityFixed;
    double min_gap = 0.0;
    double min_overlap = 1.0; ///< min over k, n of |⟨φ_n(τ_k)|φ_n(τ_{k+1})⟩|

    std::size_t dimension() const
    {
        return eigenvectors.empty() ? 0 : static_cast<std::size_t>(eigenvectors.front().cols());
    }
};

namespace detail
{

/// Rotate each column so its largest-magnitude entry is real and positive.
inline void canonical_phase(CMatrix& vectors)
{
    for (Eigen::Index n = 0; n < vectors.cols(); ++n) {
        Eigen::Index best = 0;
        vectors.col(n).cwiseAbs().maxCoeff(&best);
        const Complex pivot = vectors(best, n);
        if (std::abs(pivot) > 0.0)
            vectors.col(n) *= std::conj(pivot) / std::abs(pivot);
    }
}

inline void check_gap(const RVector& values, double tau, double gap_tol, double& min_gap)
{
    std::vector<std::pair<double, Eigen::Index>> sorted;
    for (Eigen::Index n = 0; n < values.size(); ++n)
        sorted.emplace_back(values(n), n);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 1; j < sorted.size(); ++j) {
        const double gap = sorted[j].first - sorted[j - 1].first;
        min_gap = std::min(min_gap, gap);
        if (gap < gap_tol) {
            std::ostringstream msg;
            msg << "gap " << gap << " < " << gap_tol << " at tau=" << tau << " between levels "
                << sorted[j - 1].second << " and " << sorted[j].second;
            throw DegenerateGap(msg.str());
        }
    }
}

} // namespace detail

/// Solve h(τ_k)φ_n = e_n φ_n on every grid sample.
///
/// With Gauge::ContinuityFixed, levels at τ_{k+1} are matched to τ_k by
/// maximum overlap, so the label n follows a smooth branch rather than the
/// energy order, and each φ_n(τ_{k+1}) is rotated to make its overlap with
/// φ_n(τ_k) real positive. At τ_0 levels are in ascending energy order with
/// the largest component of each vector real positive.
inline AdiabaticSpectrum solve_quasistationary(const HamiltonianModel& model, const TimeGrid& grid,
                                               double gap_tol = 1e-6,
                                               Gauge gauge = Gauge::ContinuityFixed)
{
    if (model.dimension < 2)
        throw InvalidArgument("spectrum: model dimension must be >= 2");
    if (gauge == Gauge::Analytic && !model.has_analytic_frame())
        throw GaugeUnavailable("model '" + model.name + "' has no analytic frame");

    AdiabaticSpectrum out{grid, {}, {}, gauge, std::numeric_limits<double>::infinity(), 1.0};
    out.eigenvalues.reserve(grid.size());
    out.eigenvectors.reserve(grid.size());
    const auto d = static_cast<Eigen::Index>(model.dimension);
    const double min_assign = 1.0 / std::sqrt(2.0);

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double tau = grid.tau(k);
        Eigenpairs ep = gauge == Gauge::Analytic ? model.analytic_frame(tau)
                                                 : hermitian_eigen(model.evaluate(tau));
        if (ep.vectors.cols() != d)
            throw InvalidArgument("spectrum: model returned a matrix of the wrong dimension");
        detail::check_gap(ep.values, tau, gap_tol, out.min_gap);

        if (gauge == Gauge::ContinuityFixed) {
            if (k == 0) {
                detail::canonical_phase(ep.vectors);
            } else {
                const CMatrix& prev = out.eigenvectors.back();
                const CMatrix overlap = prev.adjoint() * ep.vectors;
                RVector values(d);
                CMatrix vectors(d, d);
                std::vector<bool> claimed(static_cast<std::size_t>(d), false);
                for (Eigen::Index i = 0; i < d; ++i) {
                    Eigen::Index j = 0;
                    const double best = overlap.row(i).cwiseAbs().maxCoeff(&j);
                    if (best < min_assign || claimed[static_cast<std::size_t>(j)]) {
                        std::ostringstream msg;
                        msg << "level " << i << " at tau=" << tau << " has best overlap " << best
                            << "; halve the step";
                        throw AssignmentAmbiguous(msg.str());
                    }
                    claimed[static_cast<std::size_t>(j)] = true;
                    const Complex ov = overlap(i, j);
                    values(i) = ep.values(j);
                    vectors.col(i) = ep.vectors.col(j) * (std::conj(ov) / std::abs(ov));
                }
                ep.values = std::move(values);
                ep.vectors = std::move(vectors);
            }
        }
        if (k > 0) {
            const CMatrix& prev = out.eigenvectors.back();
            for (Eigen::Index n = 0; n < d; ++n)
                out.min_overlap = std::min(out.min_overlap, std::abs(prev.col(n).dot(ep.vectors.col(n))));
        }
        out.eigenvalues.push_back(std::move(ep.values));
        out.eigenvectors.push_back(std::move(ep.vectors));
    }
    return out;
}

/// Max over samples and levels of ‖h φ_n − e_n φ_n‖.
inline double eigen_residual(const AdiabaticSpectrum& spectrum, const HamiltonianModel& model)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < spectrum.grid.size(); ++k) {
        const CMatrix h = model.evaluate(spectrum.grid.tau(k));
        const CMatrix& v = spectrum.eigenvectors[k];
        const CMatrix r = h * v - v * spectrum.eigenvalues[k].cast<Complex>().asDiagonal();
        worst = std::max(worst, r.colwise().norm().maxCoeff());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// γ
// ---------------------------------------------------------------------------

enum class GammaMethod
{
    FiniteDifference,
    HellmannFeynman
};

struct GammaMatrix
{
    TimeGrid grid;
    std::vector<CMatrix> gamma;          ///< γ_nm(τ_k)
    std::vector<RVector> berry_integral; ///< ∫₀^{τ_k} γ_nn dλ
    GammaMethod method = GammaMethod::FiniteDifference;
};

namespace detail
{

/// φ_n(τ_j) rotated so its overlap with φ_n(τ_k) is real positive.
inline CVector aligned(const AdiabaticSpectrum& s, std::size_t k, std::size_t j, Eigen::Index n)
{
    const CVector v = s.eigenvectors[j].col(n);
    const Complex ov = s.eigenvectors[k].col(n).dot(v);
    const double a = std::abs(ov);
    return a > 0.0 ? CVector(v * (std::conj(ov) / a)) : v;
}

/// Second-order derivative of uniformly sampled values (central inside,
/// one-sided at the ends).
template <typename Get>
inline auto sampled_derivative(std::size_t n, std::size_t k, double dt, Get&& at)
{
    using R = std::decay_t<decltype(at(0))>;
    if (k == 0)
        return R((-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dt));
    if (k + 1 == n)
        return R((3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * dt));
    return R((at(k + 1) - at(k - 1)) / (2.0 * dt));
}

inline CMatrix fd_h_derivative(const HamiltonianModel& model, const TimeGrid& grid, double tau)
{
    const double delta = 1e-4 * std::min(1.0, grid.step() * 10.0);
    if (tau - delta >= 0.0 && tau + delta <= grid.tau_end())
        return (model.evaluate(tau + delta) - model.evaluate(tau - delta)) / (2.0 * delta);
    const double s = tau - delta < 0.0 ? 1.0 : -1.0;
    return s * (-3.0 * model.evaluate(tau) + 4.0 * model.evaluate(tau + s * delta) -
                model.evaluate(tau + 2.0 * s * delta)) /
           (2.0 * delta);
}

} // namespace detail

/// Compute γ_nm(τ_k) = i⟨φ_n|φ̇_m⟩.
///
/// FiniteDifference differentiates the sampled eigenvectors; neighbours are
/// phase-aligned to the centre sample first, which is a no-op in the
/// parallel-transport gauge and keeps off-diagonal γ gauge covariant in any
/// other. The diagonal (Berry connection) is −d/dτ of the accumulated
/// overlap phase Σ_j arg⟨φ_n(τ_j)|φ_n(τ_{j+1})⟩. HellmannFeynman replaces the
/// off-diagonal with i⟨φ_n|ḣ|φ_m⟩/(e_m − e_n).
inline GammaMatrix compute_gamma(const AdiabaticSpectrum& spectrum, const HamiltonianModel& model,
                                 GammaMethod method = GammaMethod::FiniteDifference,
                                 bool allow_fd_derivative = true)
{
    if (method == GammaMethod::HellmannFeynman && !model.has_derivative() && !allow_fd_derivative)
        throw DerivativeUnavailable("model '" + model.name + "' has no analytic derivative");

    const TimeGrid& grid = spectrum.grid;
    const std::size_t n = grid.size();
    const double dt = grid.step();
    const auto d = static_cast<Eigen::Index>(spectrum.dimension());

    GammaMatrix out{grid, {}, {}, method};
    out.gamma.assign(n, CMatrix::Zero(d, d));

    // Accumulated overlap phase β_n(τ_k); ∫γ_nn = −β_n.
    std::vector<RVector> beta(n, RVector::Zero(d));
    for (std::size_t k = 1; k < n; ++k) {
        const CMatrix& a = spectrum.eigenvectors[k - 1];
        const CMatrix& b = spectrum.eigenvectors[k];
        for (Eigen::Index m = 0; m < d; ++m)
            beta[k](m) = beta[k - 1](m) + std::arg(a.col(m).dot(b.col(m)));
    }
    out.berry_integral.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        out.berry_integral[k] = -beta[k];

    for (std::size_t k = 0; k < n; ++k) {
        CMatrix& g = out.gamma[k];
        const CMatrix& phi = spectrum.eigenvectors[k];
        for (Eigen::Index m = 0; m < d; ++m) {
            g(m, m) = -detail::sampled_derivative(n, k, dt, [&](std::size_t j) { return beta[j](m); });
        }
        if (method == GammaMethod::FiniteDifference) {
            for (Eigen::Index m = 0; m < d; ++m) {
                const CVector dphi = detail::sampled_derivative(n, k, dt, [&](std::size_t j) -> CVector {
                    return j == k ? CVector(phi.col(m)) : detail::aligned(spectrum, k, j, m);
                });
                for (Eigen::Index r = 0; r < d; ++r)
                    if (r != m)
                        g(r, m) = I * phi.col(r).dot(dphi);
            }
        } else {
            const double tau = grid.tau(k);
            const CMatrix hdot = model.has_derivative() ? model.derivative(tau)
                                                        : detail::fd_h_derivative(model, grid, tau);
            const CMatrix coupling = phi.adjoint() * hdot * phi;
            const RVector& e = spectrum.eigenvalues[k];
            for (Eigen::Index m = 0; m < d; ++m)
                for (Eigen::Index r = 0; r < d; ++r)
                    if (r != m)
                        g(r, m) = I * coupling(r, m) / (e(m) - e(r));
        }
    }
    return out;
}

} // namespace adiabatic
