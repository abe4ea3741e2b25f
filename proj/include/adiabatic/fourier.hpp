#pragma once

/// @file fourier.hpp
/// @brief Linear-phase Fourier sufficient condition and the closed-form
/// coupling of the e^{-iτV} H e^{iτV} family.

#include "core.hpp"
#include "frame.hpp"
#include "model.hpp"

#include <span>

namespace adiabatic
{

inline constexpr double default_linearity_tol = 1e-6;
inline constexpr double default_resonance_tol = 1e-9;

/// Least-squares line α_km(τ) ≈ α0 + Ω0 τ over the whole grid.
struct PhaseLinearity
{
    std::size_t k = 0;
    std::size_t m = 0;
    bool is_linear = false;
    double alpha0 = 0.0;
    double Omega0 = 0.0;
    double max_residual = 0.0;
};

inline PhaseLinearity check_linear_phase(const InvariantFrame& frame, std::size_t k, std::size_t m,
                                         double linearity_tol = default_linearity_tol)
{
    if (k >= frame.dimension() || m >= frame.dimension() || k == m)
        throw InvalidArgument("check_linear_phase: need two distinct levels");
    const std::size_t n = frame.grid.size();
    const auto ki = static_cast<Eigen::Index>(k);
    const auto mi = static_cast<Eigen::Index>(m);

    double tbar = 0.0;
    double abar = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        tbar += frame.grid.tau(j);
        abar += frame.alpha[j](ki, mi);
    }
    tbar /= static_cast<double>(n);
    abar /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dx = frame.grid.tau(j) - tbar;
        sxy += dx * (frame.alpha[j](ki, mi) - abar);
        sxx += dx * dx;
    }

    PhaseLinearity out;
    out.k = k;
    out.m = m;
    out.Omega0 = sxy / sxx;
    out.alpha0 = abar - out.Omega0 * tbar;
    for (std::size_t j = 0; j < n; ++j) {
        const double fit = out.alpha0 + out.Omega0 * frame.grid.tau(j);
        out.max_residual = std::max(out.max_residual, std::abs(frame.alpha[j](ki, mi) - fit));
    }
    out.is_linear = out.max_residual < linearity_tol * (1.0 + std::abs(out.Omega0) * frame.grid.tau_end());
    return out;
}

struct Harmonic
{
    int l = 0;
    double omega = 0.0; ///< Ω_l = 2πl/T
    Complex gamma;      ///< Γ_l
};

struct FourierHarmonics
{
    double period = 0.0;
    std::size_t samples_per_period = 0;
    std::vector<Harmonic> harmonics; ///< l = −L..L
    double mean_square = 0.0;        ///< mean of |γ|² over one period
    double tail_energy = 0.0;        ///< mean_square − Σ_{|l|≤L} |Γ_l|²
};

/// Discrete Fourier coefficients of |γ_km|(τ) = Σ_l Γ_l e^{iΩ_l τ} over the
/// first period of the samples. The period must span an integer number of
/// grid steps.
inline FourierHarmonics fourier_decompose_coupling(std::span<const double> modulus, double dt, double period,
                                                   int n_harmonics)
{
    if (!(period > 0.0) || !(dt > 0.0))
        throw InvalidArgument("fourier: period and step must be positive");
    const double ratio = period / dt;
    const double whole = std::round(ratio);
    if (whole < 1.0 || std::abs(ratio - whole) > 1e-9 * std::max(1.0, ratio))
        throw PeriodMismatch("period " + std::to_string(period) + " is not a multiple of the step " +
                             std::to_string(dt));
    const auto N = static_cast<std::size_t>(whole);
    if (modulus.size() < N)
        throw PeriodMismatch("fourier: the grid covers less than one period");
    if (n_harmonics < 0)
        throw InvalidArgument("fourier: negative harmonic count");
    // |l| ≤ (N−1)/2 keeps ±l distinct; the Nyquist term of an even N stays in the tail
    const int L = std::min<int>(n_harmonics, static_cast<int>((N - 1) / 2));

    FourierHarmonics out;
    out.period = period;
    out.samples_per_period = N;
    for (std::size_t j = 0; j < N; ++j)
        out.mean_square += modulus[j] * modulus[j];
    out.mean_square /= static_cast<double>(N);

    double captured = 0.0;
    for (int l = -L; l <= L; ++l) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            const double angle = -2.0 * Pi * static_cast<double>(l) * static_cast<double>(j) / static_cast<double>(N);
            acc += modulus[j] * std::polar(1.0, angle);
        }
        acc /= static_cast<double>(N);
        out.harmonics.push_back({l, 2.0 * Pi * l / period, acc});
        captured += std::norm(acc);
    }
    out.tail_energy = std::max(0.0, out.mean_square - captured);
    return out;
}

/// |γ_km(τ_j)| on every grid sample.
inline std::vector<double> coupling_modulus(const InvariantFrame& frame, std::size_t k, std::size_t m)
{
    std::vector<double> out;
    out.reserve(frame.grid.size());
    for (const CMatrix& g : frame.gamma)
        out.push_back(std::abs(g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m))));
    return out;
}

struct HarmonicRatio
{
    int l = 0;
    double omega = 0.0;
    Complex gamma;
    double ratio = 0.0; ///< |Γ_l / (Ω0 + Ω_l)|, infinite when resonant
    bool resonant = false;
};

struct FourierConditionReport
{
    std::size_t k = 0;
    std::size_t m = 0;
    double Omega0 = 0.0;
    std::vector<HarmonicRatio> ratios;
    double max_ratio = 0.0;
    double threshold = 0.0;
    bool resonance = false;
    bool pass = false;
};

/// Per-harmonic ratios |Γ_l/(Ω0 + Ω_l)| and their maximum.
///
/// Requires a linear phase. A harmonic with |Ω0 + Ω_l| below resonance_tol
/// times the largest frequency involved is flagged resonant; if it carries
/// weight the condition fails outright.
inline FourierConditionReport fourier_condition_report(const PhaseLinearity& linearity,
                                                       const FourierHarmonics& harmonics, double threshold,
                                                       double resonance_tol = default_resonance_tol)
{
    if (!linearity.is_linear)
        throw PhaseNotLinear("alpha_" + std::to_string(linearity.k) + std::to_string(linearity.m) +
                             " deviates from a line by " + std::to_string(linearity.max_residual));
    FourierConditionReport out;
    out.k = linearity.k;
    out.m = linearity.m;
    out.Omega0 = linearity.Omega0;
    out.threshold = threshold;

    double scale = std::abs(linearity.Omega0);
    for (const auto& h : harmonics.harmonics)
        scale = std::max(scale, std::abs(h.omega));
    const double weight_floor = 1e-12 * std::max(std::sqrt(harmonics.mean_square), 1e-300);

    for (const auto& h : harmonics.harmonics) {
        HarmonicRatio r{h.l, h.omega, h.gamma, 0.0, false};
        const double denom = std::abs(linearity.Omega0 + h.omega);
        const bool weighted = std::abs(h.gamma) > weight_floor;
        if (denom <= resonance_tol * scale) {
            r.resonant = true;
            r.ratio = weighted ? INFINITY : 0.0;
            out.resonance = out.resonance || weighted;
        } else {
            r.ratio = std::abs(h.gamma) / denom;
        }
        out.max_ratio = std::max(out.max_ratio, r.ratio);
        out.ratios.push_back(r);
    }
    out.pass = !out.resonance && out.max_ratio < threshold;
    return out;
}

/// |Σ_l Γ_l (e^{i(Ω0+Ω_l)τ} − 1) / (i(Ω0+Ω_l))|², the finite-time value of
/// |∫₀^τ e^{iα}|γ| dλ|² for a linear phase (a resonant term contributes Γ_l τ).
inline double linear_phase_fourier_integral(const PhaseLinearity& linearity,
                                            const FourierHarmonics& harmonics, double tau)
{
    Complex acc = 0.0;
    for (const auto& h : harmonics.harmonics) {
        const double w = linearity.Omega0 + h.omega;
        if (std::abs(w) * tau < 1e-8)
            acc += h.gamma * tau;
        else
            acc += h.gamma * (std::exp(I * (w * tau)) - 1.0) / (I * w);
    }
    return std::norm(acc);
}

/// |∫₀^τ e^{iα_km}|γ_km| dλ|² by trapezoid on the frame samples.
inline double direct_phase_integral(const InvariantFrame& frame, std::size_t k, std::size_t m,
                                    std::size_t last_sample)
{
    const auto ki = static_cast<Eigen::Index>(k);
    const auto mi = static_cast<Eigen::Index>(m);
    const auto running = cumulative_trapezoid<Complex>(last_sample + 1, frame.grid.step(), [&](std::size_t j) {
        return std::polar(std::abs(frame.gamma[j](ki, mi)), frame.alpha[j](ki, mi));
    });
    return std::norm(running.back());
}

/// Max entrywise |M_num − M_closed| for an e^{-iτV} H e^{iτV} model, where
/// M_closed,nm = e^{−i(E_m−E_n)τ + i(V_mm−V_nn)τ} ⟨E_n|V|E_m⟩.
///
/// Frame levels are matched to the |E_n⟩ by overlap at τ = 0 and the
/// eigensolver's arbitrary initial phases are divided out.
inline double verify_hv_coupling(const HVParams& params, const InvariantFrame& frame)
{
    const auto d = static_cast<Eigen::Index>(params.energies.size());
    if (static_cast<Eigen::Index>(frame.dimension()) != d)
        throw InvalidArgument("verify_hv_coupling: frame dimension mismatch");
    const CMatrix basis = params.eigenbasis ? *params.eigenbasis : CMatrix(CMatrix::Identity(d, d));
    const CMatrix v_e = basis.adjoint() * params.V * basis;

    std::vector<Eigen::Index> label(static_cast<std::size_t>(d));
    RVector phase(d);
    const CMatrix overlap = basis.adjoint() * frame.basis.front();
    for (Eigen::Index n = 0; n < d; ++n) {
        Eigen::Index j = 0;
        overlap.col(n).cwiseAbs().maxCoeff(&j);
        label[static_cast<std::size_t>(n)] = j;
        phase(n) = std::arg(overlap(j, n));
    }

    double worst = 0.0;
    for (std::size_t k = 0; k < frame.grid.size(); ++k) {
        const double tau = frame.grid.tau(k);
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) {
                if (a == b)
                    continue;
                const Eigen::Index ea = label[static_cast<std::size_t>(a)];
                const Eigen::Index eb = label[static_cast<std::size_t>(b)];
                const double Ea = params.energies[static_cast<std::size_t>(ea)];
                const double Eb = params.energies[static_cast<std::size_t>(eb)];
                const double rate = -(Eb - Ea) + (v_e(eb, eb).real() - v_e(ea, ea).real());
                const Complex closed = std::exp(I * (rate * tau)) * v_e(ea, eb);
                const Complex numeric = frame.M[k](a, b) * std::exp(-I * (phase(b) - phase(a)));
                worst = std::max(worst, std::abs(numeric - closed));
            }
        }
    }
    return worst;
}

} // namespace adiabatic
