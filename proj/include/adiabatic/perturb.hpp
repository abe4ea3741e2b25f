#pragma once

/// @file perturb.hpp
/// @brief Perturbative survival probabilities and adiabaticity conditions in
/// the invariant frame: first order, second order (Dyson), the first
/// iteration of the coefficient-ratio product, and the compact functional
/// built from exact ratios.
///
/// All inputs are coupling samples M(τ_k) on a uniform grid and the initial
/// level m. Running integrals are composite trapezoids; the second-order
/// double integral caches the inner integral, so every routine is linear in
/// the number of samples.

#include "core.hpp"
#include "propagate.hpp"

#include <map>
#include <optional>
#include <string>

namespace adiabatic
{

inline constexpr double default_condition_threshold = 1e-2;
inline constexpr double ratio_breakdown_floor = 0.1;

namespace detail
{

/// Sample index of τ_end on `grid` (nearest sample).
inline std::size_t sample_index(const TimeGrid& grid, double tau_end)
{
    const double x = tau_end / grid.step();
    if (!(x >= -1e-9) || x > static_cast<double>(grid.n_steps()) + 1e-6)
        throw InvalidArgument("tau_end=" + std::to_string(tau_end) + " outside the grid");
    return std::min(static_cast<std::size_t>(std::llround(std::max(0.0, x))), grid.n_steps());
}

/// I_k(τ_j) = ∫₀^{τ_j} M_km dλ for every k (entry m is zero).
inline std::vector<CVector> first_order_integrals(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                  std::size_t level)
{
    check_coupling_samples(M, grid, "perturb");
    const auto m = static_cast<Eigen::Index>(level);
    if (m >= M.front().rows())
        throw InvalidArgument("perturb: initial level out of range");
    return cumulative_trapezoid<CVector>(M.size(), grid.step(), [&](std::size_t j) -> CVector {
        CVector col = M[j].col(m);
        col(m) = 0.0;
        return col;
    });
}

/// K_k(τ_j) = ∫₀^{τ_j} dλ₁ M_mk(λ₁) ∫₀^{λ₁} dλ₂ M_km(λ₂), per k.
inline std::vector<CVector> second_order_kernel(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                std::size_t level, const std::vector<CVector>& inner)
{
    const auto m = static_cast<Eigen::Index>(level);
    return cumulative_trapezoid<CVector>(M.size(), grid.step(), [&](std::size_t j) -> CVector {
        CVector row = M[j].row(m).transpose();
        row(m) = 0.0;
        return row.cwiseProduct(inner[j]);
    });
}

inline double min_abs_level(const CoefficientTrajectory& coeffs, std::size_t last)
{
    double lo = INFINITY;
    const auto m = static_cast<Eigen::Index>(coeffs.initial_level);
    for (std::size_t j = 0; j <= last && j < coeffs.coeffs.size(); ++j)
        lo = std::min(lo, std::abs(coeffs.coeffs[j](m)));
    return lo;
}

inline void check_no_reversion(const CoefficientTrajectory& coeffs, std::size_t last)
{
    const double lo = min_abs_level(coeffs, last);
    if (lo < ratio_breakdown_floor)
        throw RatioBreakdown("min |c_m| = " + std::to_string(lo) + " < " +
                             std::to_string(ratio_breakdown_floor) +
                             "; the state reverses and the coefficient ratio is singular");
}

} // namespace detail

/// P₁(τ) = 1 − Σ_{k≠m} |∫₀^τ M_km dλ|².
inline std::vector<double> first_order_probability(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                   std::size_t level)
{
    const auto integrals = detail::first_order_integrals(M, grid, level);
    std::vector<double> p;
    p.reserve(integrals.size());
    for (const CVector& v : integrals)
        p.push_back(1.0 - v.squaredNorm());
    return p;
}

/// |∫₀^{τ_end} M_km dλ|² for every k ≠ m.
inline std::map<std::size_t, double> first_order_condition(const std::vector<CMatrix>& M,
                                                           const TimeGrid& grid, std::size_t level,
                                                           double tau_end)
{
    const auto integrals = detail::first_order_integrals(M, grid, level);
    const CVector& v = integrals[detail::sample_index(grid, tau_end)];
    std::map<std::size_t, double> out;
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (static_cast<std::size_t>(k) != level)
            out[static_cast<std::size_t>(k)] = std::norm(v(k));
    return out;
}

/// P₂(τ) = |(1 − ∫₀^τ dλ₁ ∫₀^{λ₁} dλ₂ M(λ₁)M(λ₂))_mm|².
inline std::vector<double> second_order_probability(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                    std::size_t level)
{
    const auto inner = detail::first_order_integrals(M, grid, level);
    const auto kernel = detail::second_order_kernel(M, grid, level, inner);
    std::vector<double> p;
    p.reserve(kernel.size());
    for (const CVector& k : kernel)
        p.push_back(std::norm(1.0 - k.sum()));
    return p;
}

/// |Σ_{k≠m} ∬ M_mk(λ₁) M_km(λ₂)|² at τ_end.
inline double second_order_condition(const std::vector<CMatrix>& M, const TimeGrid& grid, std::size_t level,
                                     double tau_end)
{
    const auto inner = detail::first_order_integrals(M, grid, level);
    const auto kernel = detail::second_order_kernel(M, grid, level, inner);
    return std::norm(kernel[detail::sample_index(grid, tau_end)].sum());
}

/// Coefficient-ratio product with the ratios at first order, c_k/c_m ≈ i∫₀^λ M_km:
/// P(τ) = Π_{k≠m} |exp{i∫₀^τ dλ [i∫₀^λ M_km(η)dη] M_mk(λ)}|².
///
/// When `exact` is given, throws RatioBreakdown if min |c_m| < 0.1 on the
/// grid (the expansion assumes the state never leaves level m).
inline std::vector<double> ratio_probability_first_iteration(const std::vector<CMatrix>& M,
                                                             const TimeGrid& grid, std::size_t level,
                                                             const CoefficientTrajectory* exact = nullptr)
{
    if (exact)
        detail::check_no_reversion(*exact, grid.n_steps());
    const auto inner = detail::first_order_integrals(M, grid, level);
    const auto kernel = detail::second_order_kernel(M, grid, level, inner);
    std::vector<double> p;
    p.reserve(kernel.size());
    for (const CVector& kv : kernel) {
        double prod = 1.0;
        for (Eigen::Index k = 0; k < kv.size(); ++k) {
            if (static_cast<std::size_t>(k) == level)
                continue;
            // i * ∫ (i I_k) M_mk = i * (i K_k)
            prod *= std::norm(std::exp(I * (I * kv(k))));
        }
        p.push_back(prod);
    }
    return p;
}

/// Value of the compact functional built from exact coefficient ratios.
struct CompactFunctional
{
    /// −Re{i Σ_{k≠m} ∫₀^{τ_end} (c_k/c_m) M_mk dλ} = −ln|c_m(τ_end)|, so
    /// exp(−2 value) = P_m(τ_end). Nonnegative up to quadrature error.
    double value = 0.0;
    /// The signed real part itself, Re{i Σ ∫ (c_k/c_m) M_mk} = ½ ln P_m.
    double raw = 0.0;
    std::map<std::size_t, double> per_level; ///< contribution of each k to `value`
};

inline CompactFunctional compact_condition_functional(const std::vector<CMatrix>& M,
                                                      const CoefficientTrajectory& exact,
                                                      const TimeGrid& grid, std::size_t level,
                                                      double tau_end)
{
    detail::check_coupling_samples(M, grid, "compact_condition_functional");
    require_same_grid(exact.grid, grid, "compact_condition_functional");
    if (exact.initial_level != level)
        throw InvalidArgument("compact_condition_functional: coefficients start from another level");
    const std::size_t last = detail::sample_index(grid, tau_end);
    detail::check_no_reversion(exact, last);

    const auto m = static_cast<Eigen::Index>(level);
    const Eigen::Index d = M.front().rows();
    const auto integral = cumulative_trapezoid<CVector>(last + 1, grid.step(), [&](std::size_t j) -> CVector {
        const CVector& c = exact.coeffs[j];
        CVector terms(d);
        for (Eigen::Index k = 0; k < d; ++k)
            terms(k) = k == m ? Complex(0.0) : I * (c(k) / c(m)) * M[j](m, k);
        return terms;
    });

    CompactFunctional out;
    const CVector& total = integral.back();
    for (Eigen::Index k = 0; k < d; ++k) {
        if (k == m)
            continue;
        out.per_level[static_cast<std::size_t>(k)] = -total(k).real();
        out.raw += total(k).real();
    }
    out.value = -out.raw;
    return out;
}

/// Value of the ratio condition with first-order ratios.
struct RatioCondition
{
    /// Re Σ_{k≠m} ∫₀^{τ_end} dλ M_mk(λ) ∫₀^λ dη M_km(η), the negation of
    /// Re{−Σ ∫ M_mk ∫ M_km}; equals Re of the second-order kernel.
    double value = 0.0;
    std::map<std::size_t, double> per_level;
};

inline RatioCondition ratio_condition_first_order(const std::vector<CMatrix>& M, const TimeGrid& grid,
                                                  std::size_t level, double tau_end)
{
    const auto inner = detail::first_order_integrals(M, grid, level);
    const auto kernel = detail::second_order_kernel(M, grid, level, inner);
    const CVector& kv = kernel[detail::sample_index(grid, tau_end)];
    RatioCondition out;
    for (Eigen::Index k = 0; k < kv.size(); ++k) {
        if (static_cast<std::size_t>(k) == level)
            continue;
        out.per_level[static_cast<std::size_t>(k)] = kv(k).real();
        out.value += kv(k).real();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Condition report
// ---------------------------------------------------------------------------

enum class Criterion
{
    FirstOrder,
    SecondOrder,
    RatioFirstIter,
    CompactFunctional,
    Fourier
};

inline const char* to_string(Criterion c)
{
    switch (c) {
    case Criterion::FirstOrder: return "FirstOrder";
    case Criterion::SecondOrder: return "SecondOrder";
    case Criterion::RatioFirstIter: return "RatioFirstIter";
    case Criterion::CompactFunctional: return "CompactFunctional";
    case Criterion::Fourier: return "Fourier";
    }
    return "?";
}

struct ConditionRecord
{
    Criterion id = Criterion::FirstOrder;
    double value = 0.0; ///< NaN when the criterion could not be evaluated
    std::map<std::size_t, double> per_level;
    double threshold = default_condition_threshold;
    bool pass = false;
    double tau_begin = 0.0;
    double tau_end = 0.0;
    std::string note; ///< error kind and message when value is NaN
};

struct ConditionReport
{
    std::vector<ConditionRecord> records;

    const ConditionRecord* find(Criterion id) const
    {
        for (const auto& r : records)
            if (r.id == id)
                return &r;
        return nullptr;
    }
};

inline ConditionRecord make_record(Criterion id, double value, std::map<std::size_t, double> per_level,
                                   double threshold, double tau_end)
{
    ConditionRecord r;
    r.id = id;
    r.value = value;
    r.per_level = std::move(per_level);
    r.threshold = threshold;
    r.pass = std::isfinite(value) && value < threshold;
    r.tau_end = tau_end;
    return r;
}

/// Evaluate the first-order, second-order, first-iteration ratio and compact
/// criteria at τ_end. The compact criterion needs the exact coefficients and
/// is recorded as NaN with a note when the ratio breaks down.
inline ConditionReport evaluate_conditions(const std::vector<CMatrix>& M, const CoefficientTrajectory& exact,
                                           const TimeGrid& grid, std::size_t level, double tau_end,
                                           double threshold = default_condition_threshold)
{
    ConditionReport report;
    const auto first = first_order_condition(M, grid, level, tau_end);
    double worst = 0.0;
    for (const auto& [k, v] : first)
        worst = std::max(worst, v);
    report.records.push_back(make_record(Criterion::FirstOrder, worst, first, threshold, tau_end));

    report.records.push_back(make_record(Criterion::SecondOrder,
                                         second_order_condition(M, grid, level, tau_end), {}, threshold,
                                         tau_end));

    const auto ratio = ratio_condition_first_order(M, grid, level, tau_end);
    report.records.push_back(
        make_record(Criterion::RatioFirstIter, ratio.value, ratio.per_level, threshold, tau_end));

    try {
        const auto compact = compact_condition_functional(M, exact, grid, level, tau_end);
        report.records.push_back(
            make_record(Criterion::CompactFunctional, compact.value, compact.per_level, threshold, tau_end));
    } catch (const RatioBreakdown& e) {
        auto r = make_record(Criterion::CompactFunctional, NAN, {}, threshold, tau_end);
        r.note = e.what();
        report.records.push_back(std::move(r));
    }
    return report;
}

} // namespace adiabatic
