#pragma once

/// @file model.hpp
/// @brief Time-dependent Hamiltonian contract, dimensionless normalization and
/// the built-in models: rotating-field spin-1/2 (systems a and b), the
/// conjugated family e^{-iτV} H e^{iτV}, tabulated samples and linear paths.

#include "core.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace adiabatic
{

/// A dimensionless Hermitian h(τ) available on demand.
///
/// `derivative` and `analytic_frame` are optional: models that know ḣ or a
/// closed-form labelled eigenbasis (with its own smooth phase) provide them.
/// Models are immutable after construction and `evaluate` is safe to call
/// concurrently.
struct HamiltonianModel
{
    std::size_t dimension = 0;
    std::function<CMatrix(double)> evaluate;
    std::function<CMatrix(double)> derivative;
    std::function<Eigenpairs(double)> analytic_frame;
    std::string name;
    std::optional<double> period;

    bool has_derivative() const { return static_cast<bool>(derivative); }
    bool has_analytic_frame() const { return static_cast<bool>(analytic_frame); }
};

struct NormalizationRecord
{
    double reference_energy = 1.0; ///< E_m(0) in raw units
    double time_scale = 1.0;       ///< t = time_scale * τ
    std::size_t initial_level = 0;
};

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

/// Rescale a raw H(t) into h(τ) = H(t(τ)) / E_m(0), t = ħτ / E_m(0).
///
/// E_m(0) is the `initial_level`-th eigenvalue of H(0) in ascending order.
/// When it vanishes (|E_m(0)| < 1e-12 ‖H(0)‖) the spectral norm of H(0) is
/// used instead. A negative E_m(0) is kept as is, so τ then runs against t.
inline std::pair<HamiltonianModel, NormalizationRecord>
normalize(std::function<CMatrix(double)> raw, std::size_t initial_level,
          std::function<CMatrix(double)> raw_derivative = {}, double hbar = 1.0)
{
    if (!raw)
        throw InvalidArgument("normalize: empty evaluator");
    const CMatrix h0 = raw(0.0);
    if (h0.rows() == 0 || h0.rows() != h0.cols())
        throw NonHermitianInput("normalize: H(0) is not square");
    if (!is_hermitian(h0))
        throw NonHermitianInput("normalize: H(0) is not Hermitian");
    if (initial_level >= static_cast<std::size_t>(h0.rows()))
        throw InvalidArgument("normalize: initial_level out of range");

    const Eigenpairs ep = hermitian_eigen(h0);
    const double norm = ep.values.cwiseAbs().maxCoeff();
    if (norm == 0.0)
        throw ZeroHamiltonian("H(0) vanishes identically");

    double reference = ep.values(static_cast<Eigen::Index>(initial_level));
    if (std::abs(reference) < 1e-12 * norm)
        reference = norm;

    NormalizationRecord record{reference, hbar / reference, initial_level};
    const double scale = record.time_scale;

    HamiltonianModel model;
    model.dimension = static_cast<std::size_t>(h0.rows());
    model.name = "normalized";
    model.evaluate = [raw, scale, reference](double tau) -> CMatrix {
        return raw(scale * tau) / reference;
    };
    if (raw_derivative) {
        model.derivative = [raw_derivative, scale, reference](double tau) -> CMatrix {
            return raw_derivative(scale * tau) * (scale / reference);
        };
    }
    return {std::move(model), record};
}

// ---------------------------------------------------------------------------
// Simple closed-form models
// ---------------------------------------------------------------------------

inline HamiltonianModel make_constant_model(const CMatrix& h, std::string name = "constant")
{
    if (!is_hermitian(h))
        throw NonHermitianInput("constant model matrix is not Hermitian");
    HamiltonianModel model;
    model.dimension = static_cast<std::size_t>(h.rows());
    model.name = std::move(name);
    model.evaluate = [h](double) { return h; };
    const CMatrix zero = CMatrix::Zero(h.rows(), h.cols());
    model.derivative = [zero](double) { return zero; };
    return model;
}

/// h(τ) = h0 + τ h1.
inline HamiltonianModel make_linear_model(const CMatrix& h0, const CMatrix& h1,
                                          std::string name = "linear")
{
    if (h0.rows() != h1.rows() || h0.cols() != h1.cols())
        throw InvalidArgument("linear model: h0 and h1 differ in shape");
    if (!is_hermitian(h0) || !is_hermitian(h1))
        throw NonHermitianInput("linear model matrices must be Hermitian");
    HamiltonianModel model;
    model.dimension = static_cast<std::size_t>(h0.rows());
    model.name = std::move(name);
    model.evaluate = [h0, h1](double tau) -> CMatrix { return h0 + tau * h1; };
    model.derivative = [h1](double) { return h1; };
    return model;
}

// ---------------------------------------------------------------------------
// Spin-1/2 in a rotating field
// ---------------------------------------------------------------------------

enum class SpinVariant
{
    A,
    B
};

struct SpinHalfParams
{
    double omega0 = 1.0;
    double omega = 0.1;
    double theta = Pi / 4;
    SpinVariant variant = SpinVariant::A;
};

namespace detail
{

inline CMatrix spin_a_matrix(const SpinHalfParams& p, double tau)
{
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    const Complex rot = std::exp(-I * (p.omega * tau));
    CMatrix h(2, 2);
    h(0, 0) = c;
    h(0, 1) = s * rot;
    h(1, 0) = s * std::conj(rot);
    h(1, 1) = -c;
    return (-0.5 * p.omega0) * h;
}

inline CMatrix spin_a_derivative(const SpinHalfParams& p, double tau)
{
    const double s = std::sin(p.theta);
    const Complex rot = std::exp(-I * (p.omega * tau));
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 1) = -I * p.omega * s * rot;
    d(1, 0) = std::conj(d(0, 1));
    return (-0.5 * p.omega0) * d;
}

/// Labelled eigenbasis R(τ)φ_n(0), R = exp(-iωτσ_z/2).
inline Eigenpairs spin_a_frame(const SpinHalfParams& p, double tau)
{
    const double ch = std::cos(0.5 * p.theta);
    const double sh = std::sin(0.5 * p.theta);
    const Complex up = std::exp(-0.5 * I * (p.omega * tau));
    const Complex down = std::conj(up);
    Eigenpairs ep;
    ep.values.resize(2);
    // For omega0 > 0 the field-aligned state is the lower level.
    ep.values << -0.5 * p.omega0, 0.5 * p.omega0;
    ep.vectors.resize(2, 2);
    ep.vectors(0, 0) = ch * up;
    ep.vectors(1, 0) = sh * down;
    ep.vectors(0, 1) = -sh * up;
    ep.vectors(1, 1) = ch * down;
    return ep;
}

/// Cubic Lagrange interpolation through the four grid samples around τ.
class SampledPath
{
public:
    SampledPath(TimeGrid grid, std::vector<CMatrix> samples)
        : grid_(grid), samples_(std::move(samples))
    {
    }

    CMatrix cubic(double tau) const
    {
        const auto [k0, x] = locate(tau);
        const std::size_t n = samples_.size();
        std::size_t first = k0 == 0 ? 0 : k0 - 1;
        if (first + 3 >= n)
            first = n - 4;
        CMatrix out = CMatrix::Zero(samples_[0].rows(), samples_[0].cols());
        for (std::size_t j = 0; j < 4; ++j) {
            double w = 1.0;
            const double xj = static_cast<double>(first + j);
            for (std::size_t i = 0; i < 4; ++i) {
                if (i == j)
                    continue;
                const double xi = static_cast<double>(first + i);
                w *= (x - xi) / (xj - xi);
            }
            out += w * samples_[first + j];
        }
        return out;
    }

    const TimeGrid& grid() const { return grid_; }

private:
    // Returns the lower node index and τ in units of the step.
    std::pair<std::size_t, double> locate(double tau) const
    {
        const double h = grid_.step();
        const double slack = 1e-9 * h;
        if (tau < -slack || tau > grid_.tau_end() + slack)
            throw OutOfRange("tau=" + std::to_string(tau) + " outside the sampled range");
        double x = std::clamp(tau / h, 0.0, static_cast<double>(grid_.n_steps()));
        std::size_t k0 = static_cast<std::size_t>(std::floor(x));
        if (k0 >= grid_.n_steps())
            k0 = grid_.n_steps() - 1;
        return {k0, x};
    }

    TimeGrid grid_;
    std::vector<CMatrix> samples_;
};

} // namespace detail

/// Build the rotating-field spin-1/2 model.
///
/// Variant A: h_a(τ) = -(ω0/2)[σ_x sinθ cos ωτ + σ_y sinθ sin ωτ + σ_z cosθ].
/// Variant B: h_b(τ) = -U_a†(τ) h_a(τ) U_a(τ), with U_a propagated on `grid`
/// by the exponential midpoint rule and h_b cubically interpolated between
/// grid samples. Its exact propagator is U_a†.
inline HamiltonianModel build_spin_half(const SpinHalfParams& params,
                                        const std::optional<TimeGrid>& grid = std::nullopt)
{
    if (!(params.omega0 > 0.0) || !std::isfinite(params.omega) || params.theta < 0.0 ||
        params.theta > Pi + 1e-12)
        throw InvalidArgument("spin model: need omega0 > 0, finite omega, theta in [0, pi]");

    HamiltonianModel model;
    model.dimension = 2;
    if (params.variant == SpinVariant::A) {
        model.name = "spin_a";
        model.evaluate = [params](double tau) { return detail::spin_a_matrix(params, tau); };
        model.derivative = [params](double tau) { return detail::spin_a_derivative(params, tau); };
        model.analytic_frame = [params](double tau) { return detail::spin_a_frame(params, tau); };
        if (params.omega != 0.0)
            model.period = 2.0 * Pi / std::abs(params.omega);
        return model;
    }

    if (!grid)
        throw GridRequired("spin variant B needs the propagation grid");
    if (grid->n_steps() < 3)
        throw InvalidArgument("spin variant B needs at least 3 grid steps for cubic interpolation");

    const TimeGrid& g = *grid;
    const double dt = g.step();
    std::vector<CMatrix> samples;
    samples.reserve(g.size());
    CMatrix u = CMatrix::Identity(2, 2);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (k > 0) {
            const double mid = g.tau(k - 1) + 0.5 * dt;
            u = expi_hermitian(detail::spin_a_matrix(params, mid), -dt) * u;
        }
        CMatrix hb = -(u.adjoint() * detail::spin_a_matrix(params, g.tau(k)) * u);
        samples.push_back(hermitian_part(hb));
    }
    auto path = std::make_shared<const detail::SampledPath>(g, std::move(samples));
    model.name = "spin_b";
    model.evaluate = [path](double tau) { return path->cubic(tau); };
    return model;
}

// ---------------------------------------------------------------------------
// Conjugated family h(τ) = e^{-iτV} H e^{iτV}
// ---------------------------------------------------------------------------

struct HVParams
{
    std::vector<double> energies;   ///< E_n
    std::optional<CMatrix> eigenbasis; ///< columns |E_n⟩; identity when absent
    CMatrix V;
};

/// Build h(τ) = e^{-iτV} H e^{iτV}, H = Σ E_n |E_n⟩⟨E_n|, with ḣ = -i[V, h].
///
/// The analytic frame is e^{-iτV}|E_n⟩, ordered by ascending E_n.
inline HamiltonianModel build_hv_model(const HVParams& params)
{
    const auto d = static_cast<Eigen::Index>(params.energies.size());
    if (d == 0)
        throw InvalidArgument("hv model: no energies");
    for (double e : params.energies)
        if (!std::isfinite(e))
            throw InvalidArgument("hv model: non-finite energy");
    if (params.V.rows() != d || params.V.cols() != d)
        throw InvalidArgument("hv model: V has the wrong shape");
    if (!is_hermitian(params.V))
        throw NonHermitianInput("hv model: V is not Hermitian");

    CMatrix basis = CMatrix::Identity(d, d);
    if (params.eigenbasis) {
        basis = *params.eigenbasis;
        if (basis.rows() != d || basis.cols() != d)
            throw InvalidArgument("hv model: eigenbasis has the wrong shape");
        if ((basis.adjoint() * basis - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
            throw InvalidArgument("hv model: eigenbasis is not unitary");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    for (Eigen::Index n = 0; n < d; ++n)
        order[static_cast<std::size_t>(n)] = n;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return params.energies[static_cast<std::size_t>(a)] < params.energies[static_cast<std::size_t>(b)];
    });

    RVector sorted_e(d);
    CMatrix sorted_basis(d, d);
    for (Eigen::Index n = 0; n < d; ++n) {
        sorted_e(n) = params.energies[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])];
        sorted_basis.col(n) = basis.col(order[static_cast<std::size_t>(n)]);
    }
    const CMatrix h_static = sorted_basis * sorted_e.cast<Complex>().asDiagonal() * sorted_basis.adjoint();
    const Eigenpairs vdec = hermitian_eigen(params.V);

    struct Data
    {
        CMatrix h;
        CMatrix v;
        CMatrix basis;
        RVector e;
        Eigenpairs vdec;

        CMatrix propagator(double tau) const
        {
            CVector ph(vdec.values.size());
            for (Eigen::Index n = 0; n < ph.size(); ++n)
                ph(n) = std::exp(-I * (tau * vdec.values(n)));
            return vdec.vectors * ph.asDiagonal() * vdec.vectors.adjoint();
        }
    };
    auto data = std::make_shared<const Data>(Data{h_static, params.V, sorted_basis, sorted_e, vdec});

    HamiltonianModel model;
    model.dimension = static_cast<std::size_t>(d);
    model.name = "hv";
    model.evaluate = [data](double tau) -> CMatrix {
        const CMatrix u = data->propagator(tau);
        return hermitian_part(u * data->h * u.adjoint());
    };
    model.derivative = [data](double tau) -> CMatrix {
        const CMatrix u = data->propagator(tau);
        const CMatrix h = u * data->h * u.adjoint();
        return -I * (data->v * h - h * data->v);
    };
    model.analytic_frame = [data](double tau) -> Eigenpairs {
        return {data->e, data->propagator(tau) * data->basis};
    };
    return model;
}

// ---------------------------------------------------------------------------
// Tabulated models
// ---------------------------------------------------------------------------

/// Parse the tabulated text format: a `dim=<d>` header, then rows
/// `tau re(h00) im(h00) re(h01) im(h01) ...` covering the upper triangle and
/// diagonal row-major. '#' starts a comment.
inline HamiltonianModel parse_tabulated_model(std::istream& in, const std::string& source = "<stream>")
{
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    auto next_content = [&](std::string& out) {
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                out = line;
                return true;
            }
        }
        return false;
    };

    std::string content;
    if (!next_content(content))
        throw ParseError(source + ": empty file");
    {
        std::istringstream hs(content);
        std::string tok;
        hs >> tok;
        if (tok.rfind("dim=", 0) != 0)
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected header dim=<d>");
        try {
            std::size_t used = 0;
            const long v = std::stol(tok.substr(4), &used);
            if (used != tok.size() - 4 || v <= 0)
                throw std::invalid_argument("dim");
            dim = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ParseError(source + ":" + std::to_string(lineno) + ": bad dimension in header");
        }
    }

    const std::size_t per_row = 1 + dim * (dim + 1);
    std::vector<double> taus;
    std::vector<CMatrix> samples;
    std::size_t row = 0;
    while (next_content(content)) {
        std::istringstream rs(content);
        std::vector<double> values;
        std::string tok;
        while (rs >> tok) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(tok, &used));
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError(source + ":" + std::to_string(lineno) + ": not a number: " + tok);
            }
        }
        if (values.size() != per_row)
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(per_row) + " columns, got " + std::to_string(values.size()));
        const double tau = values[0];
        if (!taus.empty() && !(tau > taus.back()))
            throw NonMonotoneTime("row " + std::to_string(row) + " (tau=" + std::to_string(tau) +
                                  ") does not increase");
        CMatrix h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        std::size_t pos = 1;
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = r; c < dim; ++c) {
                const Complex z(values[pos], values[pos + 1]);
                pos += 2;
                h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z;
                if (c != r)
                    h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = std::conj(z);
            }
        }
        if (!is_hermitian(h))
            throw NonHermitianSample("row " + std::to_string(row) + " (tau=" + std::to_string(tau) +
                                     "): defect " + std::to_string(hermiticity_defect(h)));
        taus.push_back(tau);
        samples.push_back(std::move(h));
        ++row;
    }
    if (taus.size() < 2)
        throw ParseError(source + ": need at least two samples");

    struct Table
    {
        std::vector<double> tau;
        std::vector<CMatrix> h;
    };
    auto table = std::make_shared<const Table>(Table{std::move(taus), std::move(samples)});

    HamiltonianModel model;
    model.dimension = dim;
    model.name = "tabulated";
    model.evaluate = [table](double tau) -> CMatrix {
        const auto& ts = table->tau;
        const double slack = 1e-12 * std::max(1.0, std::abs(ts.back()));
        if (tau < ts.front() - slack || tau > ts.back() + slack)
            throw OutOfRange("tau=" + std::to_string(tau) + " outside the tabulated range");
        auto it = std::upper_bound(ts.begin(), ts.end(), tau);
        std::size_t k1 = static_cast<std::size_t>(it - ts.begin());
        k1 = std::clamp<std::size_t>(k1, 1, ts.size() - 1);
        const std::size_t k0 = k1 - 1;
        const double w = std::clamp((tau - ts[k0]) / (ts[k1] - ts[k0]), 0.0, 1.0);
        return (1.0 - w) * table->h[k0] + w * table->h[k1];
    };
    return model;
}

inline HamiltonianModel load_tabulated_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    return parse_tabulated_model(in, path);
}

/// Write `model` sampled on `grid` in the tabulated format.
inline void write_tabulated_model(std::ostream& out, const HamiltonianModel& model, const TimeGrid& grid)
{
    out << "dim=" << model.dimension << '\n';
    out << std::setprecision(17);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double tau = grid.tau(k);
        const CMatrix h = model.evaluate(tau);
        out << tau;
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = r; c < h.cols(); ++c)
                out << ' ' << h(r, c).real() << ' ' << (r == c ? 0.0 : h(r, c).imag());
        out << '\n';
    }
}

} // namespace adiabatic
