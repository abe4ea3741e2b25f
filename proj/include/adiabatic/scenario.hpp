#pragma once

/// @file scenario.hpp
/// @brief Flat key/value scenario configs and the evolve / check / fourier /
/// sweep drivers behind the command-line tool.

#include "adiabatic.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace adiabatic
{

struct ConfigError : detail::ErrorOf<ErrorClass::Input>
{
    explicit ConfigError(const std::string& detail) : ErrorOf("ConfigError", "cli", detail) {}
};

/// Raw `key = value` pairs, kept sorted so reports are deterministic.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Parse `key = value` lines. `#` starts a comment; blank lines are skipped.
inline ConfigMap parse_config_text(std::istream& in, const std::string& source = "<config>")
{
    ConfigMap out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(row) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(source + ":" + std::to_string(row) + ": empty key");
        if (!out.emplace(key, value).second)
            throw ConfigError(source + ":" + std::to_string(row) + ": duplicate key '" + key + "'");
    }
    return out;
}

inline ConfigMap load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    return parse_config_text(in, path);
}

// ---------------------------------------------------------------------------
// Typed config
// ---------------------------------------------------------------------------

enum class ModelKind
{
    Spin,
    HV,
    Tabulated,
    Linear
};

inline const std::set<std::string>& known_config_keys()
{
    static const std::set<std::string> keys = {
        "model.kind",         "model.variant",        "model.omega0",         "model.omega",
        "model.theta",        "model.energies",       "model.eigenbasis",     "model.eigenbasis_im",
        "model.v",            "model.v_im",           "model.path",           "model.h0",
        "model.h0_im",        "model.h1",             "model.h1_im",          "model.normalize",
        "grid.tau_end",       "grid.n_steps",         "run.initial_level",    "run.gauge",
        "run.gamma_method",   "thresholds.condition", "thresholds.gap_tol",   "thresholds.linearity_tol",
        "thresholds.resonance_tol", "outputs",        "output.stride",        "fourier.n_harmonics",
        "fourier.period",     "fourier.k",            "sweep.param",          "sweep.values",
    };
    return keys;
}

/// Keys a sweep may vary: the numeric ones.
inline const std::set<std::string>& sweepable_keys()
{
    static const std::set<std::string> keys = {
        "model.omega0",         "model.omega",        "model.theta",              "grid.tau_end",
        "grid.n_steps",         "thresholds.condition", "thresholds.gap_tol",     "thresholds.linearity_tol",
        "fourier.n_harmonics",  "fourier.period",
    };
    return keys;
}

inline const std::vector<std::string>& all_outputs()
{
    static const std::vector<std::string> v = {"exact", "direct", "first", "second", "ratio", "conditions", "fourier"};
    return v;
}

struct ScenarioConfig
{
    ModelKind kind = ModelKind::Spin;
    SpinHalfParams spin;
    HVParams hv;
    std::string tabulated_path;
    CMatrix h0;
    CMatrix h1;
    bool normalize_linear = false;

    double tau_end = 200.0;
    std::size_t n_steps = 200000;
    std::size_t initial_level = 0;
    Gauge gauge = Gauge::ContinuityFixed;
    GammaMethod gamma_method = GammaMethod::FiniteDifference;

    double condition_threshold = default_condition_threshold;
    double gap_tol = 1e-6;
    double linearity_tol = default_linearity_tol;
    double resonance_tol = default_resonance_tol;

    std::set<std::string> outputs;
    std::size_t stride = 1;
    int n_harmonics = 8;
    std::optional<double> fourier_period;
    std::optional<std::size_t> fourier_k;

    std::string sweep_param;
    std::vector<double> sweep_values;

    ConfigMap raw; ///< the input keys, for embedding in reports

    bool wants(const std::string& output) const { return outputs.count(output) != 0; }
    TimeGrid grid() const { return TimeGrid(tau_end, n_steps); }
};

namespace detail
{

inline double parse_double(const std::string& key, const std::string& text)
{
    std::string t = trim(text);
    // allow the symbolic forms pi, N*pi, pi/D and N*pi/D
    auto lower = t;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto plain = [](const std::string& s) {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument("trailing characters");
        return v;
    };
    try {
        const auto at = lower.find("pi");
        if (at == std::string::npos)
            return plain(t);
        double factor = 1.0;
        if (at > 0) {
            if (lower[at - 1] != '*')
                throw std::invalid_argument("expected N*pi");
            factor = plain(lower.substr(0, at - 1));
        }
        const std::string rest = lower.substr(at + 2);
        if (rest.empty())
            return factor * Pi;
        if (rest[0] != '/')
            throw std::invalid_argument("expected pi/D");
        return factor * Pi / plain(rest.substr(1));
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
    }
}

inline std::size_t parse_count(const std::string& key, const std::string& text)
{
    const double v = parse_double(key, text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> split(const std::string& text, const std::string& seps)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (seps.find(ch) != std::string::npos) {
            if (!trim(cur).empty())
                out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty())
        out.push_back(trim(cur));
    return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    for (const auto& tok : split(text, " ,\t"))
        out.push_back(parse_double(key, tok));
    return out;
}

/// Rows separated by ';', entries by spaces or commas.
inline RMatrix parse_real_matrix(const std::string& key, const std::string& text)
{
    const auto rows = split(text, ";");
    if (rows.empty())
        throw ConfigError("key '" + key + "': empty matrix");
    std::vector<std::vector<double>> data;
    for (const auto& r : rows)
        data.push_back(parse_list(key, r));
    const std::size_t cols = data.front().size();
    for (const auto& r : data)
        if (r.size() != cols)
            throw ConfigError("key '" + key + "': ragged matrix rows");
    RMatrix m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    return m;
}

inline CMatrix parse_complex_matrix(const ConfigMap& raw, const std::string& key)
{
    const RMatrix re = parse_real_matrix(key, raw.at(key));
    CMatrix m = re.cast<Complex>();
    if (auto it = raw.find(key + "_im"); it != raw.end()) {
        const RMatrix im = parse_real_matrix(key + "_im", it->second);
        if (im.rows() != re.rows() || im.cols() != re.cols())
            throw ConfigError("key '" + key + "_im': shape differs from '" + key + "'");
        m += I * im.cast<Complex>();
    }
    return m;
}

inline const std::string& require(const ConfigMap& raw, const std::string& key)
{
    const auto it = raw.find(key);
    if (it == raw.end())
        throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

template <typename T, typename F>
T optional_value(const ConfigMap& raw, const std::string& key, T fallback, F&& parse)
{
    const auto it = raw.find(key);
    return it == raw.end() ? fallback : parse(key, it->second);
}

} // namespace detail

/// Validate keys and convert to a typed config. Throws ConfigError.
inline ScenarioConfig resolve_config(const ConfigMap& raw)
{
    using namespace detail;
    for (const auto& [key, value] : raw)
        if (!known_config_keys().count(key))
            throw ConfigError("unknown key '" + key + "'");

    ScenarioConfig c;
    c.raw = raw;
    const std::string kind = require(raw, "model.kind");
    if (kind == "spin") {
        c.kind = ModelKind::Spin;
        const std::string variant = raw.count("model.variant") ? raw.at("model.variant") : "a";
        if (variant == "a" || variant == "A")
            c.spin.variant = SpinVariant::A;
        else if (variant == "b" || variant == "B")
            c.spin.variant = SpinVariant::B;
        else
            throw ConfigError("model.variant must be 'a' or 'b', got '" + variant + "'");
        c.spin.omega0 = optional_value(raw, "model.omega0", c.spin.omega0, parse_double);
        c.spin.omega = optional_value(raw, "model.omega", c.spin.omega, parse_double);
        c.spin.theta = optional_value(raw, "model.theta", c.spin.theta, parse_double);
    } else if (kind == "hv") {
        c.kind = ModelKind::HV;
        c.hv.energies = parse_list("model.energies", require(raw, "model.energies"));
        require(raw, "model.v");
        c.hv.V = parse_complex_matrix(raw, "model.v");
        if (raw.count("model.eigenbasis"))
            c.hv.eigenbasis = parse_complex_matrix(raw, "model.eigenbasis");
    } else if (kind == "tabulated") {
        c.kind = ModelKind::Tabulated;
        c.tabulated_path = require(raw, "model.path");
    } else if (kind == "linear") {
        c.kind = ModelKind::Linear;
        require(raw, "model.h0");
        require(raw, "model.h1");
        c.h0 = parse_complex_matrix(raw, "model.h0");
        c.h1 = parse_complex_matrix(raw, "model.h1");
        const std::string norm = raw.count("model.normalize") ? raw.at("model.normalize") : "false";
        if (norm != "true" && norm != "false")
            throw ConfigError("model.normalize must be true or false");
        c.normalize_linear = norm == "true";
    } else {
        throw ConfigError("model.kind must be spin, hv, tabulated or linear; got '" + kind + "'");
    }

    c.tau_end = optional_value(raw, "grid.tau_end", c.tau_end, parse_double);
    c.n_steps = optional_value(raw, "grid.n_steps", c.n_steps, parse_count);
    if (!(c.tau_end > 0.0) || !std::isfinite(c.tau_end))
        throw ConfigError("grid.tau_end must be positive");
    if (c.n_steps < 2)
        throw ConfigError("grid.n_steps must be >= 2");
    c.initial_level = optional_value(raw, "run.initial_level", c.initial_level, parse_count);

    if (auto it = raw.find("run.gauge"); it != raw.end()) {
        if (it->second == "continuity")
            c.gauge = Gauge::ContinuityFixed;
        else if (it->second == "analytic")
            c.gauge = Gauge::Analytic;
        else
            throw ConfigError("run.gauge must be continuity or analytic");
    }
    if (auto it = raw.find("run.gamma_method"); it != raw.end()) {
        if (it->second == "finite_difference")
            c.gamma_method = GammaMethod::FiniteDifference;
        else if (it->second == "hellmann_feynman")
            c.gamma_method = GammaMethod::HellmannFeynman;
        else
            throw ConfigError("run.gamma_method must be finite_difference or hellmann_feynman");
    }

    c.condition_threshold = optional_value(raw, "thresholds.condition", c.condition_threshold, parse_double);
    c.gap_tol = optional_value(raw, "thresholds.gap_tol", c.gap_tol, parse_double);
    c.linearity_tol = optional_value(raw, "thresholds.linearity_tol", c.linearity_tol, parse_double);
    c.resonance_tol = optional_value(raw, "thresholds.resonance_tol", c.resonance_tol, parse_double);

    if (auto it = raw.find("outputs"); it != raw.end()) {
        for (const auto& o : split(it->second, " ,")) {
            if (std::find(all_outputs().begin(), all_outputs().end(), o) == all_outputs().end())
                throw ConfigError("outputs: unknown output '" + o + "'");
            c.outputs.insert(o);
        }
    } else {
        c.outputs.insert(all_outputs().begin(), all_outputs().end());
    }
    c.stride = optional_value(raw, "output.stride", c.stride, parse_count);
    if (c.stride == 0)
        throw ConfigError("output.stride must be >= 1");

    c.n_harmonics = static_cast<int>(optional_value(raw, "fourier.n_harmonics", std::size_t{8}, parse_count));
    if (auto it = raw.find("fourier.period"); it != raw.end())
        c.fourier_period = parse_double(it->first, it->second);
    if (auto it = raw.find("fourier.k"); it != raw.end())
        c.fourier_k = parse_count(it->first, it->second);

    if (auto it = raw.find("sweep.param"); it != raw.end()) {
        c.sweep_param = it->second;
        c.sweep_values = parse_list("sweep.values", require(raw, "sweep.values"));
    }
    return c;
}

inline nlohmann::json config_json(const ConfigMap& raw)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : raw)
        j[k] = v;
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

inline HamiltonianModel build_model(const ScenarioConfig& c)
{
    switch (c.kind) {
    case ModelKind::Spin:
        return build_spin_half(c.spin, c.grid());
    case ModelKind::HV:
        return build_hv_model(c.hv);
    case ModelKind::Tabulated:
        return load_tabulated_model(c.tabulated_path);
    case ModelKind::Linear: {
        if (!c.normalize_linear)
            return make_linear_model(c.h0, c.h1);
        const CMatrix h0 = c.h0;
        const CMatrix h1 = c.h1;
        if (!is_hermitian(h1))
            throw NonHermitianInput("linear model: h1 is not Hermitian");
        auto [model, record] = normalize([h0, h1](double t) -> CMatrix { return h0 + t * h1; }, c.initial_level,
                                         [h1](double) -> CMatrix { return h1; });
        model.name = "linear";
        return model;
    }
    }
    throw ConfigError("unhandled model kind");
}

struct Pipeline
{
    HamiltonianModel model;
    TimeGrid grid;
    AdiabaticSpectrum spectrum;
    GammaMatrix gamma;
    InvariantFrame frame;
};

inline Pipeline run_pipeline(const ScenarioConfig& c)
{
    Pipeline p;
    p.grid = c.grid();
    p.model = build_model(c);
    if (c.initial_level >= p.model.dimension)
        throw ConfigError("run.initial_level " + std::to_string(c.initial_level) + " is not below dimension " +
                          std::to_string(p.model.dimension));
    if (c.fourier_k && (*c.fourier_k >= p.model.dimension || *c.fourier_k == c.initial_level))
        throw ConfigError("fourier.k must be a level other than run.initial_level");
    p.spectrum = solve_quasistationary(p.model, p.grid, c.gap_tol, c.gauge);
    p.gamma = compute_gamma(p.spectrum, p.model, c.gamma_method);
    p.frame = build_frame(p.spectrum, p.gamma);
    return p;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

/// 17 significant digits, scientific; "nan" for NaN.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw ConfigError("write failed for '" + path.string() + "'");
}

inline nlohmann::json json_number(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// ---------------------------------------------------------------------------
// Fourier criterion
// ---------------------------------------------------------------------------

inline std::size_t fourier_partner(const ScenarioConfig& c, std::size_t dimension)
{
    if (c.fourier_k)
        return *c.fourier_k;
    return c.initial_level + 1 < dimension ? c.initial_level + 1 : c.initial_level - 1;
}

/// Linear-phase fit and harmonic ratios for the pair (k, m). Throws
/// PhaseNotLinear or PeriodMismatch, or ConfigError when no period is known.
inline FourierConditionReport run_fourier_analysis(const ScenarioConfig& c, const Pipeline& p,
                                                   double threshold, FourierHarmonics* harmonics_out = nullptr)
{
    const std::size_t k = fourier_partner(c, p.model.dimension);
    const std::size_t m = c.initial_level;
    double period = 0.0;
    if (c.fourier_period)
        period = *c.fourier_period;
    else if (p.model.period)
        period = *p.model.period;
    else
        throw PeriodMismatch("model '" + p.model.name + "' has no known period; set fourier.period");
    const auto linearity = check_linear_phase(p.frame, k, m, c.linearity_tol);
    const auto modulus = coupling_modulus(p.frame, k, m);
    const auto harmonics = fourier_decompose_coupling(modulus, p.grid.step(), period, c.n_harmonics);
    if (harmonics_out)
        *harmonics_out = harmonics;
    return fourier_condition_report(linearity, harmonics, threshold, c.resonance_tol);
}

inline ConditionRecord fourier_record(const ScenarioConfig& c, const Pipeline& p, double threshold)
{
    const std::size_t k = fourier_partner(c, p.model.dimension);
    try {
        const auto report = run_fourier_analysis(c, p, threshold);
        auto r = make_record(Criterion::Fourier, report.max_ratio, {{k, report.max_ratio}}, threshold, c.tau_end);
        r.pass = report.pass;
        if (report.resonance)
            r.note = "resonance";
        return r;
    } catch (const Error& e) {
        if (e.kind() != "PhaseNotLinear" && e.kind() != "PeriodMismatch")
            throw;
        auto r = make_record(Criterion::Fourier, NAN, {}, threshold, c.tau_end);
        r.note = e.what();
        return r;
    }
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

struct EvolveSummary
{
    double min_p_exact = 1.0;
    double p_exact_end = 1.0;
    double max_norm_residual = 0.0;
    double max_dual_route_gap = NAN;
    bool ratio_breakdown = false;
    std::size_t rows = 0;
};

inline std::string evolution_csv(const ScenarioConfig& c, const Pipeline& p, EvolveSummary& summary)
{
    const std::size_t m = c.initial_level;
    const auto coeffs = evolve_coefficients(p.frame.M, p.grid, m);
    const auto p_exact = survival_probability_exact(coeffs);
    const auto norm = norm_residuals(coeffs);

    std::vector<double> p_direct;
    if (c.wants("direct")) {
        const auto states =
            evolve_schrodinger(p.model, p.frame.basis.front().col(static_cast<Eigen::Index>(m)), p.grid);
        p_direct = survival_probability_direct(states, p.frame, m);
    }
    std::vector<double> p_first;
    if (c.wants("first"))
        p_first = first_order_probability(p.frame.M, p.grid, m);
    std::vector<double> p_second;
    if (c.wants("second"))
        p_second = second_order_probability(p.frame.M, p.grid, m);
    std::vector<double> p_ratio;
    if (c.wants("ratio")) {
        try {
            p_ratio = ratio_probability_first_iteration(p.frame.M, p.grid, m, &coeffs);
        } catch (const RatioBreakdown&) {
            summary.ratio_breakdown = true;
        }
    }

    const auto at = [](const std::vector<double>& v, std::size_t k) { return v.empty() ? NAN : v[k]; };
    const std::size_t d = p.model.dimension;
    std::string out = "tau,P_exact,P_direct,P_first,P_second,P_ratio,norm_residual";
    for (std::size_t n = 0; n < d; ++n)
        out += ",c" + std::to_string(n) + "_sq";
    out += '\n';

    summary.min_p_exact = 1.0;
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
        summary.min_p_exact = std::min(summary.min_p_exact, p_exact[k]);
        summary.max_norm_residual = std::max(summary.max_norm_residual, norm[k]);
        if (!p_direct.empty()) {
            const double gap = std::abs(p_exact[k] - p_direct[k]);
            summary.max_dual_route_gap = std::isnan(summary.max_dual_route_gap)
                                             ? gap
                                             : std::max(summary.max_dual_route_gap, gap);
        }
        if (k % c.stride != 0 && k + 1 != p.grid.size())
            continue;
        ++summary.rows;
        out += format_double(p.grid.tau(k));
        for (double v : {c.wants("exact") ? p_exact[k] : NAN, at(p_direct, k), at(p_first, k), at(p_second, k),
                         at(p_ratio, k), norm[k]}) {
            out += ',';
            out += format_double(v);
        }
        for (std::size_t n = 0; n < d; ++n) {
            out += ',';
            out += format_double(std::norm(coeffs.coeffs[k](static_cast<Eigen::Index>(n))));
        }
        out += '\n';
    }
    summary.p_exact_end = p_exact.back();
    return out;
}

inline EvolveSummary run_evolve(const ScenarioConfig& c, const std::filesystem::path& out_dir)
{
    const Pipeline p = run_pipeline(c);
    EvolveSummary summary;
    const std::string csv = evolution_csv(c, p, summary);
    write_text_file(out_dir / "evolution.csv", csv);

    nlohmann::json j;
    j["model"] = p.model.name;
    j["dimension"] = p.model.dimension;
    j["initial_level"] = c.initial_level;
    j["min_P_exact"] = json_number(summary.min_p_exact);
    j["P_exact_end"] = json_number(summary.p_exact_end);
    j["max_norm_residual"] = json_number(summary.max_norm_residual);
    j["max_dual_route_gap"] = json_number(summary.max_dual_route_gap);
    j["min_gap"] = json_number(p.spectrum.min_gap);
    j["ratio_breakdown"] = summary.ratio_breakdown;
    j["rows"] = summary.rows;
    j["resolved_config"] = config_json(c.raw);
    write_text_file(out_dir / "summary.json", j.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

inline ConditionReport check_conditions(const ScenarioConfig& c, const Pipeline& p, double threshold,
                                        double* min_p_exact = nullptr)
{
    const auto coeffs = evolve_coefficients(p.frame.M, p.grid, c.initial_level);
    if (min_p_exact) {
        const auto pe = survival_probability_exact(coeffs);
        *min_p_exact = *std::min_element(pe.begin(), pe.end());
    }
    ConditionReport report = evaluate_conditions(p.frame.M, coeffs, p.grid, c.initial_level, c.tau_end, threshold);
    report.records.push_back(fourier_record(c, p, threshold));
    return report;
}

inline nlohmann::json report_json(const ConditionReport& report, const ConfigMap& raw)
{
    nlohmann::json list = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& r : report.records) {
        nlohmann::json j;
        j["criterion"] = to_string(r.id);
        j["value"] = json_number(r.value);
        j["threshold"] = r.threshold;
        j["pass"] = r.pass;
        j["tau_end"] = r.tau_end;
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [k, v] : r.per_level)
            per[std::to_string(k)] = json_number(v);
        j["per_level"] = per;
        if (!r.note.empty())
            j["note"] = r.note;
        all_pass = all_pass && r.pass;
        list.push_back(j);
    }
    nlohmann::json out;
    out["criteria"] = list;
    out["all_pass"] = all_pass;
    out["resolved_config"] = config_json(raw);
    return out;
}

inline ConditionReport run_check(const ScenarioConfig& c, const std::filesystem::path& out_dir, double threshold)
{
    const Pipeline p = run_pipeline(c);
    ConditionReport report = check_conditions(c, p, threshold);
    write_text_file(out_dir / "check.json", report_json(report, c.raw).dump(2) + "\n");
    return report;
}

// ---------------------------------------------------------------------------
// fourier
// ---------------------------------------------------------------------------

inline FourierConditionReport run_fourier(const ScenarioConfig& c, const std::filesystem::path& out_dir,
                                          double threshold)
{
    const Pipeline p = run_pipeline(c);
    FourierHarmonics harmonics;
    const auto report = run_fourier_analysis(c, p, threshold, &harmonics);

    nlohmann::json j;
    j["k"] = report.k;
    j["m"] = report.m;
    j["Omega0"] = report.Omega0;
    j["period"] = harmonics.period;
    j["samples_per_period"] = harmonics.samples_per_period;
    j["mean_square"] = harmonics.mean_square;
    j["tail_energy"] = harmonics.tail_energy;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : report.ratios) {
        nlohmann::json h;
        h["l"] = r.l;
        h["omega"] = r.omega;
        h["gamma_re"] = r.gamma.real();
        h["gamma_im"] = r.gamma.imag();
        h["ratio"] = json_number(r.ratio);
        h["resonant"] = r.resonant;
        list.push_back(h);
    }
    j["harmonics"] = list;
    j["max_ratio"] = json_number(report.max_ratio);
    j["threshold"] = report.threshold;
    j["resonance"] = report.resonance;
    j["pass"] = report.pass;
    j["resolved_config"] = config_json(c.raw);
    write_text_file(out_dir / "fourier.json", j.dump(2) + "\n");
    return report;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRow
{
    double param = 0.0;
    double min_p_exact = NAN;
    std::vector<double> values; ///< one per Criterion, in enum order
};

inline SweepRow run_sweep_point(const ConfigMap& base, const std::string& param, double value, double threshold)
{
    ConfigMap raw = base;
    raw.erase("sweep.param");
    raw.erase("sweep.values");
    raw[param] = format_double(value);
    const ScenarioConfig c = resolve_config(raw);
    const Pipeline p = run_pipeline(c);
    SweepRow row;
    row.param = value;
    const auto report = check_conditions(c, p, threshold, &row.min_p_exact);
    for (const auto& r : report.records)
        row.values.push_back(r.value);
    return row;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::string out = "param,min_P_exact,FirstOrder,SecondOrder,RatioFirstIter,CompactFunctional,Fourier\n";
    for (const auto& r : rows) {
        out += format_double(r.param);
        out += ',';
        out += format_double(r.min_p_exact);
        for (double v : r.values) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

/// Run every sweep point on up to `threads` workers. Rows come back in input
/// order; the first failing point (in input order) is rethrown.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& c, const std::filesystem::path& out_dir,
                                       std::size_t threads, double threshold)
{
    if (c.sweep_param.empty())
        throw ConfigError("sweep needs sweep.param and sweep.values");
    if (!sweepable_keys().count(c.sweep_param))
        throw ConfigError("sweep.param '" + c.sweep_param + "' is not a sweepable numeric key");
    if (c.sweep_values.empty())
        throw ConfigError("sweep.values is empty");

    const std::size_t n = c.sweep_values.size();
    std::vector<SweepRow> rows(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                rows[i] = run_sweep_point(c.raw, c.sweep_param, c.sweep_values[i], threshold);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    write_text_file(out_dir / "sweep.csv", sweep_csv(rows));
    return rows;
}

} // namespace adiabatic
