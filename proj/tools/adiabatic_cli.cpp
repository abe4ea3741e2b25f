// Command-line front end: evolve, check, fourier and sweep over a scenario file.

#include <adiabatic/scenario.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace
{

enum ExitCode
{
    Ok = 0,
    Usage = 2,
    Numerical = 3
};

struct Options
{
    std::string config;
    std::string out = ".";
    std::size_t threads = 1;
    std::optional<double> threshold;
};

int run(const std::string& command, const Options& opt)
{
    using namespace adiabatic;
    const ScenarioConfig config = resolve_config(load_config(opt.config));
    const double threshold = opt.threshold.value_or(config.condition_threshold);
    const std::filesystem::path out = opt.out;

    if (command == "evolve") {
        const auto s = run_evolve(config, out);
        std::cout << "min P_exact " << format_double(s.min_p_exact) << ", max norm residual "
                  << format_double(s.max_norm_residual) << "\n";
    } else if (command == "check") {
        const auto report = run_check(config, out, threshold);
        for (const auto& r : report.records)
            std::cout << to_string(r.id) << ' ' << format_double(r.value) << (r.pass ? " pass" : " fail") << "\n";
    } else if (command == "fourier") {
        const auto report = run_fourier(config, out, threshold);
        std::cout << "max ratio " << format_double(report.max_ratio) << (report.pass ? " pass" : " fail") << "\n";
    } else if (command == "sweep") {
        const auto rows = run_sweep(config, out, opt.threads, threshold);
        std::cout << rows.size() << " sweep points\n";
    }
    return Ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adiabatic-basis evolution and adiabaticity conditions"};
    app.require_subcommand(1, 1);

    Options opt;
    std::string command;
    for (const char* name : {"evolve", "check", "fourier", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads for sweep")->check(CLI::PositiveNumber);
        sub->add_option("--threshold", opt.threshold, "condition threshold override");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Usage;
    }

    try {
        return run(command, opt);
    } catch (const adiabatic::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.error_class() == adiabatic::ErrorClass::Input ? Usage : Numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Usage;
    }
}
