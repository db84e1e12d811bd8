#pragma once

// Command-line front end. run_cli() is the whole program minus process
// plumbing so tests can drive it with in-memory streams.
//
// Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtomo/counts.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/harness.hpp"
#include "qtomo/metrics.hpp"
#include "qtomo/plot.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/states.hpp"

namespace qtomo::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Raised for flag combinations CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::json report_json(const ValidationReport& rep)
{
    nlohmann::json j;
    j["scheme"] = std::string(scheme_name(rep.scheme));
    j["elements"] = rep.element_count;
    j["completeness_residual"] = rep.completeness_residual;
    j["min_eigenvalue"] = rep.min_eigenvalue;
    j["rank"] = rep.rank;
    j["overlap_residual"] = rep.overlap_residual;
    j["orthonormality_residual"] = rep.orthonormality_residual;
    j["overlap_checks_passed"] = rep.overlaps_ok;
    j["completeness_passed"] = rep.completeness_ok;
    j["psd_passed"] = rep.psd_ok;
    j["rank_passed"] = rep.rank_ok;
    j["passed"] = rep.passed();
    return j;
}

inline nlohmann::json matrix_json(const HermitianMatrix3& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < kDim; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < kDim; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline Scheme require_scheme(const std::string& s)
{
    const auto scheme = parse_scheme(s);
    if (!scheme) throw UsageError("unknown scheme '" + s + "' (expected sic or mub)");
    return *scheme;
}

struct ReconstructFlags {
    std::string scheme;
    double photons = 10000.0;
    double dark_rate = 0.0;
    double theta = 0.0, delta = std::numbers::pi, phi12 = 0.0, phi13 = 0.0;
    std::uint64_t seed = 1;
    int restarts = OptimizerOptions{}.restarts;
};

inline int cmd_reconstruct(const ReconstructFlags& f, std::ostream& out)
{
    const Scheme scheme = require_scheme(f.scheme);
    if (!(f.photons > 0.0) || !std::isfinite(f.photons)) throw UsageError("--photons must be positive");
    if (!(f.dark_rate >= 0.0 && f.dark_rate <= 1.0)) throw UsageError("--dark-rate must lie in [0, 1]");
    if (f.restarts < 1) throw UsageError("--restarts must be >= 1");

    std::optional<PureQutrit> psi;
    try {
        psi.emplace(f.theta, f.delta, f.phi12, f.phi13);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }

    const PovmSet povm = make_povm(scheme);
    const InputState input = apply_dark_counts(*psi, f.dark_rate);
    RngStream counts_rng(f.seed, "counts");
    RngStream restart_rng(f.seed, "restarts");
    const CountVector measured = measured_counts(input, povm, f.photons, counts_rng);
    OptimizerOptions opts;
    opts.restarts = f.restarts;
    const EstimationResult est = reconstruct(measured, povm, f.photons, opts, restart_rng);
    const MeritRecord m = merits(*psi, est.rho_hat);

    nlohmann::json j;
    j["scheme"] = std::string(scheme_name(scheme));
    j["photon_mean"] = f.photons;
    j["dark_rate"] = f.dark_rate;
    j["seed"] = f.seed;
    j["source"] = {{"theta", f.theta}, {"delta", f.delta}, {"phi12", f.phi12}, {"phi13", f.phi13}};
    j["measured_counts"] = measured.values;
    j["rho_hat"] = matrix_json(est.rho_hat);
    j["params"] = est.params.t;
    j["objective"] = est.objective;
    j["evaluations"] = est.evaluations;
    j["restarts_used"] = est.restarts_used;
    j["converged"] = est.converged;
    j["fidelity"] = m.fidelity;
    j["purity"] = m.purity;
    j["entropy"] = m.entropy;
    out << j.dump(2) << '\n';
    return kOk;
}

struct SweepFlags {
    std::string config_path;
    std::vector<std::string> schemes;
    std::vector<double> photons;
    double p_min = 0.0, p_max = 1.0;
    std::size_t p_steps = 21;
    std::vector<std::size_t> grid;
    std::size_t max_states = 0;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out = "sweep.csv";
    std::string detail_out;
};

/// Applies a JSON config object to `cfg`. Keys mirror SweepConfig.
inline void apply_config_json(const nlohmann::json& j, SweepConfig& cfg, double& p_min, double& p_max,
                              std::size_t& p_steps, bool& explicit_p_grid)
{
    static const std::vector<std::string> known{"schemes", "photon_means", "p_grid", "p_min", "p_max", "p_steps",
                                                "state_grid", "max_states", "master_seed", "parallelism",
                                                "output", "detail_output"};
    if (!j.is_object()) throw UsageError("config: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw UsageError("config: unknown key '" + key + "'");
    try {
        if (j.contains("schemes")) {
            cfg.schemes.clear();
            for (const auto& s : j.at("schemes")) cfg.schemes.push_back(require_scheme(s.get<std::string>()));
        }
        if (j.contains("photon_means")) cfg.photon_means = j.at("photon_means").get<std::vector<double>>();
        if (j.contains("p_grid")) {
            cfg.p_grid = j.at("p_grid").get<std::vector<double>>();
            explicit_p_grid = true;
        }
        if (j.contains("p_min")) p_min = j.at("p_min").get<double>();
        if (j.contains("p_max")) p_max = j.at("p_max").get<double>();
        if (j.contains("p_steps")) p_steps = j.at("p_steps").get<std::size_t>();
        if (j.contains("state_grid")) {
            const auto g = j.at("state_grid").get<std::vector<std::size_t>>();
            if (g.size() != 4) throw UsageError("config: state_grid needs 4 integers");
            cfg.grid = GridShape{g[0], g[1], g[2], g[3]};
        }
        if (j.contains("max_states")) cfg.max_states = j.at("max_states").get<std::size_t>();
        if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<int>();
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
        if (j.contains("detail_output")) cfg.detail_output = j.at("detail_output").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

inline void print_summary(const std::vector<SweepRecord>& records, std::ostream& out)
{
    out << std::left << std::setw(7) << "scheme" << std::right << std::setw(10) << "N" << std::setw(8) << "p"
        << std::setw(9) << "states" << std::setw(10) << "F_av" << std::setw(10) << "gamma_av" << std::setw(10)
        << "S_av" << std::setw(8) << "unconv" << '\n';
    for (const auto& r : records) {
        out << std::left << std::setw(7) << scheme_name(r.scheme) << std::right << std::setw(10)
            << format_real(r.photon_mean) << std::setw(8) << std::fixed << std::setprecision(3) << r.p << std::setw(9)
            << r.n_states << std::setw(10) << std::setprecision(4) << r.F_av << std::setw(10) << r.gamma_av
            << std::setw(10) << r.S_av << std::setw(8) << r.n_unconverged << '\n';
        out.unsetf(std::ios::fixed);
    }
}

/// `given` reports which flags appeared on the command line; those override the config file.
template <typename Given>
inline SweepConfig build_sweep_config(const SweepFlags& f, Given&& given)
{
    SweepConfig cfg;
    cfg.master_seed = f.seed;
    cfg.output = f.out;
    double p_min = f.p_min, p_max = f.p_max;
    std::size_t p_steps = f.p_steps;
    bool explicit_p_grid = false;

    if (!f.config_path.empty()) {
        std::ifstream is(f.config_path);
        if (!is) throw UsageError("cannot open config file " + f.config_path);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config: " + std::string(e.what()));
        }
        apply_config_json(j, cfg, p_min, p_max, p_steps, explicit_p_grid);
    }

    if (given("--schemes")) {
        cfg.schemes.clear();
        for (const auto& s : f.schemes) cfg.schemes.push_back(require_scheme(s));
    }
    if (given("--photons")) cfg.photon_means = f.photons;
    if (given("--p-min")) p_min = f.p_min;
    if (given("--p-max")) p_max = f.p_max;
    if (given("--p-steps")) p_steps = f.p_steps;
    if (given("--p-min") || given("--p-max") || given("--p-steps")) explicit_p_grid = false;
    if (given("--grid")) {
        if (f.grid.size() != 4) throw UsageError("--grid needs 4 comma-separated integers");
        cfg.grid = GridShape{f.grid[0], f.grid[1], f.grid[2], f.grid[3]};
    }
    if (given("--max-states")) cfg.max_states = f.max_states;
    if (given("--seed")) cfg.master_seed = f.seed;
    if (given("--jobs")) cfg.parallelism = f.jobs;
    if (given("--out")) cfg.output = f.out;
    if (given("--detail-out")) cfg.detail_output = f.detail_out;
    if (cfg.output.empty()) cfg.output = "sweep.csv";

    if (!explicit_p_grid) {
        if (!(p_min >= 0.0 && p_max <= 1.0 && p_min <= p_max))
            throw UsageError("p range must satisfy 0 <= p-min <= p-max <= 1");
        if (p_steps == 0) throw UsageError("--p-steps must be >= 1");
        if (p_steps > 1 && p_min == p_max) throw UsageError("p-min equals p-max but p-steps > 1");
        cfg.p_grid = linspace(p_min, p_max, p_steps);
    }
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

inline bool parent_directory_exists(const std::filesystem::path& p)
{
    const auto parent = std::filesystem::absolute(p).parent_path();
    std::error_code ec;
    return std::filesystem::is_directory(parent, ec);
}

inline int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& err)
{
    for (const auto& path : {std::optional(cfg.output), cfg.detail_output}) {
        if (path && !parent_directory_exists(*path)) {
            err << "error: cannot write " << path->string() << ": directory does not exist\n";
            return kFailure;
        }
    }
    try {
        const auto result = run_and_persist(cfg, [&err](const SweepRecord& r, std::size_t done, std::size_t total) {
            err << "[" << done << "/" << total << "] " << scheme_name(r.scheme) << " N=" << format_real(r.photon_mean)
                << " p=" << format_real(r.p) << " F_av=" << format_real(r.F_av) << '\n';
        });
        print_summary(result.records, out);
        out << "wrote " << result.records.size() << " records to " << cfg.output.string() << '\n';
    } catch (const SweepPersistError& e) {
        print_summary(e.output.records, out);
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}

struct PlotFlags {
    std::string in;
    std::string metric = "fidelity";
    std::optional<double> photons;
    std::string out;
};

inline int cmd_plot(const PlotFlags& f, std::ostream& out, std::ostream& err)
{
    const auto metric = parse_metric(f.metric);
    if (!metric) throw UsageError("--metric must be fidelity, purity or entropy");

    std::vector<SweepRecord> records;
    try {
        records = read_records(std::filesystem::path(f.in));
    } catch (const IoError& e) {
        err << "error: " << f.in << ": " << e.what() << '\n';
        return kFailure;
    }
    if (records.empty()) {
        err << "error: " << f.in << ": no records\n";
        return kFailure;
    }

    double photons = 0.0;
    if (f.photons) {
        photons = *f.photons;
    } else {
        photons = records.front().photon_mean;
        for (const auto& r : records)
            if (r.photon_mean != photons) throw UsageError("CSV holds several photon means; pass --photons");
    }

    std::string svg;
    try {
        svg = render_svg(records, *metric, photons);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }

    if (f.out.empty() || f.out == "-") {
        out << svg;
        return kOk;
    }
    std::ofstream os(f.out, std::ios::binary | std::ios::trunc);
    if (!os) {
        err << "error: cannot write " << f.out << '\n';
        return kFailure;
    }
    os << svg;
    os.flush();
    if (!os) {
        err << "error: write failed: " << f.out << '\n';
        return kFailure;
    }
    out << "wrote " << f.out << '\n';
    return kOk;
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Qutrit state tomography under Poisson noise and dark counts"};
    app.require_subcommand(1);

    auto* povm = app.add_subcommand("povm", "Measurement scheme utilities");
    povm->require_subcommand(1);
    auto* validate = povm->add_subcommand("validate", "Check completeness, positivity, overlaps and rank");
    std::string validate_scheme;
    validate->add_option("--scheme", validate_scheme, "sic or mub")->required();

    auto* recon = app.add_subcommand("reconstruct", "Simulate and reconstruct a single state");
    ReconstructFlags rf;
    recon->add_option("--scheme", rf.scheme, "sic or mub")->required();
    recon->add_option("--photons", rf.photons, "mean photons per measurement")->capture_default_str();
    recon->add_option("--dark-rate", rf.dark_rate, "dark count rate p in [0,1]")->capture_default_str();
    recon->add_option("--theta", rf.theta, "theta in [0, pi]")->capture_default_str();
    recon->add_option("--delta", rf.delta, "delta in [0, pi]")->capture_default_str();
    recon->add_option("--phi12", rf.phi12, "phi12 in [0, 2pi)")->capture_default_str();
    recon->add_option("--phi13", rf.phi13, "phi13 in [0, 2pi)")->capture_default_str();
    recon->add_option("--seed", rf.seed, "random seed")->envname("QT_SEED")->capture_default_str();
    recon->add_option("--restarts", rf.restarts, "optimizer restarts")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Run the dark-count sweep and write a CSV");
    SweepFlags sf;
    sweep->add_option("--config", sf.config_path, "JSON file with SweepConfig keys");
    sweep->add_option("--schemes", sf.schemes, "comma-separated: sic,mub")->delimiter(',');
    sweep->add_option("--photons", sf.photons, "comma-separated photon means")->delimiter(',');
    sweep->add_option("--p-min", sf.p_min)->capture_default_str();
    sweep->add_option("--p-max", sf.p_max)->capture_default_str();
    sweep->add_option("--p-steps", sf.p_steps)->capture_default_str();
    sweep->add_option("--grid", sf.grid, "n_theta,n_delta,n_phi12,n_phi13")->delimiter(',');
    sweep->add_option("--max-states", sf.max_states, "stratified subsample size (0: all)");
    sweep->add_option("--seed", sf.seed, "master seed")->envname("QT_SEED");
    sweep->add_option("--jobs", sf.jobs, "worker threads");
    sweep->add_option("--out", sf.out, "CSV output path");
    sweep->add_option("--detail-out", sf.detail_out, "per-state CSV output path");

    auto* plot = app.add_subcommand("plot", "Render an SVG chart from a sweep CSV");
    PlotFlags pf;
    double plot_photons = 0.0;
    plot->add_option("--in", pf.in, "sweep CSV")->required();
    plot->add_option("--metric", pf.metric, "fidelity, purity or entropy")->capture_default_str();
    auto* plot_photons_opt = plot->add_option("--photons", plot_photons, "photon mean to plot");
    plot->add_option("--out", pf.out, "SVG output path ('-' for stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*validate) {
            const Scheme scheme = require_scheme(validate_scheme);
            const ValidationReport rep = validate_povm(make_povm(scheme));
            out << report_json(rep).dump(2) << '\n';
            return rep.passed() ? kOk : kFailure;
        }
        if (*recon) return cmd_reconstruct(rf, out);
        if (*sweep) {
            auto given = [sweep](const std::string& name) { return !sweep->get_option(name)->empty(); };
            return cmd_sweep(build_sweep_config(sf, given), out, err);
        }
        if (*plot) {
            if (plot_photons_opt->count() > 0) pf.photons = plot_photons;
            return cmd_plot(pf, out, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace qtomo::cli
