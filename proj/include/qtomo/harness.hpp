#pragma once

// Experiment driver: for every (scheme, photon mean, dark rate) cell, push each
// sampled pure state through dark counts -> Poisson counts -> least-squares
// reconstruction and average the figures of merit over the sample.

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "qtomo/counts.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/metrics.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/rng.hpp"
#include "qtomo/states.hpp"

namespace qtomo {

/// `steps` evenly spaced points from lo to hi inclusive (just lo when steps == 1).
inline std::vector<double> linspace(double lo, double hi, std::size_t steps)
{
    if (steps == 0) throw InvalidInput("linspace: steps must be >= 1");
    std::vector<double> v(steps);
    if (steps == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < steps; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    v.back() = hi;
    return v;
}

struct SweepConfig {
    std::vector<Scheme> schemes{Scheme::SIC, Scheme::MUB};
    std::vector<double> photon_means{10.0, 10000.0};
    std::vector<double> p_grid = linspace(0.0, 1.0, 21);
    GridShape grid{};
    std::size_t max_states = 0;  // 0: whole grid
    std::uint64_t master_seed = 0;
    int parallelism = 1;
    OptimizerOptions optimizer{};
    std::filesystem::path output;
    std::optional<std::filesystem::path> detail_output;

    void validate() const
    {
        if (schemes.empty()) throw InvalidInput("sweep: no schemes");
        if (photon_means.empty()) throw InvalidInput("sweep: no photon means");
        if (p_grid.empty()) throw InvalidInput("sweep: empty p grid");
        for (double n : photon_means) require_photon_mean(n, "sweep");
        for (double p : p_grid)
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("sweep: p outside [0, 1]");
        if (grid.size() == 0) throw InvalidInput("sweep: grid counts must be >= 1");
        if (parallelism < 1) throw InvalidInput("sweep: parallelism must be >= 1");
    }
};

/// States under test together with their positions in the full grid, which
/// key the random streams so subsamples see the same draws as the full run.
struct StateSample {
    std::vector<PureQutrit> states;
    std::vector<std::size_t> grid_index;

    std::size_t size() const noexcept { return states.size(); }
};

inline StateSample make_sample(const GridShape& grid, std::size_t max_states)
{
    const auto all = sample_grid(grid);
    StateSample s;
    s.grid_index = stratified_indices(all.size(), max_states);
    s.states.reserve(s.grid_index.size());
    for (std::size_t i : s.grid_index) s.states.push_back(all[i]);
    return s;
}

struct CellSpec {
    Scheme scheme;
    double photon_mean;
    double p;
};

/// Per-state seed from (master, scheme, N, p, state). N and p enter by their
/// bit patterns, so a cell's draws do not depend on which other cells run.
inline std::uint64_t task_seed(std::uint64_t master, const CellSpec& cell, std::size_t grid_index) noexcept
{
    return derive_seed(master, {static_cast<std::uint64_t>(cell.scheme), std::bit_cast<std::uint64_t>(cell.photon_mean),
                                std::bit_cast<std::uint64_t>(cell.p), static_cast<std::uint64_t>(grid_index)});
}

struct StateOutcome {
    std::size_t grid_index = 0;
    double theta = 0, delta = 0, phi12 = 0, phi13 = 0;
    MeritRecord merit;
    double objective = 0.0;
    bool converged = false;
};

struct SweepRecord {
    Scheme scheme = Scheme::SIC;
    double photon_mean = 0.0;
    double p = 0.0;
    std::size_t n_states = 0;
    double F_av = 0.0, F_std = 0.0;
    double gamma_av = 0.0, gamma_std = 0.0;
    double S_av = 0.0, S_std = 0.0;
    double mean_objective = 0.0;
    std::size_t n_unconverged = 0;
    std::uint64_t master_seed = 0;

    friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct CellResult {
    SweepRecord record;
    std::vector<StateOutcome> outcomes;  // sample order
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

/// One state through the pipeline.
inline StateOutcome evaluate_state(const PureQutrit& psi, std::size_t grid_index, const CellSpec& cell,
                                   const PovmSet& povm, std::uint64_t master_seed, const OptimizerOptions& opts)
{
    const std::uint64_t seed = task_seed(master_seed, cell, grid_index);
    RngStream counts_rng(seed, "counts");
    RngStream restart_rng(seed, "restarts");

    const InputState input = apply_dark_counts(psi, cell.p);
    const CountVector measured = measured_counts(input, povm, cell.photon_mean, counts_rng);
    const EstimationResult est = reconstruct(measured, povm, cell.photon_mean, opts, restart_rng);

    StateOutcome out;
    out.grid_index = grid_index;
    out.theta = psi.theta();
    out.delta = psi.delta();
    out.phi12 = psi.phi12();
    out.phi13 = psi.phi13();
    out.merit = merits(psi, est.rho_hat);
    out.objective = est.objective;
    out.converged = est.converged;
    return out;
}

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd)
{
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

} // namespace detail

/// Averages are taken in sample order; standard deviations are sample (n - 1) estimates.
inline SweepRecord aggregate(const CellSpec& cell, const std::vector<StateOutcome>& outcomes, std::uint64_t master_seed)
{
    if (outcomes.empty()) throw InvalidInput("aggregate: empty state sample");
    SweepRecord r;
    r.scheme = cell.scheme;
    r.photon_mean = cell.photon_mean;
    r.p = cell.p;
    r.n_states = outcomes.size();
    r.master_seed = master_seed;

    std::vector<double> f, g, s;
    double obj = 0.0;
    for (const auto& o : outcomes) {
        f.push_back(o.merit.fidelity);
        g.push_back(o.merit.purity);
        s.push_back(o.merit.entropy);
        obj += o.objective;
        if (!o.converged) ++r.n_unconverged;
    }
    detail::mean_std(f, r.F_av, r.F_std);
    detail::mean_std(g, r.gamma_av, r.gamma_std);
    detail::mean_std(s, r.S_av, r.S_std);
    r.mean_objective = obj / static_cast<double>(outcomes.size());
    return r;
}

inline CellResult run_cell_detailed(const CellSpec& cell, const StateSample& sample, std::uint64_t master_seed,
                                    const OptimizerOptions& opts, int parallelism = 1)
{
    if (sample.size() == 0) throw InvalidInput("run_cell: empty state sample");
    require_photon_mean(cell.photon_mean, "run_cell");
    if (!(cell.p >= 0.0 && cell.p <= 1.0)) throw InvalidInput("run_cell: p outside [0, 1]");

    const PovmSet povm = make_povm(cell.scheme);
    CellResult res;
    res.outcomes.resize(sample.size());
    parallel_for(sample.size(), parallelism, [&](std::size_t i) {
        res.outcomes[i] = evaluate_state(sample.states[i], sample.grid_index[i], cell, povm, master_seed, opts);
    });
    res.record = aggregate(cell, res.outcomes, master_seed);
    return res;
}

inline SweepRecord run_cell(Scheme scheme, double photon_mean, double p, const StateSample& sample,
                            std::uint64_t master_seed, const OptimizerOptions& opts, int parallelism = 1)
{
    return run_cell_detailed({scheme, photon_mean, p}, sample, master_seed, opts, parallelism).record;
}

/// Cells in (scheme, photon mean, p) configuration order.
inline std::vector<CellSpec> sweep_cells(const SweepConfig& cfg)
{
    std::vector<CellSpec> cells;
    for (Scheme s : cfg.schemes)
        for (double n : cfg.photon_means)
            for (double p : cfg.p_grid) cells.push_back({s, n, p});
    return cells;
}

struct SweepOutput {
    std::vector<SweepRecord> records;
    std::vector<std::vector<StateOutcome>> outcomes;  // parallel to records; filled when requested
};

using CellCallback = std::function<void(const SweepRecord&, std::size_t done, std::size_t total)>;

inline SweepOutput run_sweep_detailed(const SweepConfig& cfg, bool keep_outcomes, const CellCallback& on_cell = {})
{
    cfg.validate();
    const StateSample sample = make_sample(cfg.grid, cfg.max_states);
    const auto cells = sweep_cells(cfg);
    SweepOutput out;
    out.records.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto cell = run_cell_detailed(cells[c], sample, cfg.master_seed, cfg.optimizer, cfg.parallelism);
        out.records.push_back(cell.record);
        if (keep_outcomes) out.outcomes.push_back(std::move(cell.outcomes));
        if (on_cell) on_cell(out.records.back(), c + 1, cells.size());
    }
    return out;
}

inline std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) { return run_sweep_detailed(cfg, false).records; }

/// Persisting a finished sweep failed; the computed records are kept.
class SweepPersistError : public IoError {
public:
    SweepPersistError(const std::string& what, SweepOutput out) : IoError(what), output(std::move(out)) {}
    SweepOutput output;
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kRecordHeader =
    "scheme,photon_mean,p,n_states,F_av,F_std,gamma_av,gamma_std,S_av,S_std,mean_objective,n_unconverged,master_seed";
inline constexpr std::string_view kDetailHeader =
    "scheme,photon_mean,p,state_index,theta,delta,phi12,phi13,fidelity,purity,entropy,objective,converged";

/// Shortest decimal that parses back to the same double.
inline std::string format_real(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

class CsvError : public IoError {
public:
    CsvError(std::size_t line, const std::string& what)
        : IoError("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline std::string format_record(const SweepRecord& r)
{
    std::string s;
    s += scheme_name(r.scheme);
    for (double x : {r.photon_mean, r.p}) s += "," + format_real(x);
    s += "," + std::to_string(r.n_states);
    for (double x : {r.F_av, r.F_std, r.gamma_av, r.gamma_std, r.S_av, r.S_std, r.mean_objective})
        s += "," + format_real(x);
    s += "," + std::to_string(r.n_unconverged);
    s += "," + std::to_string(r.master_seed);
    return s;
}

inline void write_records(const std::vector<SweepRecord>& records, std::ostream& os)
{
    os << kRecordHeader << '\n';
    for (const auto& r : records) os << format_record(r) << '\n';
}

inline void write_records(const std::vector<SweepRecord>& records, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_records(records, os);
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

inline void write_details(const std::vector<SweepRecord>& records, const std::vector<std::vector<StateOutcome>>& outcomes,
                          const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << kDetailHeader << '\n';
    for (std::size_t c = 0; c < records.size() && c < outcomes.size(); ++c) {
        const auto& r = records[c];
        for (const auto& o : outcomes[c]) {
            os << scheme_name(r.scheme) << ',' << format_real(r.photon_mean) << ',' << format_real(r.p) << ','
               << o.grid_index;
            for (double x : {o.theta, o.delta, o.phi12, o.phi13, o.merit.fidelity, o.merit.purity, o.merit.entropy,
                             o.objective})
                os << ',' << format_real(x);
            os << ',' << (o.converged ? 1 : 0) << '\n';
        }
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line, std::string_view name)
{
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw CsvError(line, "bad value for " + std::string(name) + ": '" + std::string(s) + "'");
    return v;
}

} // namespace detail

inline std::vector<SweepRecord> read_records(std::istream& is)
{
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw CsvError(1, "empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordHeader) throw CsvError(lineno, "unexpected header");

    std::vector<SweepRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_commas(line);
        if (f.size() != 13) throw CsvError(lineno, "expected 13 fields, got " + std::to_string(f.size()));
        SweepRecord r;
        const auto scheme = parse_scheme(f[0]);
        if (!scheme) throw CsvError(lineno, "unknown scheme '" + std::string(f[0]) + "'");
        r.scheme = *scheme;
        r.photon_mean = detail::parse_field<double>(f[1], lineno, "photon_mean");
        r.p = detail::parse_field<double>(f[2], lineno, "p");
        r.n_states = detail::parse_field<std::size_t>(f[3], lineno, "n_states");
        r.F_av = detail::parse_field<double>(f[4], lineno, "F_av");
        r.F_std = detail::parse_field<double>(f[5], lineno, "F_std");
        r.gamma_av = detail::parse_field<double>(f[6], lineno, "gamma_av");
        r.gamma_std = detail::parse_field<double>(f[7], lineno, "gamma_std");
        r.S_av = detail::parse_field<double>(f[8], lineno, "S_av");
        r.S_std = detail::parse_field<double>(f[9], lineno, "S_std");
        r.mean_objective = detail::parse_field<double>(f[10], lineno, "mean_objective");
        r.n_unconverged = detail::parse_field<std::size_t>(f[11], lineno, "n_unconverged");
        r.master_seed = detail::parse_field<std::uint64_t>(f[12], lineno, "master_seed");
        out.push_back(r);
    }
    return out;
}

inline std::vector<SweepRecord> read_records(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_records(is);
}

/// run_sweep followed by writing cfg.output (and cfg.detail_output when set).
inline SweepOutput run_and_persist(const SweepConfig& cfg, const CellCallback& on_cell = {})
{
    SweepOutput out = run_sweep_detailed(cfg, cfg.detail_output.has_value(), on_cell);
    try {
        write_records(out.records, cfg.output);
        if (cfg.detail_output) write_details(out.records, out.outcomes, *cfg.detail_output);
    } catch (const IoError& e) {
        throw SweepPersistError(e.what(), std::move(out));
    }
    return out;
}

} // namespace qtomo
