#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "qtomo/harness.hpp"

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    return fs::temp_directory_path() / ("qtomo_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

SweepConfig tiny_config()
{
    SweepConfig cfg;
    cfg.max_states = 2;
    cfg.master_seed = 99;
    cfg.optimizer.restarts = 1;
    cfg.optimizer.max_evaluations = 400;
    return cfg;
}

} // namespace

TEST(Linspace, EndpointsAndCount)
{
    const auto v = linspace(0.0, 1.0, 21);
    ASSERT_EQ(v.size(), 21u);
    EXPECT_EQ(v.front(), 0.0);
    EXPECT_EQ(v.back(), 1.0);
    EXPECT_DOUBLE_EQ(v[1], 0.05);
    EXPECT_EQ(linspace(0.3, 0.3, 1), std::vector<double>{0.3});
}

TEST(TaskSeed, DependsOnEveryCoordinate)
{
    const CellSpec base{Scheme::SIC, 10.0, 0.0};
    const auto s = task_seed(1, base, 0);
    EXPECT_NE(s, task_seed(2, base, 0));
    EXPECT_NE(s, task_seed(1, CellSpec{Scheme::MUB, 10.0, 0.0}, 0));
    EXPECT_NE(s, task_seed(1, CellSpec{Scheme::SIC, 10000.0, 0.0}, 0));
    EXPECT_NE(s, task_seed(1, CellSpec{Scheme::SIC, 10.0, 0.05}, 0));
    EXPECT_NE(s, task_seed(1, base, 1));
    EXPECT_EQ(s, task_seed(1, base, 0));
}

TEST(RunCell, SingleStateIsDeterministic)
{
    const auto sample = make_sample(GridShape{1, 1, 1, 1}, 0);
    const auto a = run_cell(Scheme::MUB, 10.0, 0.3, sample, 5, OptimizerOptions{});
    const auto b = run_cell(Scheme::MUB, 10.0, 0.3, sample, 5, OptimizerOptions{});
    EXPECT_EQ(a, b);
    EXPECT_EQ(format_record(a), format_record(b));
    EXPECT_EQ(a.n_states, 1u);
    EXPECT_EQ(a.F_std, 0.0);
}

TEST(RunCell, SubsampleUsesGridIndicesForSeeds)
{
    // The state at grid index 25 sees the same draws whether it runs alone or inside a larger sample.
    const auto full = make_sample(GridShape{}, 200);
    ASSERT_EQ(full.grid_index[1], 25u);
    StateSample single;
    single.states.push_back(full.states[1]);
    single.grid_index.push_back(full.grid_index[1]);
    const auto big = run_cell_detailed({Scheme::SIC, 10.0, 0.0}, full, 3, OptimizerOptions{});
    const auto one = run_cell_detailed({Scheme::SIC, 10.0, 0.0}, single, 3, OptimizerOptions{});
    EXPECT_EQ(big.outcomes[1].merit.fidelity, one.outcomes[0].merit.fidelity);
}

TEST(RunCell, FullyMixedLimitManyPhotons)
{
    const auto sample = make_sample(GridShape{}, 40);
    for (Scheme s : {Scheme::SIC, Scheme::MUB}) {
        const auto r = run_cell(s, 10000.0, 1.0, sample, 1, OptimizerOptions{});
        EXPECT_NEAR(r.gamma_av, 1.0 / 3.0, 0.02);
        EXPECT_NEAR(r.S_av, std::log(3.0), 0.05);
        EXPECT_NEAR(r.F_av, 1.0 / 3.0, 0.02);
    }
}

TEST(RunCell, CleanLimitManyPhotons)
{
    const auto sample = make_sample(GridShape{}, 40);
    EXPECT_GE(run_cell(Scheme::SIC, 10000.0, 0.0, sample, 1, OptimizerOptions{}).F_av, 0.99);
}

TEST(RunCell, RejectsBadInputs)
{
    const auto sample = make_sample(GridShape{1, 1, 1, 1}, 0);
    EXPECT_THROW(run_cell(Scheme::SIC, 10.0, 1.5, sample, 1, OptimizerOptions{}), InvalidInput);
    EXPECT_THROW(run_cell(Scheme::SIC, -1.0, 0.5, sample, 1, OptimizerOptions{}), InvalidInput);
    EXPECT_THROW(run_cell(Scheme::SIC, 10.0, 0.5, StateSample{}, 1, OptimizerOptions{}), InvalidInput);
}

TEST(RunSweep, CardinalityAndOrder)
{
    const auto records = run_sweep(tiny_config());
    ASSERT_EQ(records.size(), 84u);
    EXPECT_EQ(records[0].scheme, Scheme::SIC);
    EXPECT_EQ(records[0].photon_mean, 10.0);
    EXPECT_EQ(records[0].p, 0.0);
    EXPECT_EQ(records[20].p, 1.0);
    EXPECT_EQ(records[21].photon_mean, 10000.0);
    EXPECT_EQ(records[42].scheme, Scheme::MUB);
    for (const auto& r : records) {
        EXPECT_EQ(r.n_states, 2u);
        EXPECT_EQ(r.master_seed, 99u);
    }
}

TEST(RunSweep, SchedulingIndependence)
{
    auto cfg = tiny_config();
    cfg.photon_means = {10.0};
    cfg.p_grid = {0.0, 0.5};
    cfg.max_states = 16;
    cfg.parallelism = 1;
    const auto serial = run_sweep(cfg);
    cfg.parallelism = 8;
    const auto parallel = run_sweep(cfg);
    EXPECT_EQ(serial, parallel);
}

TEST(RunSweep, ValidatesConfig)
{
    auto cfg = tiny_config();
    cfg.p_grid = {0.2, 1.2};
    EXPECT_THROW(run_sweep(cfg), InvalidInput);
    cfg = tiny_config();
    cfg.schemes.clear();
    EXPECT_THROW(run_sweep(cfg), InvalidInput);
    cfg = tiny_config();
    cfg.parallelism = 0;
    EXPECT_THROW(run_sweep(cfg), InvalidInput);
}

TEST(ParallelFor, PropagatesExceptions)
{
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 37) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(WriteRecords, EmptyIsHeaderOnly)
{
    const auto p = temp_path("empty.csv");
    write_records({}, p);
    EXPECT_EQ(slurp(p), std::string(kRecordHeader) + "\n");
    EXPECT_TRUE(read_records(p).empty());
    fs::remove(p);
}

TEST(WriteRecords, OneRecordTwoLines)
{
    SweepRecord r;
    r.scheme = Scheme::MUB;
    r.photon_mean = 10;
    r.p = 0.05;
    r.n_states = 5184;
    r.F_av = 0.9080123456789;
    r.master_seed = 18446744073709551615ULL;
    std::ostringstream os;
    write_records({r}, os);
    EXPECT_EQ(os.str(), std::string(kRecordHeader) + "\nmub,10,0.05,5184,0.9080123456789,0,0,0,0,0,0,0,18446744073709551615\n");
}

TEST(WriteRecords, RoundTripIsBitExact)
{
    auto cfg = tiny_config();
    const auto records = run_sweep(cfg);
    const auto p = temp_path("roundtrip.csv");
    write_records(records, p);
    const auto back = read_records(p);
    ASSERT_EQ(back.size(), 84u);
    EXPECT_EQ(back, records);
    fs::remove(p);
}

TEST(WriteRecords, UnwritablePathIsIoError)
{
    EXPECT_THROW(write_records({}, fs::path("/nonexistent-dir/x/y.csv")), IoError);
}

TEST(ReadRecords, ReportsLineNumbers)
{
    std::istringstream bad(std::string(kRecordHeader) + "\nsic,10,0,1,1,0,1,0,0,0,0,0,1\nsic,10,zz,1,1,0,1,0,0,0,0,0,1\n");
    try {
        read_records(bad);
        FAIL() << "expected CsvError";
    } catch (const CsvError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream empty("");
    EXPECT_THROW(read_records(empty), CsvError);
    std::istringstream header("scheme,foo\n");
    EXPECT_THROW(read_records(header), CsvError);
}

TEST(RunAndPersist, KeepsRecordsWhenWriteFails)
{
    auto cfg = tiny_config();
    cfg.schemes = {Scheme::SIC};
    cfg.photon_means = {10.0};
    cfg.p_grid = {0.0};
    cfg.output = "/nonexistent-dir/out.csv";
    try {
        run_and_persist(cfg);
        FAIL() << "expected SweepPersistError";
    } catch (const SweepPersistError& e) {
        EXPECT_EQ(e.output.records.size(), 1u);
    }
}

TEST(RunAndPersist, DetailFile)
{
    auto cfg = tiny_config();
    cfg.schemes = {Scheme::MUB};
    cfg.photon_means = {10.0};
    cfg.p_grid = {0.0, 1.0};
    cfg.output = temp_path("summary.csv");
    cfg.detail_output = temp_path("detail.csv");
    run_and_persist(cfg);
    std::ifstream is(*cfg.detail_output);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, kDetailHeader);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 4);  // 2 cells x 2 states
    fs::remove(cfg.output);
    fs::remove(*cfg.detail_output);
}
