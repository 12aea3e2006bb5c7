#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

using namespace gevtail;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args, const std::string& stdin_text = "") {
    std::ostringstream out;
    std::ostringstream err;
    std::istringstream in(stdin_text);
    const int code = cli::run(args, out, err, in);
    return {code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = fs::temp_directory_path() / "gevtail_tests";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << content;
    return p;
}

io::Table parse_table(const std::string& text, io::Metadata* meta = nullptr) {
    std::istringstream in(text);
    return io::Table::read_csv(in, meta);
}

double column_value(const io::Table& t, std::size_t row, const std::string& col) {
    const auto& cols = t.columns();
    const auto idx = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), col) - cols.begin());
    const auto& cell = t.rows().at(row).at(idx);
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    return static_cast<double>(std::get<long long>(cell));
}

} // namespace

TEST(Io, FormatDoubleRoundTrips) {
    CounterRng rng({1, 1});
    for (int k = 0; k < 10000; ++k) {
        const double x = std::ldexp(rng.next_uniform(-1.0, 1.0), static_cast<int>(k % 200) - 100);
        EXPECT_EQ(io::parse_double(io::format_double(x)), x);
    }
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
}

TEST(Io, ReadValues) {
    std::istringstream in("# header\n1.5\n\n  -2 # trailing\n3e-2\n");
    EXPECT_EQ(io::read_values(in), (std::vector<double>{1.5, -2.0, 0.03}));
    std::istringstream bad("1\nabc\n");
    try {
        io::read_values(bad);
        FAIL();
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Io, ReadCustomWeights) {
    std::istringstream in("i,j,weight\n1,3,0.5\n2 4 1.5 # comment\n");
    const auto w = io::read_custom_weights(in);
    EXPECT_EQ(w.size(), 2u);
    EXPECT_EQ(w.at({2, 4}), 1.5);
    std::istringstream bad("1,3\n");
    EXPECT_THROW(io::read_custom_weights(bad), input_error);
}

TEST(Io, CsvRoundTripIsExact) {
    io::Table t({"a", "b", "name"});
    CounterRng rng({3, 3});
    for (int k = 0; k < 200; ++k) {
        t.add_row({rng.next_uniform(-1e6, 1e6) * std::pow(10.0, k % 30 - 15), static_cast<long long>(k - 100),
                   std::string("e") + std::to_string(k)});
    }
    t.add_row({1.0, 0LL, std::string("nj1+jmi")});
    std::ostringstream os;
    const io::Metadata meta{{"seed", "42"}, {"generator", "philox4x32-10"}};
    t.write_csv(os, meta);
    io::Metadata back_meta;
    const auto back = parse_table(os.str(), &back_meta);
    EXPECT_EQ(back_meta, meta);
    ASSERT_EQ(back.columns(), t.columns());
    ASSERT_EQ(back.rows().size(), t.rows().size());
    for (std::size_t r = 0; r < t.rows().size(); ++r) {
        EXPECT_EQ(io::cell_text(back.rows()[r][0]), io::cell_text(t.rows()[r][0]));
        EXPECT_EQ(back.rows()[r][1], t.rows()[r][1]);
        EXPECT_EQ(back.rows()[r][2], t.rows()[r][2]);
    }
}

TEST(Cli, CoeffsJsonExample) {
    const auto r = run_cli({"coeffs", "--n", "3", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["b"]["1"].get<double>(), 0.8221, 5e-5);
    EXPECT_NEAR(j["b"]["2"].get<double>(), 1.1587, 5e-5);
    EXPECT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["metadata"]["generator"], "philox4x32-10");
}

TEST(Cli, CoeffsCsvColumns) {
    const auto r = run_cli({"coeffs", "--n", "30"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_table(r.out);
    EXPECT_EQ(t.columns(), (std::vector<std::string>{"n", "i", "beta", "b", "a_index", "method"}));
    EXPECT_EQ(t.rows().size(), 29u);
    EXPECT_EQ(std::get<std::string>(t.rows()[0][5]), "approx");
    EXPECT_EQ(column_value(t, 0, "b"), approx_b(30, 1));
}

TEST(Cli, EstimateExamples) {
    const auto three = temp_file("three.txt", "1\n0\n-1\n");
    auto r = run_cli({"estimate", "--input", three.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(column_value(parse_table(r.out), 0, "estimate"), -0.2333, 1e-4);

    const auto two = temp_file("two.txt", "1\n2\n");
    r = run_cli({"estimate", "--input", two.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("need N >= 3"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, EstimateFromStdinAndFamilies) {
    auto r = run_cli({"estimate", "--input", "-", "--family", "gpd", "--format", "json"}, "3\n1\n0\n");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["estimate"].get<double>(), std::log(4.0 / 3.0), 1e-14);
    r = run_cli({"estimate", "--input", "-", "--per-elemental"}, "5\n3\n2\n0\n");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_table(r.out);
    EXPECT_EQ(t.columns(), (std::vector<std::string>{"i", "j", "tau", "t", "estimate"}));
    EXPECT_EQ(t.rows().size(), 3u);
}

TEST(Cli, EstimateCustomWeights) {
    const auto w = temp_file("w.csv", "i,j,weight\n2,4,1\n");
    const auto r = run_cli({"estimate", "--input", "-", "--weights", "custom:" + w.string()}, "5\n3\n2\n0\n");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = order_sample(std::vector<double>{5, 3, 2, 0});
    EXPECT_EQ(column_value(parse_table(r.out), 0, "estimate"), elemental_estimate(s, {2, 4, 4}));
    EXPECT_EQ(run_cli({"estimate", "--input", "-", "--weights", "custom:/nonexistent"}, "1\n2\n3\n").code, 2);
    EXPECT_EQ(run_cli({"estimate", "--input", "-", "--weights", "bogus"}, "1\n2\n3\n").code, 1);
}

TEST(Cli, InputErrors) {
    EXPECT_EQ(run_cli({"estimate", "--input", "-"}, "1\nnan\n2\n").code, 2);
    EXPECT_EQ(run_cli({"estimate", "--input", "-"}, "1\n1\n1\n").code, 2);
    EXPECT_EQ(run_cli({"estimate", "--input", "/nonexistent/file"}).code, 2);
    const auto r = run_cli({"estimate", "--input", "-"}, "1\nNaN\n2\n");
    EXPECT_NE(r.err.find("position"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"coeffs"}).code, 1);
    const auto r = run_cli({"coeffs", "--n", "3", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(run_cli({"coeffs", "--n", "3", "--method", "magic"}).code, 1);
    EXPECT_EQ(run_cli({"sweep", "--xi", "a,b"}).code, 1);
}

TEST(Cli, NumericErrorExitCode) {
    const auto r = run_cli({"coeffs", "--n", "80", "--method", "recursion"});
    EXPECT_EQ(r.code, 3);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, HelpForEverySubcommand) {
    for (const char* sub : {"coeffs", "estimate", "sample", "idealized", "mle", "sweep", "consistency", "midpoint",
                            "mle-compare"}) {
        const auto r = run_cli({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
    }
}

TEST(Cli, NoPartialOutputOnError) {
    const auto target = fs::temp_directory_path() / "gevtail_tests" / "should_not_exist.csv";
    fs::remove(target);
    const auto r = run_cli({"estimate", "--input", "-", "--out", target.string()}, "1\n2\n");
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(fs::exists(target));
}

TEST(Cli, OutFile) {
    const auto target = fs::temp_directory_path() / "gevtail_tests" / "coeffs.csv";
    const auto r = run_cli({"coeffs", "--n", "4", "--out", target.string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(target);
    EXPECT_EQ(io::Table::read_csv(f).rows().size(), 3u);
}

TEST(Cli, SampleIsSeededAndReadable) {
    const auto a = run_cli({"sample", "--xi=-0.5", "--count", "100", "--seed", "9"});
    const auto b = run_cli({"sample", "--xi", "-0.5", "--count", "100", "--seed", "9"});
    const auto c = run_cli({"sample", "--xi=-0.5", "--count", "100", "--seed", "10"});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    std::istringstream in(a.out);
    const auto values = io::read_values(in);
    EXPECT_EQ(values, sample_gev({0, 1, -0.5}, 100, RngSpec{9, 0}));
    EXPECT_NE(a.out.find("# generator: philox4x32-10"), std::string::npos);
    EXPECT_NE(a.out.find("# seed: 9"), std::string::npos);
    EXPECT_EQ(run_cli({"sample", "--count", "5", "--sigma", "-1"}).code, 2);
}

TEST(Cli, IdealizedSampleAndStudy) {
    auto r = run_cli({"idealized", "--n", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    const auto v = io::read_values(in);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_NEAR(v[0], 1.7019833552815002, 1e-14);
    r = run_cli({"idealized", "--study", "--n-list", "31", "--xi-min", "0", "--xi-max", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(column_value(parse_table(r.out), 0, "estimate"), 0.0, 0.3);
}

TEST(Cli, MleJson) {
    const auto data = temp_file("mle.txt", [] {
        std::string s;
        for (double x : sample_gev({0, 1, 0.1}, 500, RngSpec{1, 1})) s += io::format_double(x) + "\n";
        return s;
    }());
    const auto r = run_cli({"mle", "--input", data.string(), "--init", "moments"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["status"], "converged");
    EXPECT_NEAR(j["params"]["xi"].get<double>(), 0.1, 0.1);
    EXPECT_EQ(j["metadata"]["init"], "moments");
}

TEST(Cli, SweepOutputAndReproducibility) {
    const std::vector<std::string> args{"sweep", "--n", "5", "--xi=-1,0,1", "--replicates", "300",
                                        "--weights", "equal,nj1", "--seed", "12", "--reference", "equal"};
    const auto a = run_cli(args);
    ASSERT_EQ(a.code, 0) << a.err;
    auto args2 = args;
    args2.insert(args2.end(), {"--threads", "3"});
    const auto b = run_cli(args2);
    io::Metadata meta;
    const auto ta = parse_table(a.out, &meta);
    const auto tb = parse_table(b.out);
    EXPECT_EQ(ta.rows(), tb.rows());
    EXPECT_EQ(ta.rows().size(), 6u);
    EXPECT_EQ(column_value(ta, 0, "rmse_ratio"), 1.0);
    bool has_rejected = false;
    for (const auto& [k, v] : meta) has_rejected |= (k == "total_rejected");
    EXPECT_TRUE(has_rejected);
}

TEST(Cli, SweepSingleReplicateMatchesEstimate) {
    const auto r = run_cli({"sweep", "--n", "6", "--xi", "0.3", "--replicates", "1", "--weights", "equal",
                            "--seed", "77"});
    ASSERT_EQ(r.code, 0) << r.err;
    SweepConfig cfg;
    cfg.n = 6;
    cfg.xi_grid = {0.3};
    cfg.seed = {77, 0};
    std::string text;
    for (double x : draw_replicate_sample(cfg, 0, 0)) text += io::format_double(x) + "\n";
    const auto e = run_cli({"estimate", "--input", "-"}, text);
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(column_value(parse_table(r.out), 0, "mean"), column_value(parse_table(e.out), 0, "estimate"));
}

TEST(Cli, ConfigFilePrecedence) {
    const auto cfg = temp_file("sweep.cfg", "# sweep settings\nn = 4\nreplicates = 50\nxi = 0.5\nweights = equal\n");
    const auto r = run_cli({"sweep", "--config", cfg.string(), "--n", "6"});
    ASSERT_EQ(r.code, 0) << r.err;
    io::Metadata meta;
    const auto t = parse_table(r.out, &meta);
    EXPECT_EQ(column_value(t, 0, "n"), 6.0);
    EXPECT_EQ(column_value(t, 0, "replicates"), 50.0);
    bool echoed = false;
    for (const auto& [k, v] : meta) echoed |= (k == "replicates" && v == "50");
    EXPECT_TRUE(echoed);

    const auto bad = temp_file("bad.cfg", "unknown_key = 1\n");
    EXPECT_EQ(run_cli({"sweep", "--config", bad.string()}).code, 1);
    EXPECT_EQ(run_cli({"sweep", "--config", "/nonexistent.cfg"}).code, 1);
}

TEST(Cli, ConsistencyMidpointCompare) {
    auto r = run_cli({"consistency", "--n-list", "10,40", "--xi", "1", "--replicates", "300"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto t = parse_table(r.out);
    EXPECT_EQ(t.rows().size(), 2u);
    EXPECT_NEAR(column_value(t, 0, "abscissa"), 1 - std::sqrt(0.2), 1e-15);

    r = run_cli({"midpoint", "--points", "101"});
    ASSERT_EQ(r.code, 0) << r.err;
    t = parse_table(r.out);
    ASSERT_EQ(t.rows().size(), 101u);
    EXPECT_NEAR(column_value(t, 50, "estimate"), -0.2333, 1e-4);
    EXPECT_EQ(run_cli({"midpoint", "--grid", "1"}).code, 2);

    r = run_cli({"mle-compare", "--replicates", "40", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_table(r.out).rows().size(), 40u);
    EXPECT_EQ(r.out, run_cli({"mle-compare", "--replicates", "40", "--seed", "3"}).out);
}

TEST(Cli, Version) {
    const auto r = run_cli({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(std::string(version)), std::string::npos);
}
