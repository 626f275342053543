#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lohe/scenario.hpp"

using namespace lohe;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = LOHE_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("lohe_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

RunOptions quiet_in(const fs::path& dir) {
    RunOptions o;
    o.output_dir = dir;
    o.quiet = true;
    return o;
}

const char* kMinimal = R"(
id: minimal
model: second_order
params: {m: 0.5, gamma: 1.0, kappa0: 1.0, kappa1: 0.2, N: 4, d: 1}
init: {kind: random, seed: 3, speed: 0.3}
integrator: {dt: 0.01, t_end: 0.5}
)";

template <class E>
std::string error_of(const std::string& text) {
    try {
        auto c = parse_config_text(text);
        validate_config(c, materialize_params(c));
    } catch (const E& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Parse, MinimalConfig) {
    const auto c = parse_config_text(kMinimal);
    EXPECT_EQ(c.id, "minimal");
    EXPECT_EQ(c.model, ModelKind::second_order);
    EXPECT_DOUBLE_EQ(c.params.m, 0.5);
    EXPECT_EQ(c.params.N, 4u);
    EXPECT_FALSE(c.auto_dt);
    EXPECT_DOUBLE_EQ(c.integrator.dt, 0.01);
    EXPECT_TRUE(c.checks.empty());
}

TEST(Parse, MissingFieldNamesFieldAndLine) {
    try {
        load_config(kSource / "tests/data/missing_gamma.yaml");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.code(), exit_code::parse);
        EXPECT_NE(std::string(e.what()).find("params.gamma"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Parse, UnknownKeyIsRejected) {
    std::string text = kMinimal;
    text += "colour: blue\n";
    const auto msg = error_of<ParseError>(text);
    EXPECT_NE(msg.find("colour"), std::string::npos) << msg;
    std::string nested = kMinimal;
    nested.replace(nested.find("speed: 0.3"), 10, "speed: 0.3, sped: 1");
    EXPECT_NE(error_of<ParseError>(nested).find("sped"), std::string::npos);
}

TEST(Parse, MalformedYamlAndTypes) {
    EXPECT_FALSE(error_of<ParseError>("id: [unterminated\n").empty());
    std::string text = kMinimal;
    text.replace(text.find("N: 4"), 4, "N: four");
    EXPECT_FALSE(error_of<ParseError>(text).empty());
    std::string check = kMinimal;
    check += "checks: [no_such_check]\n";
    EXPECT_NE(error_of<ParseError>(check).find("no_such_check"), std::string::npos);
}

TEST(Parse, RandomInitRequiresSeed) {
    std::string text = kMinimal;
    text.replace(text.find("seed: 3, "), 9, "");
    EXPECT_NE(error_of<ParseError>(text).find("seed"), std::string::npos);
}

TEST(Validate, RejectsInconsistentModels) {
    std::string first = kMinimal;
    first.replace(first.find("second_order"), 12, "first_order");
    EXPECT_NE(error_of<ValidationError>(first).find("m = 0"), std::string::npos);

    std::string energy = kMinimal;
    energy += "checks: [energy_monotone]\n";
    energy.replace(energy.find("N: 4, d: 1}"), 11, "N: 4, d: 1, omega: {kind: random, seed: 1}}");
    EXPECT_NE(error_of<ValidationError>(energy).find("homogeneous"), std::string::npos);

    std::string negative = kMinimal;
    negative.replace(negative.find("gamma: 1.0"), 10, "gamma: -1.0");
    EXPECT_FALSE(error_of<ValidationError>(negative).empty());
}

TEST(Run, ExitCodesForParseValidationAndRuntime) {
    const auto dir = scratch("exits");
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    };
    // Configuration problems surface as exceptions carrying the exit code.
    auto code_of = [&](const fs::path& path) {
        try {
            run_scenario(path, quiet_in(dir));
        } catch (const ConfigError& e) {
            return e.code();
        }
        return exit_code::ok;
    };
    EXPECT_EQ(code_of(kSource / "tests/data/missing_gamma.yaml"), exit_code::parse);

    std::string bad = kMinimal;
    bad.replace(bad.find("kappa1: 0.2"), 11, "kappa1: -0.2");
    EXPECT_EQ(code_of(write("bad.yaml", bad)), exit_code::validation);

    // Step far beyond the friction time scale: the run blows up.
    std::string blow = kMinimal;
    blow.replace(blow.find("m: 0.5"), 6, "m: 1.0e-6");
    blow.replace(blow.find("dt: 0.01, t_end: 0.5"), 20, "dt: 1.0, t_end: 100.0, drift_tolerance: 1.0e300");
    const auto s = run_scenario(write("blow.yaml", blow), quiet_in(dir));
    EXPECT_EQ(s.exit_code, exit_code::runtime);
    EXPECT_FALSE(s.error.empty());
    EXPECT_TRUE(fs::exists(s.json_path));
}

TEST(Run, ZeroHorizonWritesOneRow) {
    const auto dir = scratch("zero");
    auto c = parse_config_text(kMinimal);
    c.integrator.t_end = 0.0;
    const auto s = run_scenario(c, quiet_in(dir));
    EXPECT_EQ(s.exit_code, exit_code::ok);
    const auto rows = lines(s.csv_path);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], kCsvHeader);
    const auto j = nlohmann::json::parse(slurp(s.json_path));
    EXPECT_EQ(j["id"], "minimal");
}

TEST(Run, RerunsAreByteIdentical) {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    const auto c = parse_config_text(kMinimal);
    const auto sa = run_scenario(c, quiet_in(a));
    const auto sb = run_scenario(c, quiet_in(b));
    EXPECT_EQ(slurp(sa.csv_path), slurp(sb.csv_path));
    EXPECT_GT(lines(sa.csv_path).size(), 10u);
}

TEST(Run, OutputDirectoryPrecedence) {
    auto c = parse_config_text(kMinimal);
    RunOptions o;
    ::setenv("LOHE_OUTPUT_DIR", "/tmp/from_env", 1);
    EXPECT_EQ(resolve_output_dir(c, o), fs::path("/tmp/from_env"));
    c.output = "/tmp/from_config";
    EXPECT_EQ(resolve_output_dir(c, o), fs::path("/tmp/from_config"));
    o.output_dir = "/tmp/from_flag";
    EXPECT_EQ(resolve_output_dir(c, o), fs::path("/tmp/from_flag"));
    ::unsetenv("LOHE_OUTPUT_DIR");
    c.output.reset();
    o.output_dir.reset();
    EXPECT_EQ(resolve_output_dir(c, o), fs::path("lohe_out"));
}

TEST(Run, FrameworkADemoAggregates) {
    const auto dir = scratch("fa");
    const auto s = run_scenario(kSource / "configs/framework_a_demo.yaml", quiet_in(dir));
    EXPECT_EQ(s.exit_code, exit_code::ok) << s.error;
    ASSERT_TRUE(s.final_record.has_value());
    EXPECT_LE(s.final_record->G, 1e-6);
    EXPECT_EQ(s.checks.size(), 3u);
    EXPECT_TRUE(s.all_passed());
    const auto rows = lines(s.csv_path);
    std::stringstream last(rows.back());
    std::string t, g;
    std::getline(last, t, ',');
    std::getline(last, g, ',');
    EXPECT_DOUBLE_EQ(std::stod(t), 50.0);
    EXPECT_LE(std::stod(g), 1e-6);
}

TEST(Run, FailingCheckGivesExitOne) {
    const auto dir = scratch("fb");
    auto c = load_config(kSource / "configs/framework_b_attempt.yaml");
    c.integrator.t_end = 0.5;
    const auto s = run_scenario(c, quiet_in(dir));
    EXPECT_EQ(s.exit_code, exit_code::check_failed);
    EXPECT_FALSE(s.all_passed());
}

TEST(Run, EveryShippedConfigParsesAndValidates) {
    for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
        if (entry.path().extension() != ".yaml") continue;
        SCOPED_TRACE(entry.path().string());
        const auto c = load_config(entry.path());
        EXPECT_NO_THROW(validate_config(c, materialize_params(c)));
    }
}

TEST(Sweep, SinglePointMatchesDirectRun) {
    const auto a = scratch("sweep_one"), b = scratch("direct_one");
    auto c = parse_config_text(kMinimal);
    c.sweep_kappa0 = {2.0};
    const auto sweep = run_sweep(c, quiet_in(a), 2);
    EXPECT_EQ(sweep.exit_code, exit_code::ok);
    auto direct = c;
    direct.sweep_kappa0.clear();
    direct.params.kappa0 = 2.0;
    const auto s = run_scenario(direct, quiet_in(b));
    EXPECT_EQ(slurp(sweep.runs[0].csv_path), slurp(s.csv_path));
}

TEST(Sweep, ContinuesPastFailingPoint) {
    const auto dir = scratch("sweep_fail");
    auto c = parse_config_text(kMinimal);
    c.sweep_kappa0 = {1.0, 2.0};
    c.params.kappa1 = -1.0; // every point fails validation
    const auto sweep = run_sweep(c, quiet_in(dir), 2);
    ASSERT_EQ(sweep.rows.size(), 2u);
    for (const auto& r : sweep.rows) EXPECT_EQ(r.exit_code, exit_code::validation);
    EXPECT_EQ(sweep.exit_code, exit_code::validation);
    EXPECT_EQ(lines(sweep.csv_path).size(), 3u);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
    const auto a = scratch("workers_1"), b = scratch("workers_3");
    auto c = parse_config_text(kMinimal);
    c.sweep_kappa0 = {0.5, 1.0, 2.0};
    const auto one = run_sweep(c, quiet_in(a), 1);
    const auto three = run_sweep(c, quiet_in(b), 3);
    EXPECT_EQ(slurp(one.csv_path), slurp(three.csv_path));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(slurp(one.runs[k].csv_path), slurp(three.runs[k].csv_path));
}
