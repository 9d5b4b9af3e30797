#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "geval_cli/cli.hpp"
#include "geval_cli/config.hpp"

using namespace geval::cli;
using nlohmann::json;

namespace {

std::filesystem::path scratch() {
    auto dir = std::filesystem::temp_directory_path() / "geval_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

json base(int steps = 16) { return {{"lattice", {{"steps", steps}, {"horizon", 1.0}}}}; }

}  // namespace

TEST(Cli, SolveZeroDriverOnBrownianClaim) {
    json cfg = base();
    cfg["driver"] = "zero";
    cfg["claim"] = "B1";
    const auto r = run_command("solve", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_NEAR(r.report["result"]["Y0"].get<double>(), 0.0, 1e-15);
    EXPECT_EQ(r.report["header"]["version"], "0.1.0");
    EXPECT_TRUE(r.report["header"]["seed"].is_null());
    EXPECT_EQ(r.report["header"]["config_hash"].get<std::string>().size(), 16u);
    EXPECT_EQ(r.csv.rfind("time_index,node_index,value\n", 0), 0u);
}

TEST(Cli, VerifyAxiomsOnGMu) {
    json cfg = base();
    cfg["driver"] = {{"name", "g_mu"}, {"params", {{"mu", 0.5}}}};
    cfg["seed"] = 42;
    cfg["axioms"] = {{"samples", 100}};
    const auto r = run_command("verify-axioms", cfg);
    EXPECT_EQ(r.exit_code, kSuccess) << r.text;
    EXPECT_EQ(r.report["header"]["seed"], 42);
    EXPECT_NE(r.text.find("A5"), std::string::npos);
}

TEST(Cli, VerifyAxiomsReportsViolationWithExitOne) {
    json cfg = base(8);
    cfg["evaluation"] = {{"kind", "black_box"}, {"mu", 0.05}, {"base", {{"kind", "driver"}, {"name", "g_mu"}, {"params", {{"mu", 1.0}}}}}};
    cfg["seed"] = 1;
    cfg["axioms"] = {{"samples", 20}};
    EXPECT_EQ(run_command("verify-axioms", cfg).exit_code, kPropertyFailure);
}

TEST(Cli, RecoverWritesTable) {
    const auto table = scratch() / "kappa.json";
    json cfg = base(64);
    cfg["lattice"]["path_steps"] = 0;
    cfg["driver"] = {{"name", "kappa_abs_z"}, {"params", {{"kappa", 0.3}}}};
    cfg["recover"] = {{"grid", {{"times", {0, 32}}, {"ys", {0.0}}, {"zs", {-2, -1, 0, 1, 2}}}}, {"table", table.string()}};
    const auto r = run_command("recover", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    std::ifstream in(table);
    const auto tab = geval::TabulatedDriver::from_json(json::parse(in));
    const std::vector<double> expect{0.6, 0.3, 0.0, 0.3, 0.6};
    for (std::size_t i = 0; i < tab.size(); ++i) EXPECT_NEAR(tab.at(i), expect[i % 5], 1e-6);
}

TEST(Cli, RoundTripNeedsSeed) {
    json cfg = base(32);
    cfg["lattice"]["path_steps"] = 0;
    cfg["driver"] = {{"name", "kappa_abs_z"}, {"params", {{"kappa", 0.3}}}};
    cfg["recover"] = {{"roundtrip", {{"cases", 3}}}};
    EXPECT_EQ(run_command("recover", cfg).exit_code, kConfigError);
    EXPECT_EQ(run_command("recover", cfg, {7, {}}).exit_code, kSuccess);
}

TEST(Cli, ReportsAreByteIdentical) {
    json cfg = base(12);
    cfg["driver"] = {{"name", "g_mu"}, {"params", {{"mu", 0.5}}}};
    cfg["seed"] = 9;
    cfg["claim"] = "max(S - 100, 0)";
    cfg["axioms"] = {{"samples", 15}};
    for (const char* cmd : {"verify-axioms", "solve", "report"})
        EXPECT_EQ(run_command(cmd, cfg).report.dump(), run_command(cmd, cfg).report.dump()) << cmd;
}

TEST(Cli, ExitCodes) {
    json cfg = base(4);
    cfg["driver"] = {{"name", "g_mu"}, {"params", {{"mu", 100.0}}}};
    cfg["claim"] = "1";
    EXPECT_EQ(run_command("solve", cfg).exit_code, kNumericalFailure);
    EXPECT_EQ(run_command("launch", cfg).exit_code, kConfigError);
    cfg["driver"] = "no_such_driver";
    EXPECT_EQ(run_command("solve", cfg).exit_code, kConfigError);
    cfg["driver"] = "zero";
    cfg["claim"] = "max(S, )";
    const auto r = run_command("solve", cfg);
    EXPECT_EQ(r.exit_code, kConfigError);
    EXPECT_NE(r.error.find("offset 7"), std::string::npos);
    EXPECT_EQ(run_command("solve", json::array()).exit_code, kConfigError);
    EXPECT_EQ(run_command("solve", {{"lattice", {{"steps", "x"}}}}).exit_code, kConfigError);
}

TEST(Cli, EvaluationSources) {
    json cfg = base(8);
    cfg["claim"] = "B1";
    cfg["evaluation"] = {{"kind", "concatenate"},
                         {"segments",
                          {{{"begin", 0}, {"end", 4}, {"evaluation", {{"kind", "driver"}, {"name", "kappa_abs_z"}, {"params", {{"kappa", 0.3}}}}}},
                           {{"begin", 4}, {"end", 8}, {"evaluation", {{"kind", "cond_expect"}}}}}}};
    auto r = run_command("evaluate", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_NEAR(r.report["result"]["values"][0].get<double>(), 0.15, 1e-12);

    cfg["evaluation"] = {{"kind", "lifted"}, {"base", {{"kind", "cond_expect"}}}, {"dividend", {{"rate", 0.5}}}};
    r = run_command("evaluate", cfg);
    EXPECT_NEAR(r.report["result"]["values"][0].get<double>(), 0.5, 1e-12);

    cfg["evaluation"] = {{"kind", "tabulated"},
                         {"table", geval::TabulatedDriver::sample(geval::kappa_abs_z(0.3), {0}, {0.0}, {{-1.0, 0.0, 1.0}}).to_json()}};
    r = run_command("solve", cfg);
    EXPECT_NEAR(r.report["result"]["Y0"].get<double>(), 0.3, 1e-12);
}

TEST(Cli, ProbeDecomposeFixpointReport) {
    json cfg = base(16);
    cfg["lattice"]["path_steps"] = 4;
    cfg["driver"] = {{"name", "kappa_abs_z"}, {"params", {{"kappa", 0.3}}}};
    cfg["claim"] = "B1*B1";
    cfg["probe"] = {{"t", 2}, {"points", {{-2.0}, {1.0}}}};
    auto r = run_command("probe", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_NEAR(r.report["result"]["results"][0]["value"].get<double>(), 0.6, 1e-12);

    cfg["decompose"] = {{"dividend", {{"increments", 0.01}}}, {"schedule", {1, 4, 16}}};
    r = run_command("decompose", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_LT(r.report["result"]["direct"]["recovery_error"].get<double>(), 1e-8);

    cfg["fixpoint"] = {{"source", {{"expression", "0.5 * abs(Y) + B1"}, {"c", 0.5}}}};
    r = run_command("fixpoint", cfg);
    ASSERT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_EQ(r.report["result"]["classification"]["kind"], "martingale");

    cfg["report"] = {{"apriori", {{"source", 0.2}}}};
    r = run_command("report", cfg);
    EXPECT_EQ(r.exit_code, kSuccess) << r.error;
    EXPECT_FALSE(r.report["result"]["exceeds_declared"].get<bool>());
}

TEST(Cli, DividendExpressions) {
    json cfg = base(4);
    cfg["driver"] = "zero";
    cfg["claim"] = "0";
    cfg["dividend"] = {{"process", "B1"}};
    auto r = run_command("solve", cfg);
    EXPECT_NEAR(r.report["result"]["Y0"].get<double>(), 0.0, 1e-15);
    cfg["dividend"] = {{"rate", "1 + T"}};
    r = run_command("solve", cfg);
    EXPECT_NEAR(r.report["result"]["Y0"].get<double>(), 2.0, 1e-14);
    cfg["dividend"] = json::object();
    EXPECT_EQ(run_command("solve", cfg).exit_code, kConfigError);
}

TEST(Cli, ConfigHashIsStable) {
    const json a = json::parse(R"({"b": 1, "a": [1, 2]})");
    const json b = json::parse(R"({"a": [1, 2], "b": 1})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(base()));
}
