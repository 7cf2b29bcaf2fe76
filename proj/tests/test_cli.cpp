#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "sdesym/json_io.hpp"

using namespace sdesym;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string temp(const std::string& name) { return ::testing::TempDir() + name; }

}  // namespace

TEST(Cli, ReflectionExitCodes) {
    const std::vector<std::string> base{"check-symmetry", "--catalog-sde", "bm:n=2", "--catalog-transform",
                                        "reflection:n=2,variant=weakB"};
    auto weak = base;
    weak.insert(weak.end(), {"--kind", "weak"});
    EXPECT_EQ(cli(weak).code, 0);
    auto strong = base;
    strong.insert(strong.end(), {"--kind", "strong"});
    const CliRun r = cli(strong);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("NotStrongError"), std::string::npos);
    // B = I is only G-weak, so the weak check fails
    EXPECT_EQ(cli({"check-symmetry", "--catalog-transform", "reflection:n=2", "--kind", "weak"}).code, 1);
    EXPECT_EQ(cli({"check-symmetry", "--catalog-transform", "reflection:n=2", "--kind", "gweak"}).code, 0);
}

TEST(Cli, UsageAndParseErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"parse-check", "sin(x"}).code, 2);
    EXPECT_EQ(cli({"parse-check", "sin(x)", "--n", "x"}).code, 2);
    EXPECT_EQ(cli({"catalog", "show", "frobnicate"}).code, 2);
    EXPECT_EQ(cli({"check-symmetry", "--catalog-transform", "scaling", "--transform", "{\"phi\":[\"x\"]}"}).code, 2);
    EXPECT_EQ(cli({"ibp", "--catalog-symmetry", "bm"}).code, 2);
    EXPECT_EQ(cli({"identity", "stein", "--config", "/nonexistent.json"}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, NumericalFailures) {
    EXPECT_EQ(cli({"parse-check", "log(x)", "--x", "-1"}).code, 3);
    const CliRun blow = cli({"simulate", "--sde", R"({"mu":["x^2"],"sigma":[["0"]]})", "--x0", "5", "--paths", "4"});
    EXPECT_EQ(blow.code, 3);
    EXPECT_NE(blow.err.find("SimulationError"), std::string::npos) << blow.err;
    const CliRun flow = cli({"reconstruct-flow", "--symmetry", R"({"Y":["x^2"]})", "--x", "2", "--lambda", "1"});
    EXPECT_EQ(flow.code, 3);
    EXPECT_NE(flow.err.find("FlowBlowUp"), std::string::npos);
}

TEST(Cli, ParseCheck) {
    const CliRun r = cli({"parse-check", "x^2 + 2*t", "--x", "3", "--t", "0.5", "--no-timestamp"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["command"], "parse-check");
    EXPECT_EQ(j["report"]["value"].get<double>(), 10.0);
    EXPECT_TRUE(j["report"]["depends_on_t"].get<bool>());
    EXPECT_FALSE(j.contains("timestamp"));
    EXPECT_TRUE(Json::parse(cli({"parse-check", "x"}).out).contains("timestamp"));
}

TEST(Cli, GbmPushForward) {
    const CliRun r = cli({"push-sde", "--catalog-transform", "gbm_map:mu=0.1,sigma=0.2,z0=1", "--catalog-expect",
                       "gbm:mu=0.1,sigma=0.2", "--no-timestamp"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_LE(j["report"]["comparison"]["max_abs_mu"].get<double>(), 1e-9);
    EXPECT_LE(j["report"]["comparison"]["max_abs_sigma"].get<double>(), 1e-9);
    EXPECT_EQ(cli({"push-sde", "--catalog-transform", "gbm_map:mu=0.1,sigma=0.2,z0=1", "--catalog-expect",
                   "gbm:mu=0.2,sigma=0.2"})
                  .code,
              1);
}

TEST(Cli, ComposeAndInvert) {
    const CliRun c = cli({"compose", "--catalog-transform", "scaling:a=2", "--catalog-then", "scaling:a=3", "--no-timestamp"});
    ASSERT_EQ(c.code, 0) << c.err;
    const StochTransformation T = transformation_from_json(Json::parse(c.out)["report"]);
    const std::vector<double> x{1.0};
    EXPECT_DOUBLE_EQ(T.phi().evaluate_scalar(x, 1.0), 6.0);
    EXPECT_DOUBLE_EQ(T.f().evaluate_scalar(x, 1.0), 36.0);
    const CliRun i = cli({"invert", "--catalog-transform", "scaling:a=2", "--no-timestamp"});
    ASSERT_EQ(i.code, 0);
    const StochTransformation U = transformation_from_json(Json::parse(i.out)["report"]);
    EXPECT_DOUBLE_EQ(U.phi().evaluate_scalar(x, 4.0), 0.5);
}

TEST(Cli, ConfigFileAndPrecedence) {
    const std::string cfg = temp("cli_config.json");
    std::ofstream(cfg) << R"({"F": "x^2", "t": 1, "mc": {"n_paths": 2000, "seed": 3}})";
    const CliRun a = cli({"identity", "valpha-second", "--config", cfg, "--no-timestamp"});
    ASSERT_EQ(a.code, 0) << a.err;
    const Json ja = Json::parse(a.out);
    EXPECT_EQ(ja["report"]["config"]["n_paths"], 2000);
    EXPECT_EQ(ja["report"]["params"]["F"], "x^2");
    const CliRun b = cli({"identity", "valpha-second", "--config", cfg, "--paths", "1000", "--no-timestamp"});
    const Json jb = Json::parse(b.out);
    EXPECT_EQ(jb["report"]["config"]["n_paths"], 1000);
    EXPECT_EQ(jb["report"]["config"]["seed"], 3);
    std::remove(cfg.c_str());
}

TEST(Cli, ReportsAreByteIdenticalAcrossThreadCounts) {
    std::vector<std::string> texts;
    for (const char* threads : {"1", "2", "8"}) {
        const std::string path = temp(std::string("cli_ibp_") + threads + ".json");
        const CliRun r = cli({"ibp", "--catalog-symmetry", "v_beta_1d:beta=t", "--F", "sin(x)", "--paths", "3000",
                           "--seed", "5", "--threads", threads, "--no-timestamp", "--out", path});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_NE(r.out.find("PASS"), std::string::npos);
        texts.push_back(slurp(path));
        std::remove(path.c_str());
    }
    EXPECT_EQ(texts[0], texts[1]);
    EXPECT_EQ(texts[0], texts[2]);
}

TEST(Cli, SimulateWithTransformAndCsv) {
    const std::string csv = temp("cli_paths.csv");
    const CliRun r = cli({"simulate", "--catalog-transform", "scaling:a=2", "--observable", "x1^2", "--paths", "20",
                       "--dt", "0.25", "--csv", csv, "--no-timestamp"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["report"]["output_time"].get<double>(), 4.0);
    const std::string text = slurp(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "path,k,t,x1,w1,weight");
    std::remove(csv.c_str());
}

TEST(Cli, CatalogAndHypothesis) {
    const Json list = Json::parse(cli({"catalog", "list", "--no-timestamp"}).out);
    EXPECT_EQ(list["report"].size(), 11u);
    const CliRun h = cli({"hypothesis-a", "--symmetry", R"j({"Y":["0"],"H":["exp(x^2)"]})j", "--paths", "4096"});
    EXPECT_EQ(h.code, 1);
    EXPECT_EQ(cli({"hypothesis-a", "--catalog-symmetry", "v_beta_1d:beta=t", "--paths", "4096"}).code, 0);
}

TEST(Cli, IbpPreconditionOverride) {
    const std::string sym = R"({"Y":["t"],"H":["-0.9"]})";
    EXPECT_EQ(cli({"ibp", "--symmetry", sym, "--paths", "1000"}).code, 2);
    const CliRun r = cli({"ibp", "--symmetry", sym, "--paths", "1000", "--override-precondition"});
    EXPECT_NE(r.err.find("warning: precondition overridden"), std::string::npos) << r.err;
}
