#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relisim/error.hpp"
#include "relisim/experiment.hpp"

using namespace relisim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = RELISIM_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("relisim-test-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string zero_config(double g_star, const std::string& mode = "crude", const std::string& report_as = "reliability") {
    return R"({
  "model": {"builtin": "zero"},
  "initial": {"kind": "constant", "value": [0.0]},
  "integrator": {"step": 0.1, "t_end": 1.0},
  "topology": {"mode": "single", "components": [{"g": "x", "g_star": )" +
           std::to_string(g_star) + R"(}]},
  "control": {"type": "constant", "value": [0.5]},
  "campaign": {"mode": ")" + mode + R"(", "samples": 200, "seed": 5, "report_as": ")" + report_as + R"("}
})";
}

std::string config_error_where(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "no error";
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RELISIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("zero dynamics: P_S is exactly 1 below the threshold and exactly 0 above it") {
    const auto safe = run_experiment(parse_config(zero_config(1.0)));
    REQUIRE(safe.runs.size() == 1);
    CHECK(safe.runs[0].result.report.estimate() == 1.0);
    CHECK(safe.runs[0].result.report.variance == 0.0);

    const auto failed = run_experiment(parse_config(zero_config(-1.0)));
    CHECK(failed.runs[0].result.report.estimate() == 0.0);
    CHECK(failed.runs[0].result.report.failures == 200);

    const auto both = run_experiment(parse_config(zero_config(1.0, "both")));
    REQUIRE(both.runs.size() == 2);
    CHECK(both.runs[1].result.report.estimate() == 1.0);
}

TEST_CASE("syntax errors report the line and validation errors the field") {
    CHECK(config_error_where("{\n  \"model\": {\"builtin\": \"zero\"},\n  \"initial\": ,\n}") == "line 3, column 14");
    CHECK(config_error_where("{\"model\": 1") == "line 1, column 12");

    auto doc = json::parse(zero_config(1.0));
    auto where = [&](const json& d) { return config_error_where(d.dump()); };

    auto d = doc;
    d["integrator"].erase("step");
    CHECK(where(d) == "integrator.step");
    d = doc;
    d["integrator"]["step"] = -0.1;
    CHECK(where(d).rfind("integrator", 0) == 0);
    d = doc;
    d["topology"]["components"][0]["g"] = "x +* 2";
    CHECK(where(d).rfind("topology.components[0].g", 0) == 0);
    d = doc;
    d["topology"]["components"][0]["g"] = "x(t - 1)";
    CHECK(where(d).rfind("topology.components[0].g", 0) == 0);
    d = doc;
    d["model"]["builtin"] = "nonesuch";
    CHECK(where(d) == "model.builtin");
    d = doc;
    d["model"] = {{"builtin", "brownian"}, {"params", {{"mu", 0.0}, {"nu", 1.0}}}};
    CHECK(where(d).rfind("model.params", 0) == 0);
    d = doc;
    d["campaign"]["samples"] = 0;
    CHECK(where(d) == "campaign.samples");
    d = doc;
    d["initial"]["value"] = {0.0, 1.0};
    CHECK(where(d) == "initial.value");
    d = doc;
    d["campaign"]["mode"] = "importance";
    d["control"] = {{"type", "none"}};
    CHECK(where(d) == "control");
    d = doc;
    d["model"] = {{"n", 1}, {"m", 1}, {"drift", {"-x(t - 0.5)"}}, {"diffusion", {{"-1 * "}}}};
    CHECK(where(d).rfind("model.diffusion[0][0]", 0) == 0);
}

TEST_CASE("delays must be non-negative") {
    auto doc = json::parse(zero_config(1.0));
    doc["model"] = {{"builtin", "linear-delay"}, {"params", {{"tau", -1.0}}}};
    CHECK(config_error_where(doc.dump()) == "model.params.tau");
    doc["model"] = {{"n", 1}, {"m", 1}, {"drift", {"x(t + 0.5)"}}, {"diffusion", {{"1"}}}};
    CHECK(config_error_where(doc.dump()).rfind("model.drift[0]", 0) == 0);
}

TEST_CASE("both campaigns share one manifest id; empty campaign list writes only the manifest") {
    const auto cfg = parse_config(zero_config(1.0, "both"));
    const auto art = run_experiment(cfg);
    const auto dir = scratch("both");
    emit_report(art, {ReportFormat::csv, ReportFormat::jsonl}, dir);
    std::ifstream csv(dir / "reports.csv");
    std::string header, row;
    std::getline(csv, header);
    CHECK(header == report_csv_header());
    std::vector<std::string> ids;
    while (std::getline(csv, row)) ids.push_back(split(row, ',')[0]);
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] == ids[1]);
    CHECK(ids[0] == cfg.manifest_id());
    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["manifest_id"] == ids[0]);

    const auto none = run_experiment(parse_config(zero_config(1.0, "none")));
    const auto empty_dir = scratch("none");
    const auto files = emit_report(none, {ReportFormat::csv, ReportFormat::jsonl}, empty_dir);
    REQUIRE(files.size() == 1);
    CHECK(files[0].filename() == "manifest.json");
    CHECK(std::distance(fs::directory_iterator(empty_dir), fs::directory_iterator{}) == 1);
    fs::remove_all(dir);
    fs::remove_all(empty_dir);
}

TEST_CASE("emitted reports round-trip: std_error recomputed from variance and M") {
    const auto cfg = load_config(kConfigs / "delay-series.json", {std::nullopt, 3000, std::nullopt, std::nullopt});
    const auto art = run_experiment(cfg);
    const auto dir = scratch("roundtrip");
    emit_report(art, cfg.formats, dir);

    std::ifstream csv(dir / "reports.csv");
    std::string line;
    std::getline(csv, line);
    const auto cols = split(line, ',');
    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    };
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const auto f = split(line, ',');
        const double variance = std::stod(f[col("variance")]);
        const double se = std::stod(f[col("std_error")]);
        const double est = std::stod(f[col("estimate")]);
        CHECK(std::abs(std::sqrt(variance) - se) <= 4 * std::numeric_limits<double>::epsilon() * se);
        CHECK(std::stod(f[col("ci95_low")]) == doctest::Approx(est - 1.96 * se).epsilon(1e-15));
        // 17 significant digits: parsing returns the exact double.
        CHECK(std::stod(f[col("failure")]) == art.runs[rows].result.report.failure);
        ++rows;
    }
    CHECK(rows == 2);

    std::ifstream jl(dir / "reports.jsonl");
    std::size_t k = 0;
    while (std::getline(jl, line)) {
        const auto obj = json::parse(line);
        CHECK(obj["std_error"].get<double>() == art.runs[k].result.report.std_error);
        CHECK(obj["samples"].get<std::size_t>() == art.runs[k].result.report.sample_count);
        ++k;
    }
    CHECK(k == 2);
    fs::remove_all(dir);
}

TEST_CASE("same configuration gives byte-identical reports; the manifest reproduces the run") {
    const Overrides small{std::nullopt, 2000, std::nullopt, std::nullopt};
    const auto cfg = load_config(kConfigs / "brownian-barrier.json", small);
    const auto a = scratch("rerun-a"), b = scratch("rerun-b"), c = scratch("rerun-c");
    emit_report(run_experiment(cfg, 1), cfg.formats, a);
    emit_report(run_experiment(cfg, 3), cfg.formats, b);
    for (const char* f : {"manifest.json", "reports.csv", "reports.jsonl"}) CHECK(slurp(a / f) == slurp(b / f));

    const auto manifest = nlohmann::ordered_json::parse(slurp(a / "manifest.json"));
    const auto again = parse_config(manifest["config"]);
    CHECK(again.manifest_id() == cfg.manifest_id());
    CHECK(again.resolved == cfg.resolved);
    emit_report(run_experiment(again), again.formats, c);
    CHECK(slurp(a / "reports.csv") == slurp(c / "reports.csv"));

    const auto other = load_config(kConfigs / "brownian-barrier.json", {std::uint64_t{1}, 2000, std::nullopt, std::nullopt});
    CHECK(other.manifest_id() != cfg.manifest_id());
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("bundled benchmark: 10^5 crude samples agree with the pinned 10^6 run") {
    // Independent run: seed 99, 10^6 trajectories on the same grid, 2246 failures.
    const double pinned = 2246.0 / 1e6;
    const auto cfg = load_config(kConfigs / "brownian-barrier.json", {std::nullopt, std::nullopt, "crude", std::nullopt});
    REQUIRE(cfg.crude_samples == 100000);
    const auto art = run_experiment(cfg);
    const auto& r = art.runs.at(0).result.report;
    CAPTURE(r.failure);
    CHECK(std::abs(r.failure - pinned) < 3.0 * r.std_error);
}

TEST_CASE("unwritable output directory raises IoError") {
    const auto art = run_experiment(parse_config(zero_config(1.0)));
    const auto file = scratch("blocker");
    std::ofstream(file) << "x";
    CHECK_THROWS_AS(emit_report(art, {ReportFormat::csv}, file / "sub"), IoError);
    fs::remove(file);
}

TEST_CASE("trajectory dump is plot-ready") {
    const auto cfg = parse_config(zero_config(1.0, "both"));
    const auto dir = scratch("dump");
    const auto files = dump_trajectories(cfg, 3, dir);
    REQUIRE(files.size() == 2);
    std::ifstream in(files[1]);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "trajectory,t,x0,diverged,weight_final");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3 * 11);
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
    const auto out = scratch("cli");
    const std::string barrier = (kConfigs / "brownian-barrier.json").string();
    CHECK(run_cli("--config " + barrier + " --samples 500 --out " + out.string()) == 0);
    CHECK(fs::exists(out / "reports.csv"));
    CHECK(fs::exists(out / "diagnostics.json"));
    CHECK(run_cli("--config " + barrier + " --samples 500 --mode sideways --out " + out.string()) == 2);
    CHECK(run_cli("--config /nonexistent.json") == 2);

    const auto bad = out / "bad.json";
    std::ofstream(bad) << "{ \"model\": ";
    CHECK(run_cli("--config " + bad.string()) == 2);

    // Drift blows up on every path: divergence abort.
    const auto diverging = out / "diverging.json";
    auto doc = json::parse(zero_config(1.0));
    doc["model"] = {{"n", 1}, {"m", 1}, {"drift", {"1e200 * (1 + x * x)"}}, {"diffusion", {{"1"}}}};
    std::ofstream(diverging) << doc.dump();
    CHECK(run_cli("--config " + diverging.string() + " --out " + out.string()) == 3);
    const auto diag = json::parse(slurp(out / "diagnostics.json"));
    CHECK(diag["aborted"].is_string());
    fs::remove_all(out);
}
