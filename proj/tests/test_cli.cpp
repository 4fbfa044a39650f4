// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "process.hpp"

using namespace trendnet::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kBin = TRENDNET_BIN;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "trendnet_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult cli(const fs::path& data, std::vector<std::string> args) {
  std::vector<std::string> argv{kBin, "--data-dir", data.string()};
  argv.insert(argv.end(), args.begin(), args.end());
  return run(argv);
}

std::vector<json> lines_of(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("three-day scenario and report") {
  const auto dir = scratch("scenario");
  const auto data = dir / "data";
  auto sim = cli(data, {"simulate", "--hours", "72", "--period", "1h"});
  REQUIRE(sim.exit_code == 0);
  auto bench = cli(data, {"benchmark", "build", "--days", "3", "--out", (dir / "bench.json").string()});
  REQUIRE(bench.exit_code == 0);
  CHECK(json::parse(read_all(dir / "bench.json"))["benchmarks"].size() == 4);

  REQUIRE(cli(data, {"report", "--out", (dir / "report.json").string()}).exit_code == 0);
  const auto report = json::parse(read_all(dir / "report.json"));
  CHECK(report["scenario"] == json{{"days", 3}, {"period_ms", 3600000}, {"seed", 1}});
  REQUIRE(report["links"].size() == 4);
  for (const auto& l : report["links"]) {
    CHECK(l["samples"] == 72);
    REQUIRE(l["rows"].size() == 24);
    for (int h = 0; h < 24; ++h) CHECK(l["rows"][h]["hour"] == h);
  }

  REQUIRE(cli(data, {"report", "--out", (dir / "report.csv").string(), "--format", "csv"}).exit_code == 0);
  const auto csv = read_all(dir / "report.csv");
  CHECK(csv.rfind("host_ip,interface,hour,mean,sigma\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 24);
}

TEST_CASE("same commands give byte-identical reports") {
  const auto dir = scratch("determinism");
  std::string json_reports[2], csv_reports[2];
  for (int i = 0; i < 2; ++i) {
    const auto data = dir / ("data" + std::to_string(i));
    REQUIRE(cli(data, {"simulate", "--hours", "50", "--period", "30m", "--seed", "42"}).exit_code == 0);
    REQUIRE(cli(data, {"simulate", "--hours", "22"}).exit_code == 0);
    REQUIRE(cli(data, {"benchmark", "build", "--days", "3"}).exit_code == 0);
    const auto j = dir / ("r" + std::to_string(i) + ".json");
    const auto c = dir / ("r" + std::to_string(i) + ".csv");
    REQUIRE(cli(data, {"report", "--out", j.string()}).exit_code == 0);
    REQUIRE(cli(data, {"report", "--out", c.string(), "--format", "csv"}).exit_code == 0);
    json_reports[i] = read_all(j);
    csv_reports[i] = read_all(c);
  }
  CHECK(json_reports[0] == json_reports[1]);
  CHECK(csv_reports[0] == csv_reports[1]);
  CHECK(json::parse(json_reports[0])["links"][0]["samples"] == 144);
  CHECK(json::parse(json_reports[0])["scenario"]["seed"] == 42);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exits");
  auto empty = cli(dir / "data", {"benchmark", "build", "--days", "3"});
  CHECK(empty.exit_code == 1);
  CHECK(empty.output.find("InsufficientData") != std::string::npos);
  CHECK(empty.output.find("hour 0 has 0 of 3 samples") != std::string::npos);

  auto flag = cli(dir / "data", {"simulate", "--hours", "1", "--bogus"});
  CHECK(flag.exit_code == 2);
  CHECK(flag.output.find("Usage:") != std::string::npos);
  CHECK(run({kBin}).exit_code == 2);
  CHECK(cli(dir / "data", {"simulate"}).exit_code == 2);
  CHECK(cli(dir / "data", {"report", "--out", "-", "--format", "xml"}).exit_code == 2);

  CHECK(cli(dir / "data", {"simulate", "--hours", "1", "--period", "30m"}).exit_code == 1);  // dir already polls hourly
  CHECK(cli(dir / "data", {"inject", "--src", "172.16.1.0/24", "--dst", "10.9.9.0/24", "--factor", "2", "--hours", "1"})
            .exit_code == 1);
  CHECK(cli(dir / "data", {"report", "--out", "-"}).exit_code == 1);  // nothing benchmarked yet

  std::ofstream(dir / "bad.json") << R"({"analytics": {"threshold_fraction": 1.5, "deviation_multiplier": -1}})";
  auto bad = cli(dir / "other", {"--config", (dir / "bad.json").string(), "simulate", "--hours", "1"});
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("analytics.threshold_fraction") != std::string::npos);
  CHECK(bad.output.find("analytics.deviation_multiplier") != std::string::npos);
}

TEST_CASE("headless closed loop and watch") {
  const auto dir = scratch("loop");
  const auto data = dir / "data";
  REQUIRE(cli(data, {"simulate", "--hours", "72", "--period", "1h"}).exit_code == 0);
  REQUIRE(cli(data, {"benchmark", "build", "--days", "3"}).exit_code == 0);
  REQUIRE(cli(data, {"simulate", "--hours", "8", "--noise", "off"}).exit_code == 0);
  REQUIRE(cli(data, {"inject", "--src", "172.17.1.0/24", "--dst", "172.17.3.0/24", "--factor", "3", "--hours", "8"})
              .exit_code == 0);
  REQUIRE(cli(data, {"simulate", "--hours", "10"}).exit_code == 0);

  auto watch = cli(data, {"watch"});
  REQUIRE(watch.exit_code == 0);
  std::vector<std::string> seen;
  for (const auto& ev : lines_of(watch.output)) {
    CHECK((ev["kind"] == "trend" || ev["kind"] == "decision"));
    if (ev["kind"] == "trend") seen.push_back("trend " + ev["payload"]["transition"].get<std::string>());
    if (ev["kind"] == "decision") seen.push_back("decision " + ev["payload"]["status"].get<std::string>());
  }
  CHECK(std::count(seen.begin(), seen.end(), "trend confirmed") == 2);
  CHECK(std::count(seen.begin(), seen.end(), "decision applied") == 1);
  CHECK(std::count(seen.begin(), seen.end(), "decision reverted") == 1);

  auto only = cli(data, {"watch", "--links", "192.168.56.102/eth2"});
  for (const auto& ev : lines_of(only.output)) {
    CHECK(ev["kind"] == "trend");
    CHECK(ev["payload"]["event"]["link"]["interface"] == "eth2");
  }
  auto first = lines_of(watch.output).at(0)["seq"].get<std::uint64_t>();
  auto later = lines_of(cli(data, {"watch", "--since", std::to_string(first)}).output);
  CHECK(later.size() + 1 == lines_of(watch.output).size());
}

TEST_CASE("serve answers on the api and stops on SIGTERM") {
  const auto dir = scratch("serve");
  ServeProcess serve({kBin, "--data-dir", (dir / "data").string(), "serve", "--host", "127.0.0.1", "--port", "0"},
                     dir / "serve.log");
  httplib::Client c("127.0.0.1", serve.port());
  auto r = c.Get("/api/v1/health");
  REQUIRE(r);
  CHECK(r->body == R"({"status":"ok"})");
  CHECK(serve.kill(SIGTERM) == 0);
}
