#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "depth/depth.hpp"

using namespace depth;
using Catch::Approx;

namespace {

struct CliFixture {
  std::filesystem::path dir;

  CliFixture() {
    dir = std::filesystem::temp_directory_path() /
          ("depth_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
  }
  ~CliFixture() { std::filesystem::remove_all(dir); }

  std::string file(const std::string& name) const {
    return (dir / name).string();
  }

  int run(const std::string& args) const {
    const std::string command = std::string(DEPTH_CLI_PATH) + " " + args +
                                " 2>> " + file("stderr.log");
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

const std::string kSquareCsv = "x1,x2\n0,0\n1,0\n0,1\n1,1\n";

// Splits a rendered table into trimmed cells; keeps string columns intact.
std::vector<std::vector<std::string>> parse_table(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("depth command reproduces exact plane values") {
  CliFixture cli;
  write_text_file(cli.file("reference.csv"), kSquareCsv);
  write_text_file(cli.file("query.csv"), "x1,x2\n0.5,0.5\n10,10\n");
  REQUIRE(cli.run("depth --input " + cli.file("query.csv") + " --reference " +
                  cli.file("reference.csv") + " --notion halfspace --seed 1 " +
                  "--output " + cli.file("depths.csv")) == 0);
  const auto rows = parse_table(read_text_file(cli.file("depths.csv")));
  REQUIRE(rows.size() == 3);  // header + two queries
  CHECK(rows[1][1] == "0.5");
  CHECK(rows[1][2] == "exact");
  CHECK(rows[2][1] == "0");
}

TEST_CASE("depth command: mahalanobis at the mean is one") {
  CliFixture cli;
  write_text_file(cli.file("reference.csv"), kSquareCsv);
  write_text_file(cli.file("query.csv"), "x1,x2\n0.5,0.5\n");
  REQUIRE(cli.run("depth --input " + cli.file("query.csv") + " --reference " +
                  cli.file("reference.csv") +
                  " --notion mahalanobis --seed 1 --output " +
                  cli.file("depths.csv")) == 0);
  const auto rows = parse_table(read_text_file(cli.file("depths.csv")));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "1");
}

TEST_CASE("malformed csv input exits with code 2") {
  CliFixture cli;
  write_text_file(cli.file("reference.csv"), kSquareCsv);
  write_text_file(cli.file("query.csv"), "x1,x2\n0.5,abc\n");
  CHECK(cli.run("depth --input " + cli.file("query.csv") + " --reference " +
                cli.file("reference.csv") + " --notion halfspace --seed 1 " +
                "--output " + cli.file("depths.csv")) == 2);
}

TEST_CASE("dimension mismatch exits with code 3") {
  CliFixture cli;
  write_text_file(cli.file("reference.csv"), kSquareCsv);
  write_text_file(cli.file("query.csv"), "x1,x2,x3\n1,2,3\n");
  CHECK(cli.run("depth --input " + cli.file("query.csv") + " --reference " +
                cli.file("reference.csv") + " --notion halfspace --seed 1 " +
                "--output " + cli.file("depths.csv")) == 3);
}

TEST_CASE("fit/score round trip matches the in-process pipeline") {
  CliFixture cli;
  Scenario scenario;
  scenario.tag = ScenarioTag::clustered_s4;
  scenario.seed = 7;
  REQUIRE(cli.run("simulate --scenario clustered_s4 --seed 7 --output " +
                  cli.file("train.csv")) == 0);
  REQUIRE(cli.run("fit --input " + cli.file("train.csv") +
                  " --notion projection --strategy nelder_mead " +
                  "--directions 300 --threshold-policy quantile --alpha 0.1 " +
                  "--seed 5 --output " + cli.file("model.json")) == 0);
  REQUIRE(cli.run("score --model " + cli.file("model.json") + " --input " +
                  cli.file("train.csv") + " --output " +
                  cli.file("report.csv")) == 0);

  // In-process reference run.
  const LabeledSample sample = generate(scenario);
  SearchBudget budget;
  budget.strategy = SearchStrategy::nelder_mead;
  budget.n_directions = 300;
  budget.seed = 5;
  const DepthModel model = fit(sample.data, DepthNotion::projection, budget,
                               ThresholdSpec::quantile(0.1));
  const auto reports = score_all(model, sample.data);

  const CsvTable table = read_csv(cli.file("report.csv"));
  REQUIRE(table.rows() == sample.data.n());
  for (Index i = 0; i < table.rows(); ++i) {
    REQUIRE(table.values(i, 1) ==
            reports[static_cast<std::size_t>(i)].depth.value);
    REQUIRE((table.values(i, 2) != 0.0) ==
            reports[static_cast<std::size_t>(i)].is_anomaly);
  }
}

TEST_CASE("empty query file produces an empty report with exit 0") {
  CliFixture cli;
  write_text_file(cli.file("train.csv"), kSquareCsv);
  REQUIRE(cli.run("fit --input " + cli.file("train.csv") +
                  " --notion mahalanobis --threshold-policy fixed " +
                  "--alpha 0.1 --seed 2 --output " + cli.file("model.json")) ==
          0);
  write_text_file(cli.file("empty.csv"), "x1,x2\n");
  REQUIRE(cli.run("score --model " + cli.file("model.json") + " --input " +
                  cli.file("empty.csv") + " --output " +
                  cli.file("report.csv")) == 0);
  const std::string report = read_text_file(cli.file("report.csv"));
  CHECK(report.find("index,depth,is_anomaly") != std::string::npos);
  CHECK(report.find("# summary: scored=0 flagged=0") != std::string::npos);
}

TEST_CASE("model version mismatch exits with code 4") {
  CliFixture cli;
  write_text_file(cli.file("train.csv"), kSquareCsv);
  REQUIRE(cli.run("fit --input " + cli.file("train.csv") +
                  " --notion mahalanobis --threshold-policy fixed " +
                  "--alpha 0.1 --seed 2 --output " + cli.file("model.json")) ==
          0);
  std::string model = read_text_file(cli.file("model.json"));
  const auto at = model.find("\"format_version\": 1");
  REQUIRE(at != std::string::npos);
  model.replace(at, 19, "\"format_version\": 3");
  write_text_file(cli.file("model.json"), model);
  write_text_file(cli.file("query.csv"), "x1,x2\n0.5,0.5\n");
  CHECK(cli.run("score --model " + cli.file("model.json") + " --input " +
                cli.file("query.csv") + " --output " + cli.file("r.csv")) ==
        4);
  // Truncated document is also a format error.
  write_text_file(cli.file("model.json"), model.substr(0, model.size() / 3));
  CHECK(cli.run("score --model " + cli.file("model.json") + " --input " +
                cli.file("query.csv") + " --output " + cli.file("r.csv")) ==
        4);
}

TEST_CASE("explain requires a direction-bearing notion") {
  CliFixture cli;
  REQUIRE(cli.run("simulate --scenario clustered_s4 --seed 3 --output " +
                  cli.file("train.csv")) == 0);
  REQUIRE(cli.run("fit --input " + cli.file("train.csv") +
                  " --notion mahalanobis --threshold-policy quantile " +
                  "--alpha 0.1 --seed 2 --output " + cli.file("model.json")) ==
          0);
  CHECK(cli.run("explain --model " + cli.file("model.json") + " --input " +
                cli.file("train.csv") + " --output " + cli.file("bundle")) ==
        5);
}

TEST_CASE("explain bundle is written and the similarity file is symmetric") {
  CliFixture cli;
  REQUIRE(cli.run("simulate --scenario clustered_s4 --seed 9 --output " +
                  cli.file("train.csv")) == 0);
  REQUIRE(cli.run("fit --input " + cli.file("train.csv") +
                  " --notion projection --directions 200 " +
                  "--threshold-policy quantile --alpha 0.15 --seed 2 " +
                  "--output " + cli.file("model.json")) == 0);
  REQUIRE(cli.run("explain --model " + cli.file("model.json") + " --input " +
                  cli.file("train.csv") + " --output " + cli.file("bundle") +
                  " --workers 2") == 0);
  const CsvTable similarity = read_csv(cli.file("bundle.similarity.csv"));
  REQUIRE(similarity.rows() == 100);
  REQUIRE(similarity.cols() == 100);
  for (Index i = 0; i < similarity.rows(); i += 13) {
    for (Index j = 0; j < similarity.cols(); j += 7) {
      REQUIRE(similarity.values(i, j) == similarity.values(j, i));
    }
  }
  CHECK(std::filesystem::exists(cli.file("bundle.directions.csv")));
  CHECK(std::filesystem::exists(cli.file("bundle.sequences.csv")));
  CHECK(std::filesystem::exists(cli.file("bundle.groups.csv")));
}

TEST_CASE("simulate writes the advertised counts") {
  CliFixture cli;
  REQUIRE(cli.run("simulate --scenario clustered_s4 --seed 5 --output " +
                  cli.file("sample.csv")) == 0);
  const CsvTable table = read_csv(cli.file("sample.csv"));
  REQUIRE(table.rows() == 100);
  REQUIRE(table.cols() == 3);
  const Index label_column = table.column("label");
  REQUIRE(label_column == 2);
  std::int64_t anomalies = 0;
  for (Index i = 0; i < table.rows(); ++i) {
    anomalies += table.values(i, label_column) == 1.0;
  }
  CHECK(anomalies == 10);
}

TEST_CASE("bench rejects zero repetitions with exit 6") {
  CliFixture cli;
  CHECK(cli.run("bench --scenario clustered_s4 --reps 0 --seed 1 --output " +
                cli.file("bench.txt")) == 6);
  CHECK(cli.run("simulate --scenario intro_25 --n 5 --seed 1 --output " +
                cli.file("s.csv")) == 6);
}

TEST_CASE("commands are byte-identical across reruns") {
  CliFixture cli;
  const std::string simulate =
      "simulate --scenario toeplitz_s6 --d 4 --n 60 --seed 21 --output ";
  REQUIRE(cli.run(simulate + cli.file("a.csv")) == 0);
  REQUIRE(cli.run(simulate + cli.file("b.csv")) == 0);
  CHECK(read_text_file(cli.file("a.csv")) == read_text_file(cli.file("b.csv")));

  const std::string bench =
      "bench --scenario clustered_s4 --reps 2 --notion projection "
      "--strategy rs --directions 80 --seed 13 --workers 2 --output ";
  REQUIRE(cli.run(bench + cli.file("bench_a.txt")) == 0);
  REQUIRE(cli.run(bench + cli.file("bench_b.txt")) == 0);
  CHECK(read_text_file(cli.file("bench_a.txt")) ==
        read_text_file(cli.file("bench_b.txt")));
  CHECK(read_text_file(cli.file("bench_a.txt.ordered.csv")) ==
        read_text_file(cli.file("bench_b.txt.ordered.csv")));
}
