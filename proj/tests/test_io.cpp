#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "depth/io.hpp"
#include "depth/rng.hpp"

using namespace depth;
using Catch::Approx;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("depth_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("csv round trip is lossless") {
  TempDir dir;
  Rng rng(17);
  Matrix values(37, 4);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      values(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(
                                                       rng.below(13)) -
                                                       6.0);
    }
  }
  const std::string path = dir.file("round.csv");
  write_csv(path, {"a", "b", "c", "d"}, values);
  const CsvTable table = read_csv(path);
  REQUIRE(table.header.size() == 4);
  REQUIRE(table.rows() == values.rows());
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      REQUIRE(table.values(i, j) == values(i, j));
    }
  }
}

TEST_CASE("header detection and named columns") {
  TempDir dir;
  const std::string path = dir.file("header.csv");
  write_text_file(path, "x1,x2,label\n1,2,0\n3,4,1\n");
  const CsvTable table = read_csv(path);
  CHECK(table.header == std::vector<std::string>{"x1", "x2", "label"});
  CHECK(table.column("label") == 2);
  CHECK(table.column("missing") == -1);
  CHECK(table.rows() == 2);

  const std::string bare = dir.file("bare.csv");
  write_text_file(bare, "1,2\n3,4\n");
  const CsvTable no_header = read_csv(bare);
  CHECK(no_header.header.empty());
  CHECK(no_header.rows() == 2);
}

TEST_CASE("parse errors carry the line number") {
  TempDir dir;
  const std::string path = dir.file("bad.csv");
  write_text_file(path, "1,2\n3,abc\n");
  try {
    read_csv(path);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    const std::string message = e.what();
    CHECK(message.find(":2:") != std::string::npos);
    CHECK(message.find("abc") != std::string::npos);
  }

  const std::string ragged = dir.file("ragged.csv");
  write_text_file(ragged, "1,2\n3\n");
  try {
    read_csv(ragged);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), CsvError);
}

TEST_CASE("empty and header-only files read as zero rows") {
  TempDir dir;
  const std::string empty = dir.file("empty.csv");
  write_text_file(empty, "");
  CHECK(read_csv(empty).rows() == 0);
  const std::string header_only = dir.file("header_only.csv");
  write_text_file(header_only, "x1,x2\n");
  const CsvTable table = read_csv(header_only);
  CHECK(table.rows() == 0);
  CHECK(table.header.size() == 2);
}

TEST_CASE("doubles render with full precision") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-17) == "-2.4999999999999999e-17");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}
