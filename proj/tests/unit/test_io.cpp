#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nlslab/error.hpp"
#include "nlslab/io.hpp"
#include "nlslab/soliton.hpp"
#include "support.hpp"

using namespace nlslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "nlslab_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("snapshot round trip keeps metadata and float32 samples") {
  Grid g(1, 256, 30.0);
  Field f = soliton_state(SolitonParams{0.3, 1.0, {1.5}, {0.4}}, fixtures::cubic_d1().family, g);
  FieldState s{g, f, 2.75};
  Vec E{1.0, 1.44};
  const auto path = scratch("round_trip.bin").string();
  write_snapshot(path, s, 1.0, E);
  SnapshotFile back = read_snapshot(path);
  CHECK(back.state.grid.d == 1);
  CHECK(back.state.grid.n == 256);
  CHECK(back.state.grid.L == 30.0);
  CHECK(back.state.t == 2.75);
  CHECK(back.p == 1.0);
  REQUIRE(back.E_list.size() == 2);
  CHECK(back.E_list[1] == 1.44);
  const double err = (back.state.values - f).cwiseAbs().maxCoeff() / f.cwiseAbs().maxCoeff();
  CHECK(err < 1e-7);
  CHECK(fs::file_size(path) == 4 + 3 * 4 + 3 * 8 + 4 + 2 * 8 + 256 * 8);
}

TEST_CASE("snapshot reader rejects foreign and truncated files") {
  const auto bad = scratch("bad.bin").string();
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOPE0000";
  }
  CHECK_THROWS_AS(read_snapshot(bad), LabError);
  Grid g(1, 64, 10.0);
  const auto path = scratch("short.bin").string();
  write_snapshot(path, FieldState{g, Field::Zero(64), 0.0}, 1.0, Vec());
  fs::resize_file(path, fs::file_size(path) - 8);
  CHECK_THROWS_AS(read_snapshot(path), LabError);
  CHECK_THROWS_AS(read_snapshot(scratch("missing.bin").string()), LabError);
}

TEST_CASE("CSV writer and reader round trip") {
  const auto path = scratch("table.csv").string();
  {
    CsvWriter w(path, {"t", "value"});
    w.row({0.0, 1.0 / 3.0});
    w.row({0.5, -2.5e-17});
    CHECK_THROWS_AS(w.row({1.0}), LabError);
  }
  CsvTable t = read_csv(path);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column("value") == 1);
  CHECK(t.rows[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(t.rows[1][1] == -2.5e-17);
  CHECK_THROWS_AS(t.column("missing"), LabError);
  CHECK(fmt_num(0.5) == "5.000000000000e-01");
}
