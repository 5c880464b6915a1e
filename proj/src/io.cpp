#include "nlslab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nlslab/error.hpp"

namespace nlslab {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw LabError(ErrorKind::ContractViolation, "truncated snapshot file " + path);
  return v;
}

}  // namespace

void write_snapshot(const std::string& path, const FieldState& s, double p, const Vec& E_list) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError(ErrorKind::ContractViolation, "cannot open " + path + " for writing");
  out.write("NLSF", 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.grid.d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.grid.n));
  put<double>(out, s.grid.L);
  put<double>(out, s.t);
  put<double>(out, p);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(E_list.size()));
  for (double E : E_list) put<double>(out, E);
  std::vector<float> buf(2 * static_cast<std::size_t>(s.values.size()));
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    buf[2 * i] = static_cast<float>(s.values[i].real());
    buf[2 * i + 1] = static_cast<float>(s.values[i].imag());
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw LabError(ErrorKind::ContractViolation, "failed writing " + path);
}

SnapshotFile read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LabError(ErrorKind::ContractViolation, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "NLSF", 4) != 0) throw LabError(ErrorKind::ContractViolation, path + " is not a snapshot file");
  auto version = get<std::uint32_t>(in, path);
  if (version != kSnapshotVersion) throw LabError(ErrorKind::ContractViolation, "unsupported snapshot version in " + path);
  SnapshotFile f;
  auto d = static_cast<int>(get<std::uint32_t>(in, path));
  auto n = static_cast<int>(get<std::uint32_t>(in, path));
  double L = get<double>(in, path);
  f.state.t = get<double>(in, path);
  f.p = get<double>(in, path);
  auto count = get<std::uint32_t>(in, path);
  require(count <= 64, "implausible soliton count in snapshot header");
  for (std::uint32_t i = 0; i < count; ++i) f.E_list.push_back(get<double>(in, path));
  f.state.grid = Grid(d, n, L);
  std::vector<float> buf(2 * f.state.grid.size());
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw LabError(ErrorKind::ContractViolation, "truncated snapshot file " + path);
  f.state.values.resize(static_cast<Eigen::Index>(f.state.grid.size()));
  for (Eigen::Index i = 0; i < f.state.values.size(); ++i) f.state.values[i] = cplx(buf[2 * i], buf[2 * i + 1]);
  return f;
}

std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), width_(header.size()) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw LabError(ErrorKind::ContractViolation, "cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", header[i].c_str());
  std::fputc('\n', f_);
}

void CsvWriter::row(const std::vector<double>& values) {
  require(values.size() == width_, "CSV row width does not match header of " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", fmt_num(values[i]).c_str());
  std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw LabError(ErrorKind::ContractViolation, "no column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorKind::ContractViolation, "cannot open " + path);
  CsvTable t;
  std::string line, cell;
  if (!std::getline(in, line)) throw LabError(ErrorKind::ContractViolation, path + " is empty");
  std::stringstream hs(line);
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw LabError(ErrorKind::ContractViolation, "non-numeric cell '" + cell + "' in " + path);
      }
    }
    require(row.size() == t.header.size(), "ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nlslab
