#ifndef NLSLAB_IO_HPP
#define NLSLAB_IO_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "nlslab/nls.hpp"

namespace nlslab {

// Binary snapshot: "NLSF", u32 version, u32 d, u32 n, f64 box_length, f64 t, f64 p, u32 count,
// f64 E[count], then n^d little-endian complex64 (float32 re, im) samples in row-major order.
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotFile {
  FieldState state;
  double p = 1.0;
  Vec E_list;
};

void write_snapshot(const std::string& path, const FieldState& state, double p, const Vec& E_list);
SnapshotFile read_snapshot(const std::string& path);

// Fixed-precision number formatting shared by all CSV writers.
std::string fmt_num(double x);

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<double>& values);

private:
  std::string path_;
  std::size_t width_;
  std::FILE* f_ = nullptr;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

}  // namespace nlslab

#endif
