#include "vecadvect/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "vecadvect/errors.hpp"

namespace vecadvect {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

struct Reader {
  const unsigned char* p;
  const unsigned char* end;
  std::uint32_t u32() {
    if (end - p < 4) throw ConfigError("vaf1: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    return v;
  }
  double f64() {
    if (end - p < 8) throw ConfigError("vaf1: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    p += 8;
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

}  // namespace

void write_vaf1(const std::string& path, const VectorField& f) {
  if (f.grid.dim() == 0) throw ConfigError("vaf1: cannot write an empty field");
  std::string buf;
  buf.reserve(24 + size_t(f.grid.points()) * f.ncomp() * 8);
  buf += "VAF1";
  put_u32(buf, std::uint32_t(f.grid.dim()));
  for (int a = 0; a < f.grid.dim(); ++a)
    put_u32(buf, std::uint32_t(f.grid.size(a)));
  for (int a = 0; a < f.grid.dim(); ++a) put_f64(buf, f.grid.box(a));
  put_u32(buf, std::uint32_t(f.ncomp()));
  for (int c = 0; c < f.ncomp(); ++c)
    for (double d : f.comp[c]) put_f64(buf, d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("vaf1: cannot open for writing: " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw ConfigError("vaf1: write failed: " + path);
}

void write_vaf1(const std::string& path, const ScalarField& f) {
  VectorField v(f.grid, 1);
  v.comp[0] = f.data;
  write_vaf1(path, v);
}

VectorField read_vaf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("vaf1: cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "VAF1", 4) != 0)
    throw ConfigError("vaf1: bad magic in " + path);
  Reader r{bytes.data() + 4, bytes.data() + bytes.size()};
  const std::uint32_t dim = r.u32();
  if (dim != 2 && dim != 3) throw ConfigError("vaf1: dim must be 2 or 3");
  std::array<int, 3> sizes{1, 1, 1};
  std::array<double, 3> box{1.0, 1.0, 1.0};
  for (std::uint32_t a = 0; a < dim; ++a) sizes[a] = int(r.u32());
  for (std::uint32_t a = 0; a < dim; ++a) box[a] = r.f64();
  const Grid g = Grid::make(int(dim), sizes, box);
  const std::uint32_t ncomp = r.u32();
  if (ncomp == 0 || ncomp > 16) throw ConfigError("vaf1: bad component count");
  VectorField f(g, int(ncomp));
  const std::int64_t n = g.points();
  if (std::int64_t(r.end - r.p) != n * std::int64_t(ncomp) * 8)
    throw ConfigError("vaf1: payload size mismatch in " + path);
  for (std::uint32_t c = 0; c < ncomp; ++c)
    for (std::int64_t i = 0; i < n; ++i) f.comp[c][i] = r.f64();
  return f;
}

}  // namespace vecadvect
