#pragma once

#include <string>

#include "vecadvect/field.hpp"

namespace vecadvect {

// Binary field container, little endian:
//   bytes 0..3   magic "VAF1"
//   u32          dim
//   u32[dim]     sizes
//   f64[dim]     box lengths
//   u32          ncomp
//   f64[...]     samples, row major with axis 0 slowest, per component
void write_vaf1(const std::string& path, const VectorField& f);
void write_vaf1(const std::string& path, const ScalarField& f);
VectorField read_vaf1(const std::string& path);

}  // namespace vecadvect
