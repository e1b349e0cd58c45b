#ifndef MALAB_FIELD_IO_HPP
#define MALAB_FIELD_IO_HPP

#include <string>

#include "malab/torus.hpp"

namespace malab {

// Flat binary container, documented layout (all integers little-endian):
//   bytes  0..7   magic "MALAB1\0\0"
//   bytes  8..11  uint32 complex dimension n
//   bytes 12..15  uint32 resolution (points per real axis)
//   bytes 16..23  uint64 point count (= resolution^(2n))
//   bytes 24..31  reserved, zero
//   payload       point count IEEE-754 float64 values, little-endian,
//                 row-major over the 2n real axes (last axis fastest)
// A JSON sidecar "<path>.json" carries name/stats metadata.

void write_field(const ScalarField& f, const std::string& path, const std::string& name = "field");
ScalarField read_field(const std::string& path);

} // namespace malab

#endif
