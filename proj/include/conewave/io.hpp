#pragma once

#include <array>
#include <string>
#include <vector>

#include "conewave/besov.hpp"

namespace conewave {

// Raw little-endian scalar tensor at `path` with a JSON sidecar header at
// `path` + ".json". kind is "float64" or "complex128" (interleaved re, im).
// The context fields stay empty when they do not apply.
struct TensorHeader {
  std::string kind;
  std::vector<std::size_t> shape;
  std::string cone;
  std::vector<double> grid_spacing;
  std::vector<double> origin;  // first sample per axis
  std::vector<std::array<double, 3>> h_chart_coords;
  std::vector<double> weights;
};

void write_tensor(const std::string& path, const TensorHeader& hdr,
                  const std::vector<double>& data);
void write_tensor(const std::string& path, const TensorHeader& hdr,
                  const std::vector<cplx>& data);
TensorHeader read_header(const std::string& path);
std::vector<double> read_real_tensor(const std::string& path,
                                     TensorHeader* hdr = nullptr);
std::vector<cplx> read_complex_tensor(const std::string& path,
                                      TensorHeader* hdr = nullptr);

// Spectral field on its frequency grid. The support box is not stored; on
// load it is recovered as the cell hull of the nonzero samples (an all-zero
// signal gets an empty box).
void save_spectral(const std::string& path, const ConeModel& cone,
                   const Domain& dom, const SpectralField& f);
SpectralField load_spectral(const std::string& path, ConeModel& cone,
                            Domain& dom);

// Voice stack of a full-grid coefficient field: shape [scales, spatial dims]
// over the signal box, scale nodes and weights in the header.
void save_voices(const std::string& path, const CoefficientField& F);

// Scale lattice: data holds the points in storage coordinates, the header
// carries the chart coordinates.
void save_lattice(const std::string& path, const ConeModel& cone,
                  const Lattice& lat);

}  // namespace conewave
