#pragma once

#include "rmrecon/mesh.hpp"
#include "rmrecon/sdf_grid.hpp"

namespace rmrecon {

struct ExtractionStats {
  std::size_t collapsed_faces = 0;  // degenerate faces removed during cleanup
};

/// Zero level set of a sampled field. Each lattice cube is split into six
/// tetrahedra around its main diagonal (the same split in every cube), so
/// neighbouring cells always agree on shared faces and the result is closed.
/// Vertices sit at the linear zero crossing of lattice edges; faces are
/// oriented with normals toward positive field values.
TriMesh extract_isosurface(const Lattice& lattice, ExtractionStats* stats = nullptr);

/// Samples the grid at `sample_factor` lattice points per cell (default 2)
/// and extracts the zero level set.
TriMesh marching_cubes(const SdfGrid& grid, int sample_factor = 2, ExtractionStats* stats = nullptr);

/// Drops faces with area below `min_area` by merging their shortest edge,
/// then removes index-degenerate faces and unreferenced vertices.
std::size_t collapse_degenerate_faces(TriMesh& mesh, double min_area = 1e-12);

}  // namespace rmrecon
