#include "zrlab/lattice.hpp"

#include <cmath>
#include <cstdlib>

#include "zrlab/errors.hpp"

namespace zrlab {

Box Box::segment(int n_sites) {
  if (n_sites < 1) throw DomainError("segment needs at least one site");
  Box box;
  box.dimension_ = 1;
  box.neighbors_.resize(static_cast<std::size_t>(n_sites));
  box.coords_.resize(static_cast<std::size_t>(n_sites));
  for (int x = 0; x < n_sites; ++x) {
    box.coords_[x] = {x};
    if (x > 0) box.neighbors_[x].push_back(x - 1);
    if (x + 1 < n_sites) box.neighbors_[x].push_back(x + 1);
  }
  box.label_ = "segment:" + std::to_string(n_sites);
  return box;
}

Box Box::cube(int dimension, int side) {
  if (dimension < 1) throw DomainError("cube dimension must be >= 1");
  if (side < 1) throw DomainError("cube side must be >= 1");
  int per_axis = side + 1;
  std::size_t n = 1;
  for (int d = 0; d < dimension; ++d) {
    n *= static_cast<std::size_t>(per_axis);
    if (n > 10'000'000) throw CapError("cube has too many sites", n);
  }
  Box box;
  box.dimension_ = dimension;
  box.neighbors_.resize(n);
  box.coords_.resize(n);
  // Row-major site order: axis 0 varies fastest.
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> c(static_cast<std::size_t>(dimension));
    std::size_t rem = s;
    for (int d = 0; d < dimension; ++d) {
      c[static_cast<std::size_t>(d)] = static_cast<int>(rem % per_axis);
      rem /= per_axis;
    }
    box.coords_[s] = c;
    std::size_t stride = 1;
    for (int d = 0; d < dimension; ++d) {
      int xd = c[static_cast<std::size_t>(d)];
      if (xd > 0) box.neighbors_[s].push_back(static_cast<int>(s - stride));
      if (xd + 1 < per_axis) box.neighbors_[s].push_back(static_cast<int>(s + stride));
      stride *= static_cast<std::size_t>(per_axis);
    }
  }
  box.label_ = "cube:" + std::to_string(dimension) + "x" + std::to_string(side);
  return box;
}

}  // namespace zrlab
