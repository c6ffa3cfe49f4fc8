#pragma once

#include <string>
#include <vector>

namespace zrlab {

// Finite box of Z^d with nearest-neighbour adjacency (|x-y| = 1) and free
// boundary. Site counts are always explicit: a segment has exactly n_sites
// sites, a cube has (side+1)^d (lattice points of [0,side]^d).
class Box {
 public:
  static Box segment(int n_sites);
  static Box cube(int dimension, int side);

  int size() const { return static_cast<int>(neighbors_.size()); }
  int dimension() const { return dimension_; }
  const std::vector<int>& neighbors(int site) const { return neighbors_[site]; }
  int degree(int site) const { return static_cast<int>(neighbors_[site].size()); }
  // Coordinates of a site (length == dimension()).
  const std::vector<int>& coords(int site) const { return coords_[site]; }
  const std::string& label() const { return label_; }

 private:
  Box() = default;
  int dimension_ = 1;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> coords_;
  std::string label_;
};

}  // namespace zrlab
