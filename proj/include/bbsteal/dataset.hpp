#ifndef BBSTEAL_DATASET_HPP
#define BBSTEAL_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bbsteal/types.hpp"

namespace bbsteal {

struct LabeledData {
  std::vector<ImageTensor> images;
  std::vector<HardLabel> labels;

  size_t size() const { return images.size(); }
};

inline constexpr int kNumShapeClasses = 10;

// Procedural 10-class glyph images (disk, ring, bars, cross, X, box outline,
// triangle, checker, stripes) on noisy backgrounds. One glyph per image;
// shape carries the class, colors are uncorrelated with it.
LabeledData make_shapes_data(int n, uint64_t seed, int hw = 16, const std::string& tag = "shapes");

// Attack-pool distribution: a dominant glyph plus a smaller secondary glyph
// of a different class in the opposite region, heavier clutter. Unlabeled.
std::vector<ImageTensor> make_mixed_pool(int n, uint64_t seed, int hw = 16);

// Raw binary container round-trip for labeled datasets.
void save_labeled_data(const std::string& path, const LabeledData& data);
LabeledData load_labeled_data(const std::string& path);

}  // namespace bbsteal

#endif  // BBSTEAL_DATASET_HPP
