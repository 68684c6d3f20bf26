#include "bbsteal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "bbsteal/rng.hpp"

namespace bbsteal {

namespace {

// glyph mask on a size x size box, values in [0,1]
std::vector<float> glyph_mask(int class_id, int size) {
  std::vector<float> m(static_cast<size_t>(size) * size, 0.0f);
  const float c = (size - 1) * 0.5f;
  const float r = size * 0.5f - 0.5f;
  auto soft = [](float inside) { return std::clamp(inside, 0.0f, 1.0f); };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float dx = x - c, dy = y - c;
      const float d = std::sqrt(dx * dx + dy * dy);
      float v = 0.0f;
      switch (class_id) {
        case 0:  // filled disk
          v = soft(r - d + 0.5f);
          break;
        case 1:  // ring
          v = soft(std::min(d - (r - 2.2f), r - d) + 0.5f);
          break;
        case 2:  // horizontal bar
          v = std::fabs(dy) <= size * 0.16f ? 1.0f : 0.0f;
          break;
        case 3:  // vertical bar
          v = std::fabs(dx) <= size * 0.16f ? 1.0f : 0.0f;
          break;
        case 4:  // plus
          v = (std::fabs(dy) <= size * 0.13f || std::fabs(dx) <= size * 0.13f) ? 1.0f : 0.0f;
          break;
        case 5:  // X
          v = (std::fabs(dx - dy) <= size * 0.14f || std::fabs(dx + dy) <= size * 0.14f) ? 1.0f
                                                                                         : 0.0f;
          break;
        case 6: {  // square outline
          const float box = std::max(std::fabs(dx), std::fabs(dy));
          v = (box <= r && box >= r - 1.8f) ? 1.0f : 0.0f;
          break;
        }
        case 7:  // filled triangle, widening downward
          v = (dy >= -r * 0.8f && std::fabs(dx) <= (dy + r) * 0.55f && dy <= r * 0.8f) ? 1.0f
                                                                                       : 0.0f;
          break;
        case 8: {  // 2px checkerboard
          const int bx = (x / 2) & 1, by = (y / 2) & 1;
          v = (bx ^ by) ? 1.0f : 0.0f;
          break;
        }
        case 9:  // diagonal stripes, 2px period pairs
          v = (((x + y) / 2) & 1) ? 1.0f : 0.0f;
          break;
        default:
          throw std::invalid_argument("glyph_mask: class out of range");
      }
      m[static_cast<size_t>(y) * size + x] = v;
    }
  }
  return m;
}

void blit_glyph(Tensor3& img, int class_id, int size, int cy, int cx, const float color[3],
                float alpha) {
  const std::vector<float> mask = glyph_mask(class_id, size);
  const int half = size / 2;
  for (int y = 0; y < size; ++y) {
    const int iy = cy - half + y;
    if (iy < 0 || iy >= img.h) continue;
    for (int x = 0; x < size; ++x) {
      const int ix = cx - half + x;
      if (ix < 0 || ix >= img.w) continue;
      const float a = mask[static_cast<size_t>(y) * size + x] * alpha;
      if (a <= 0.0f) continue;
      for (int ch = 0; ch < img.c; ++ch) {
        float& px = img.at(ch, iy, ix);
        px = (1.0f - a) * px + a * color[ch % 3];
      }
    }
  }
}

Tensor3 noisy_background(int hw, Rng& rng, double noise_sigma) {
  Tensor3 img(3, hw, hw);
  float base[3];
  for (float& b : base) b = static_cast<float>(rng.uniform(0.05, 0.45));
  const float gx = static_cast<float>(rng.uniform(-0.15, 0.15));
  const float gy = static_cast<float>(rng.uniform(-0.15, 0.15));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < hw; ++y) {
      for (int x = 0; x < hw; ++x) {
        float v = base[c] + gx * (static_cast<float>(x) / hw - 0.5f) +
                  gy * (static_cast<float>(y) / hw - 0.5f) +
                  static_cast<float>(rng.normal(0.0, noise_sigma));
        img.at(c, y, x) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return img;
}

void clamp01(Tensor3& img) {
  for (float& v : img.v) v = std::clamp(v, 0.0f, 1.0f);
}

void glyph_color(float out[3], Rng& rng) {
  for (int i = 0; i < 3; ++i) out[i] = static_cast<float>(rng.uniform(0.55, 0.98));
  // knock one channel down so glyphs are saturated rather than white
  out[rng.uniform_index(3)] = static_cast<float>(rng.uniform(0.0, 0.35));
}

}  // namespace

LabeledData make_shapes_data(int n, uint64_t seed, int hw, const std::string& tag) {
  if (n <= 0 || hw < 12) throw std::invalid_argument("make_shapes_data: bad arguments");
  LabeledData data;
  data.images.reserve(n);
  data.labels.reserve(n);
  Rng master(Rng::mix(seed, Rng::hash_str(tag)));
  for (int i = 0; i < n; ++i) {
    Rng rng = master.derive(i);
    const int cls = static_cast<int>(rng.uniform_index(kNumShapeClasses));
    Tensor3 img = noisy_background(hw, rng, 0.06);
    const int size = 9 + static_cast<int>(rng.uniform_index(3));  // 9..11
    const int cy = hw / 2 + rng.uniform_int(-2, 2);
    const int cx = hw / 2 + rng.uniform_int(-2, 2);
    float color[3];
    glyph_color(color, rng);
    blit_glyph(img, cls, size, cy, cx, color, 1.0f);
    clamp01(img);
    data.images.push_back(make_image(std::move(img), tag));
    data.labels.push_back(hard_label_from_class(cls, kNumShapeClasses));
  }
  return data;
}

std::vector<ImageTensor> make_mixed_pool(int n, uint64_t seed, int hw) {
  if (n <= 0 || hw < 12) throw std::invalid_argument("make_mixed_pool: bad arguments");
  std::vector<ImageTensor> out;
  out.reserve(n);
  Rng master(Rng::mix(seed, Rng::hash_str("pool")));
  for (int i = 0; i < n; ++i) {
    Rng rng = master.derive(i);
    Tensor3 img = noisy_background(hw, rng, 0.1);

    // small clutter blobs
    const int blobs = 1 + static_cast<int>(rng.uniform_index(2));
    for (int b = 0; b < blobs; ++b) {
      float color[3];
      for (float& c : color) c = static_cast<float>(rng.uniform(0.0, 1.0));
      blit_glyph(img, 0, 3 + static_cast<int>(rng.uniform_index(2)),
                 static_cast<int>(rng.uniform_index(hw)), static_cast<int>(rng.uniform_index(hw)),
                 color, 0.35f);
    }

    const int primary = static_cast<int>(rng.uniform_index(kNumShapeClasses));
    int secondary = static_cast<int>(rng.uniform_index(kNumShapeClasses - 1));
    if (secondary >= primary) ++secondary;

    // dominant glyph in one quadrant, smaller secondary in the opposite one
    const int qx = static_cast<int>(rng.uniform_index(2));
    const int qy = static_cast<int>(rng.uniform_index(2));
    const int px = hw / 4 + qx * hw / 2 + rng.uniform_int(-1, 1);
    const int py = hw / 4 + qy * hw / 2 + rng.uniform_int(-1, 1);
    const int sx = hw / 4 + (1 - qx) * hw / 2 + rng.uniform_int(-1, 1);
    const int sy = hw / 4 + (1 - qy) * hw / 2 + rng.uniform_int(-1, 1);

    float pcolor[3], scolor[3];
    glyph_color(pcolor, rng);
    glyph_color(scolor, rng);
    const int psize = 9 + static_cast<int>(rng.uniform_index(2));
    const int ssize = 6 + static_cast<int>(rng.uniform_index(2));
    blit_glyph(img, secondary, ssize, sy, sx, scolor, static_cast<float>(rng.uniform(0.75, 0.95)));
    blit_glyph(img, primary, psize, py, px, pcolor, 1.0f);
    clamp01(img);
    out.push_back(make_image(std::move(img), "pool"));
  }
  return out;
}

void save_labeled_data(const std::string& path, const LabeledData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_labeled_data: cannot write " + path);
  const char magic[8] = {'B', 'B', 'S', 'D', '0', '0', '0', '1'};
  out.write(magic, 8);
  const uint32_t n = static_cast<uint32_t>(data.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (uint32_t i = 0; i < n; ++i) {
    const Tensor3& t = data.images[i].data;
    const int32_t dims[3] = {t.c, t.h, t.w};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(t.v.data()), t.v.size() * sizeof(float));
    const int32_t cls = data.labels[i].class_index;
    const int32_t nc = data.labels[i].num_classes();
    out.write(reinterpret_cast<const char*>(&cls), 4);
    out.write(reinterpret_cast<const char*>(&nc), 4);
    const uint32_t id_len = static_cast<uint32_t>(data.images[i].id.size());
    out.write(reinterpret_cast<const char*>(&id_len), 4);
    out.write(data.images[i].id.data(), id_len);
  }
}

LabeledData load_labeled_data(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_labeled_data: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "BBSD0001", 8) != 0) {
    throw std::runtime_error("load_labeled_data: bad magic in " + path);
  }
  uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  LabeledData data;
  data.images.resize(n);
  data.labels.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    int32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    Tensor3 t(dims[0], dims[1], dims[2]);
    in.read(reinterpret_cast<char*>(t.v.data()), t.v.size() * sizeof(float));
    int32_t cls = 0, nc = 0;
    in.read(reinterpret_cast<char*>(&cls), 4);
    in.read(reinterpret_cast<char*>(&nc), 4);
    uint32_t id_len = 0;
    in.read(reinterpret_cast<char*>(&id_len), 4);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (!in) throw std::runtime_error("load_labeled_data: truncated file " + path);
    data.images[i].data = std::move(t);
    data.images[i].id = std::move(id);
    data.labels[i] = hard_label_from_class(cls, nc);
  }
  return data;
}

}  // namespace bbsteal
