#include "pcd/raster.hpp"

#include <algorithm>
#include <fstream>

#include "pcd/error.hpp"

namespace pcd {

Observation::Observation(std::size_t width, std::size_t height, std::size_t step_index)
    : width_(width), height_(height), step_index_(step_index),
      data_(kPlaneCount * width * height, 0.0) {
  if (width == 0 || height == 0) throw Error("observation dimensions must be positive");
}

Vec2 Observation::cell_center(std::size_t x, std::size_t y) const {
  return {(static_cast<double>(x) + 0.5) / static_cast<double>(width_),
          (static_cast<double>(y) + 0.5) / static_cast<double>(height_)};
}

std::array<std::size_t, 2> Observation::cell_of(Vec2 p) const {
  auto clamp_index = [](double v, std::size_t n) {
    const double f = std::floor(v * static_cast<double>(n));
    if (!(f > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(f), n - 1);
  };
  return {clamp_index(p.x, width_), clamp_index(p.y, height_)};
}

double Observation::plane_mass(std::size_t plane) const {
  double total = 0.0;
  for (std::size_t i = 0; i < cells(); ++i) total += cell(plane, i);
  return total;
}

ObjectMask::ObjectMask(std::size_t width, std::size_t height, std::string object_id)
    : width_(width), height_(height), object_id_(std::move(object_id)), bits_(width * height, 0) {}

std::size_t ObjectMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Vec2 ObjectMask::centroid() const {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) {
      if (!get(x, y)) continue;
      sx += (static_cast<double>(x) + 0.5) / static_cast<double>(width_);
      sy += (static_cast<double>(y) + 0.5) / static_cast<double>(height_);
      ++n;
    }
  }
  if (n == 0) throw Error("centroid of empty mask");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

ObjectMask& ObjectMask::operator|=(const ObjectMask& other) {
  if (other.width_ != width_ || other.height_ != height_) throw Error("mask size mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

double iou(const ObjectMask& a, const ObjectMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw Error("mask size mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.width() * a.height(); ++i) {
    inter += (a.get(i) && b.get(i)) ? 1 : 0;
    uni += (a.get(i) || b.get(i)) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void write_ppm(const Observation& obs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P6\n" << obs.width() << ' ' << obs.height() << "\n255\n";
  for (std::size_t y = 0; y < obs.height(); ++y) {
    for (std::size_t x = 0; x < obs.width(); ++x) {
      for (std::size_t c = 0; c < kPlaneCount; ++c) {
        const double v = std::clamp(obs.at(c, x, y), 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace pcd
