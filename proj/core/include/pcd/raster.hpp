#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pcd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Raster plane semantics.
enum Plane : std::size_t { kObjectPlane = 0, kLightPlane = 1, kTexturePlane = 2 };
inline constexpr std::size_t kPlaneCount = 3;

// Robot proprioception delivered alongside the image.
struct Proprio {
  Vec2 gripper;
  bool gripper_closed = false;

  bool operator==(const Proprio&) const = default;
};

// Three W x H planes of values in [0, 1] plus proprioception.
class Observation {
 public:
  Observation() = default;
  Observation(std::size_t width, std::size_t height, std::size_t step_index = 0);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t cells() const { return width_ * height_; }
  std::size_t step_index() const { return step_index_; }
  void set_step_index(std::size_t s) { step_index_ = s; }

  double& at(std::size_t plane, std::size_t x, std::size_t y) {
    return data_[plane * cells() + y * width_ + x];
  }
  double at(std::size_t plane, std::size_t x, std::size_t y) const {
    return data_[plane * cells() + y * width_ + x];
  }
  double& cell(std::size_t plane, std::size_t index) { return data_[plane * cells() + index]; }
  double cell(std::size_t plane, std::size_t index) const { return data_[plane * cells() + index]; }

  // Cell center in table coordinates [0, 1]^2.
  Vec2 cell_center(std::size_t x, std::size_t y) const;
  // Cell containing a table point, clamped to the raster.
  std::array<std::size_t, 2> cell_of(Vec2 p) const;

  Proprio proprio;

  // Sum of one plane.
  double plane_mass(std::size_t plane) const;

  bool operator==(const Observation&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t step_index_ = 0;
  std::vector<double> data_;
};

// Boolean footprint of one tracked object (possibly empty).
class ObjectMask {
 public:
  ObjectMask() = default;
  ObjectMask(std::size_t width, std::size_t height, std::string object_id = {});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::string& object_id() const { return object_id_; }
  void set_object_id(std::string id) { object_id_ = std::move(id); }

  bool get(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool get(std::size_t index) const { return bits_[index] != 0; }
  void set(std::size_t index, bool v = true) { bits_[index] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  // Centroid in table coordinates; requires a non-empty mask.
  Vec2 centroid() const;

  ObjectMask& operator|=(const ObjectMask& other);
  bool operator==(const ObjectMask&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::string object_id_;
  std::vector<std::uint8_t> bits_;
};

// Intersection over union of two masks of equal size; 1 when both are empty.
double iou(const ObjectMask& a, const ObjectMask& b);

// Binary PPM (P6): planes 0/1/2 mapped to R/G/B.
void write_ppm(const Observation& obs, const std::filesystem::path& path);

}  // namespace pcd
