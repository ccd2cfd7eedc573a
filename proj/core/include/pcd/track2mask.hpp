#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pcd/raster.hpp"
#include "pcd/rng.hpp"

namespace pcd {

struct PointPrompt {
  std::size_t x = 0;
  std::size_t y = 0;
};
// Half-open cell range [x0, x1) x [y0, y1).
struct BoxPrompt {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t x1 = 0;
  std::size_t y1 = 0;
};
// Simulated open-vocabulary detector: ground truth corrupted by misses and
// by translation/dilation of up to `jitter` cells.
struct DetectorPrompt {
  std::string label;
  double miss_prob = 0.0;
  std::size_t jitter = 0;
};
using AnnotationPrompt = std::variant<PointPrompt, BoxPrompt, DetectorPrompt>;

struct ConstantFill {
  double value = 0.0;
};
struct BackgroundMeanFill {};
struct NeighborDiffusionFill {
  std::size_t iterations = 20;
};
using InpaintStrategy = std::variant<ConstantFill, BackgroundMeanFill, NeighborDiffusionFill>;

enum class TrackerMode { kExact, kNearestMatch };

// Ground-truth mask of a label at the current step.
using TruthProvider = std::function<ObjectMask(const std::string& label)>;

struct TrackerState {
  std::string object_id;
  ObjectMask last;
  TrackerMode mode = TrackerMode::kExact;
  bool annotated = false;  // initial annotation found the object
  std::string note;        // why annotation came back empty, if it did
};

inline constexpr double kComponentTolerance = 0.02;
inline constexpr double kTrackRadiusCells = 4.0;

void validate_prompt(const AnnotationPrompt& prompt, std::size_t width, std::size_t height);
void validate_strategy(const InpaintStrategy& strategy);

// 4-connected plane-0 component of cells with the same class intensity as
// the seed cell; empty when the seed lies on background.
ObjectMask component_at(const Observation& obs, std::size_t x, std::size_t y);

// All class-homogeneous 4-connected plane-0 components.
std::vector<ObjectMask> plane_components(const Observation& obs);

std::pair<ObjectMask, TrackerState> annotate_initial(const Observation& obs0,
                                                     const AnnotationPrompt& prompt,
                                                     const std::string& object_id,
                                                     TrackerMode mode,
                                                     const TruthProvider& truth, Rng& rng);

// Mask of the tracked object at the current step; updates `state`.
ObjectMask track(TrackerState& state, const Observation& obs_t, const TruthProvider& truth);

// Fill masked cells on every plane; unmasked cells are copied bit-exactly.
Observation inpaint(const Observation& obs, const ObjectMask& mask, const InpaintStrategy& strategy);

}  // namespace pcd
