#include "pcd/track2mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcd/error.hpp"

namespace pcd {
namespace {

void require_same_size(const Observation& obs, const ObjectMask& mask) {
  if (obs.width() != mask.width() || obs.height() != mask.height()) {
    throw Error("mask dimensions do not match the observation");
  }
}

ObjectMask shifted(const ObjectMask& mask, long dx, long dy) {
  ObjectMask out(mask.width(), mask.height(), mask.object_id());
  const long w = static_cast<long>(mask.width());
  const long h = static_cast<long>(mask.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      if (!mask.get(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) continue;
      const long nx = x + dx;
      const long ny = y + dy;
      if (nx >= 0 && nx < w && ny >= 0 && ny < h) {
        out.set(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
      }
    }
  }
  return out;
}

ObjectMask dilated(ObjectMask mask, std::size_t radius) {
  for (std::size_t r = 0; r < radius; ++r) {
    ObjectMask grown = mask;
    for (std::size_t y = 0; y < mask.height(); ++y) {
      for (std::size_t x = 0; x < mask.width(); ++x) {
        if (!mask.get(x, y)) continue;
        if (x > 0) grown.set(x - 1, y);
        if (x + 1 < mask.width()) grown.set(x + 1, y);
        if (y > 0) grown.set(x, y - 1);
        if (y + 1 < mask.height()) grown.set(x, y + 1);
      }
    }
    mask = std::move(grown);
  }
  return mask;
}

std::vector<double> background_means(const Observation& obs, const ObjectMask& mask,
                                     std::size_t& background_cells) {
  std::vector<double> means(kPlaneCount, 0.0);
  background_cells = 0;
  for (std::size_t i = 0; i < obs.cells(); ++i) {
    if (mask.get(i)) continue;
    ++background_cells;
    for (std::size_t c = 0; c < kPlaneCount; ++c) means[c] += obs.cell(c, i);
  }
  if (background_cells > 0) {
    for (double& m : means) m /= static_cast<double>(background_cells);
  }
  return means;
}

}  // namespace

void validate_prompt(const AnnotationPrompt& prompt, std::size_t width, std::size_t height) {
  if (const auto* p = std::get_if<PointPrompt>(&prompt)) {
    if (p->x >= width || p->y >= height) throw Error("point prompt outside the raster");
  } else if (const auto* b = std::get_if<BoxPrompt>(&prompt)) {
    if (b->x1 <= b->x0 || b->y1 <= b->y0) throw Error("box prompt requires x1 > x0 and y1 > y0");
    if (b->x1 > width || b->y1 > height) throw Error("box prompt outside the raster");
  } else {
    const auto& d = std::get<DetectorPrompt>(prompt);
    if (!(d.miss_prob >= 0.0 && d.miss_prob <= 1.0)) throw Error("miss_prob must lie in [0, 1]");
    if (d.label.empty()) throw Error("detector prompt needs a label");
  }
}

void validate_strategy(const InpaintStrategy& strategy) {
  if (const auto* c = std::get_if<ConstantFill>(&strategy)) {
    if (!(c->value >= 0.0 && c->value <= 1.0)) throw Error("constant fill value must lie in [0, 1]");
  }
  if (const auto* n = std::get_if<NeighborDiffusionFill>(&strategy)) {
    if (n->iterations < 1) throw Error("neighbor diffusion needs at least one iteration");
  }
}

ObjectMask component_at(const Observation& obs, std::size_t x, std::size_t y) {
  ObjectMask mask(obs.width(), obs.height());
  const double seed = obs.at(kObjectPlane, x, y);
  if (seed <= 0.0) return mask;
  std::vector<std::size_t> stack{y * obs.width() + x};
  mask.set(x, y);
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    const std::size_t cx = idx % obs.width();
    const std::size_t cy = idx / obs.width();
    auto visit = [&](std::size_t nx, std::size_t ny) {
      if (mask.get(nx, ny)) return;
      const double v = obs.at(kObjectPlane, nx, ny);
      if (v <= 0.0 || std::abs(v - seed) > kComponentTolerance) return;
      mask.set(nx, ny);
      stack.push_back(ny * obs.width() + nx);
    };
    if (cx > 0) visit(cx - 1, cy);
    if (cx + 1 < obs.width()) visit(cx + 1, cy);
    if (cy > 0) visit(cx, cy - 1);
    if (cy + 1 < obs.height()) visit(cx, cy + 1);
  }
  return mask;
}

std::vector<ObjectMask> plane_components(const Observation& obs) {
  std::vector<ObjectMask> out;
  ObjectMask seen(obs.width(), obs.height());
  for (std::size_t y = 0; y < obs.height(); ++y) {
    for (std::size_t x = 0; x < obs.width(); ++x) {
      if (seen.get(x, y) || obs.at(kObjectPlane, x, y) <= 0.0) continue;
      ObjectMask comp = component_at(obs, x, y);
      seen |= comp;
      out.push_back(std::move(comp));
    }
  }
  return out;
}

std::pair<ObjectMask, TrackerState> annotate_initial(const Observation& obs0,
                                                     const AnnotationPrompt& prompt,
                                                     const std::string& object_id,
                                                     TrackerMode mode,
                                                     const TruthProvider& truth, Rng& rng) {
  validate_prompt(prompt, obs0.width(), obs0.height());
  TrackerState state;
  state.object_id = object_id;
  state.mode = mode;
  ObjectMask mask(obs0.width(), obs0.height(), object_id);

  if (const auto* p = std::get_if<PointPrompt>(&prompt)) {
    mask = component_at(obs0, p->x, p->y);
    if (mask.empty()) state.note = "point prompt landed on background";
  } else if (const auto* b = std::get_if<BoxPrompt>(&prompt)) {
    for (std::size_t y = b->y0; y < b->y1; ++y) {
      for (std::size_t x = b->x0; x < b->x1; ++x) {
        if (obs0.at(kObjectPlane, x, y) > 0.0) mask.set(x, y);
      }
    }
    if (mask.empty()) state.note = "box prompt contains no object cells";
  } else {
    const auto& d = std::get<DetectorPrompt>(prompt);
    if (!truth) throw Error("detector prompt requires a ground-truth provider");
    const bool missed = rng.uniform() < d.miss_prob;
    if (missed) {
      state.note = "detector missed '" + d.label + "'";
    } else {
      mask = truth(d.label);
      if (d.jitter > 0) {
        const auto j = static_cast<std::int64_t>(d.jitter);
        const long dx = static_cast<long>(rng.uniform_int(-j, j));
        const long dy = static_cast<long>(rng.uniform_int(-j, j));
        const auto grow = static_cast<std::size_t>(rng.uniform_int(0, j));
        mask = dilated(shifted(mask, dx, dy), grow);
      }
    }
  }
  mask.set_object_id(object_id);
  state.annotated = !mask.empty();
  state.last = mask;
  return {std::move(mask), std::move(state)};
}

ObjectMask track(TrackerState& state, const Observation& obs_t, const TruthProvider& truth) {
  if (!state.annotated) return state.last;
  if (state.mode == TrackerMode::kExact) {
    if (!truth) throw Error("exact tracking requires a ground-truth provider");
    state.last = truth(state.object_id);
    state.last.set_object_id(state.object_id);
    return state.last;
  }
  if (state.last.empty()) return state.last;
  const Vec2 previous = state.last.centroid();
  const double radius = kTrackRadiusCells / static_cast<double>(obs_t.width());
  double best = std::numeric_limits<double>::max();
  const ObjectMask* chosen = nullptr;
  const auto components = plane_components(obs_t);
  for (const auto& comp : components) {
    const double d = distance(comp.centroid(), previous);
    if (d <= radius && d < best) {
      best = d;
      chosen = &comp;
    }
  }
  // No candidate nearby (occluded or removed): keep the previous mask.
  if (chosen != nullptr) {
    state.last = *chosen;
    state.last.set_object_id(state.object_id);
  }
  return state.last;
}

Observation inpaint(const Observation& obs, const ObjectMask& mask, const InpaintStrategy& strategy) {
  require_same_size(obs, mask);
  validate_strategy(strategy);
  Observation out = obs;
  if (mask.empty()) return out;

  if (const auto* c = std::get_if<ConstantFill>(&strategy)) {
    for (std::size_t i = 0; i < obs.cells(); ++i) {
      if (!mask.get(i)) continue;
      for (std::size_t p = 0; p < kPlaneCount; ++p) out.cell(p, i) = c->value;
    }
    return out;
  }

  std::size_t background = 0;
  const auto means = background_means(obs, mask, background);
  if (std::holds_alternative<BackgroundMeanFill>(strategy) && background == 0) {
    throw Error("no background reference");
  }
  for (std::size_t i = 0; i < obs.cells(); ++i) {
    if (!mask.get(i)) continue;
    for (std::size_t p = 0; p < kPlaneCount; ++p) out.cell(p, i) = means[p];
  }
  if (std::holds_alternative<BackgroundMeanFill>(strategy)) return out;

  // Jacobi smoothing of masked cells from their 4-neighborhood.
  const auto iterations = std::get<NeighborDiffusionFill>(strategy).iterations;
  const std::size_t w = obs.width();
  const std::size_t h = obs.height();
  for (std::size_t it = 0; it < iterations; ++it) {
    const Observation prev = out;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (!mask.get(x, y)) continue;
        for (std::size_t p = 0; p < kPlaneCount; ++p) {
          double sum = 0.0;
          double n = 0.0;
          if (x > 0) { sum += prev.at(p, x - 1, y); n += 1.0; }
          if (x + 1 < w) { sum += prev.at(p, x + 1, y); n += 1.0; }
          if (y > 0) { sum += prev.at(p, x, y - 1); n += 1.0; }
          if (y + 1 < h) { sum += prev.at(p, x, y + 1); n += 1.0; }
          out.at(p, x, y) = sum / n;
        }
      }
    }
  }
  return out;
}

}  // namespace pcd
