#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pcd/error.hpp"
#include "pcd/harness.hpp"
#include "pcd/simworld.hpp"
#include "pcd/track2mask.hpp"

using namespace pcd;

namespace {

const TaskKind kAllTasks[] = {TaskKind::kReach, TaskKind::kPickPlace, TaskKind::kMoveNear,
                              TaskKind::kStack};

TruthProvider truth_of(const Scene& scene) {
  return [&scene](const std::string& label) { return ground_truth_mask(scene, label); };
}

Observation random_observation(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Observation obs(32, 32);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    for (std::size_t i = 0; i < obs.cells(); ++i) obs.cell(p, i) = u(gen);
  }
  return obs;
}

ObjectMask random_mask(std::mt19937_64& gen, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ObjectMask mask(32, 32);
  for (std::size_t i = 0; i < 32 * 32; ++i) mask.set(i, u(gen) < density);
  return mask;
}

const InpaintStrategy kStrategies[] = {ConstantFill{0.0}, ConstantFill{0.7}, BackgroundMeanFill{},
                                       NeighborDiffusionFill{20}};

}  // namespace

TEST_CASE("point and box prompts on an isolated object") {
  Scene s;
  s.objects.push_back({"red_block", {0.4, 0.6}, 0.05, class_intensity("red_block"), true});
  s.objects.push_back({"zone", {0.8, 0.2}, 0.07, class_intensity("zone"), false});
  const Observation obs = render(s);
  const ObjectMask truth = ground_truth_mask(s, "red_block");
  Rng rng(0);

  const auto [cx, cy] = obs.cell_of({0.4, 0.6});
  auto [point_mask, point_state] =
      annotate_initial(obs, PointPrompt{cx, cy}, "red", TrackerMode::kExact, {}, rng);
  CHECK(point_mask.count() == truth.count());
  CHECK(iou(point_mask, truth) == 1.0);
  CHECK(point_mask.object_id() == "red");
  CHECK(point_state.annotated);

  auto [bg_mask, bg_state] = annotate_initial(obs, PointPrompt{0, 31}, "red", TrackerMode::kExact, {}, rng);
  CHECK(bg_mask.empty());
  CHECK_FALSE(bg_state.annotated);
  CHECK_FALSE(bg_state.note.empty());

  auto [box_mask, box_state] =
      annotate_initial(obs, BoxPrompt{cx - 3, cy - 3, cx + 4, cy + 4}, "red", TrackerMode::kExact, {}, rng);
  CHECK(iou(box_mask, truth) == 1.0);

  CHECK_THROWS_AS(validate_prompt(PointPrompt{32, 0}, 32, 32), Error);
  CHECK_THROWS_AS(validate_prompt(BoxPrompt{4, 4, 4, 8}, 32, 32), Error);
  CHECK_THROWS_AS(validate_prompt(BoxPrompt{0, 0, 33, 8}, 32, 32), Error);
  CHECK_THROWS_AS(validate_prompt(DetectorPrompt{"red_block", 1.5, 0}, 32, 32), Error);
  CHECK_THROWS_AS(validate_prompt(DetectorPrompt{"", 0.0, 0}, 32, 32), Error);
}

TEST_CASE("clean detector reproduces ground truth on every task") {
  for (const auto kind : kAllTasks) {
    for (const ShiftSpec& shift : {ShiftSpec{NoShift{}}, ShiftSpec{SpatialShift{}}, ShiftSpec{DistractorShift{}}}) {
      const World world(make_task(kind), shift);
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto [scene, obs] = world.reset(seed);
        for (const auto& label : world.task().instruction.target_labels) {
          Rng rng(seed);
          auto [mask, state] = annotate_initial(obs, DetectorPrompt{label, 0.0, 0}, label,
                                                TrackerMode::kExact, truth_of(scene), rng);
          ObjectMask expected = ground_truth_mask(scene, label);
          expected.set_object_id(label);
          CHECK(mask == expected);
        }
      }
    }
  }
}

TEST_CASE("detector misses and jitter") {
  const World world(make_task(TaskKind::kReach), NoShift{});
  const auto [scene, obs] = world.reset(3);
  const ObjectMask truth = ground_truth_mask(scene, "red_block");
  Rng rng(42);
  std::size_t misses = 0;
  for (int i = 0; i < 2000; ++i) {
    auto [mask, state] = annotate_initial(obs, DetectorPrompt{"red_block", 0.2, 0}, "red",
                                          TrackerMode::kExact, truth_of(scene), rng);
    if (mask.empty()) {
      ++misses;
      CHECK_FALSE(state.annotated);
    }
  }
  CHECK(std::abs(misses / 2000.0 - 0.2) <= 3.0 * std::sqrt(0.2 * 0.8 / 2000.0));

  for (int i = 0; i < 200; ++i) {
    auto [mask, state] = annotate_initial(obs, DetectorPrompt{"red_block", 0.0, 2}, "red",
                                          TrackerMode::kExact, truth_of(scene), rng);
    REQUIRE_FALSE(mask.empty());
    // Shifted by at most 2 cells per axis and grown by at most 2: every cell
    // lies within 4 cells (Chebyshev) of the true footprint.
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) {
        if (!mask.get(x, y)) continue;
        bool near = false;
        for (std::size_t v = (y >= 4 ? y - 4 : 0); v <= std::min<std::size_t>(31, y + 4) && !near; ++v) {
          for (std::size_t w = (x >= 4 ? x - 4 : 0); w <= std::min<std::size_t>(31, x + 4) && !near; ++w) {
            near = truth.get(w, v);
          }
        }
        CHECK(near);
      }
    }
    CHECK(mask.count() >= truth.count() / 2);
  }
  CHECK_THROWS_AS(annotate_initial(obs, DetectorPrompt{"red_block", 0.0, 0}, "red",
                                   TrackerMode::kExact, {}, rng),
                  Error);
}

TEST_CASE("exact tracking") {
  const World world(make_task(TaskKind::kPickPlace), NoShift{});
  auto [scene, obs] = world.reset(1);
  Rng rng(0);
  auto [mask0, state] = annotate_initial(obs, DetectorPrompt{"red_block", 0.0, 0}, "red_block",
                                         TrackerMode::kExact, truth_of(scene), rng);
  CHECK(track(state, obs, truth_of(scene)) == mask0);
  scene.find("red_block")->position = {0.3, 0.3};
  const auto moved = track(state, world.render(scene), truth_of(scene));
  CHECK(iou(moved, ground_truth_mask(scene, "red_block")) == 1.0);
}

TEST_CASE("nearest-match tracking follows a moving object") {
  const World world(make_task(TaskKind::kReach), NoShift{});
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> step(-1, 1);
  double iou_sum = 0.0;
  std::size_t frames = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto [scene, obs] = world.reset(seed);
    const auto [cx, cy] = obs.cell_of(scene.find("red_block")->position);
    Rng rng(seed);
    auto [mask, state] = annotate_initial(obs, PointPrompt{cx, cy}, "red_block",
                                          TrackerMode::kNearestMatch, {}, rng);
    for (std::size_t t = 0; t < 20; ++t) {
      // One cell per step in a random direction.
      Vec2& p = scene.find("red_block")->position;
      p = {std::clamp(p.x + step(gen) / 32.0, 0.06, 0.94), std::clamp(p.y + step(gen) / 32.0, 0.06, 0.94)};
      const Observation o = world.render(scene);
      const ObjectMask tracked = track(state, o, {});
      iou_sum += iou(tracked, ground_truth_mask(scene, "red_block"));
      ++frames;
    }
  }
  CHECK(iou_sum / frames >= 0.9);
}

TEST_CASE("occluded objects keep the previous mask") {
  Scene s;
  s.objects.push_back({"red_block", {0.4, 0.4}, 0.05, class_intensity("red_block"), true});
  const Observation obs = render(s);
  const auto [cx, cy] = obs.cell_of({0.4, 0.4});
  Rng rng(0);
  auto [mask, state] = annotate_initial(obs, PointPrompt{cx, cy}, "red", TrackerMode::kNearestMatch, {}, rng);
  Scene gone = s;
  gone.objects.clear();
  CHECK(track(state, render(gone), {}) == mask);
  Scene far = s;
  far.objects[0].position = {0.9, 0.9};
  CHECK(track(state, render(far), {}) == mask);
}

TEST_CASE("inpainting leaves unmasked cells alone") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Observation obs = random_observation(gen);
    const ObjectMask mask = random_mask(gen, 0.3);
    for (const auto& strategy : kStrategies) {
      const Observation out = inpaint(obs, mask, strategy);
      for (std::size_t p = 0; p < kPlaneCount; ++p) {
        for (std::size_t i = 0; i < obs.cells(); ++i) {
          if (!mask.get(i)) REQUIRE(out.cell(p, i) == obs.cell(p, i));
        }
      }
      CHECK(inpaint(obs, ObjectMask(32, 32), strategy) == obs);
    }
  }
}

TEST_CASE("inpainting fills") {
  std::mt19937_64 gen(4);
  const Observation obs = random_observation(gen);
  const ObjectMask mask = random_mask(gen, 0.2);

  const Observation zero = inpaint(obs, mask, ConstantFill{0.0});
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    for (std::size_t i = 0; i < obs.cells(); ++i) {
      if (mask.get(i)) CHECK(zero.cell(p, i) == 0.0);
    }
  }

  const Observation mean = inpaint(obs, mask, BackgroundMeanFill{});
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    double sum = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < obs.cells(); ++i) {
      if (!mask.get(i)) {
        sum += obs.cell(p, i);
        n += 1.0;
      }
    }
    for (std::size_t i = 0; i < obs.cells(); ++i) {
      if (mask.get(i)) CHECK(mean.cell(p, i) == doctest::Approx(sum / n).epsilon(1e-12));
    }
  }

  // Averaging stays within the background range.
  const Observation smooth = inpaint(obs, mask, NeighborDiffusionFill{50});
  for (std::size_t i = 0; i < obs.cells(); ++i) {
    if (mask.get(i)) CHECK((smooth.cell(0, i) >= 0.0 && smooth.cell(0, i) <= 1.0));
  }

  ObjectMask all(32, 32);
  for (std::size_t i = 0; i < 32 * 32; ++i) all.set(i);
  CHECK_THROWS_WITH_AS(inpaint(obs, all, BackgroundMeanFill{}), "no background reference", Error);
  CHECK_THROWS_AS(inpaint(obs, mask, NeighborDiffusionFill{0}), Error);
  CHECK_THROWS_AS(inpaint(obs, mask, ConstantFill{2.0}), Error);
  CHECK_THROWS_AS(inpaint(obs, ObjectMask(16, 16), ConstantFill{0.0}), Error);
}

TEST_CASE("uniform background is a fixed point of every strategy") {
  const double beta = 0.37;
  Observation obs(32, 32);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    for (std::size_t i = 0; i < obs.cells(); ++i) obs.cell(p, i) = beta;
  }
  std::mt19937_64 gen(12);
  const ObjectMask mask = random_mask(gen, 0.4);
  // Object cells carry other values before filling.
  Observation dirty = obs;
  for (std::size_t i = 0; i < obs.cells(); ++i) {
    if (mask.get(i)) dirty.cell(0, i) = 0.9;
  }
  for (const InpaintStrategy& strategy :
       {InpaintStrategy{ConstantFill{beta}}, InpaintStrategy{BackgroundMeanFill{}},
        InpaintStrategy{NeighborDiffusionFill{20}}}) {
    const Observation out = inpaint(dirty, mask, strategy);
    for (std::size_t p = 0; p < kPlaneCount; ++p) {
      for (std::size_t i = 0; i < obs.cells(); ++i) CHECK(out.cell(p, i) == doctest::Approx(beta).epsilon(1e-12));
    }
  }
}

TEST_CASE("inpainting the target removes it from plane 0") {
  for (const auto kind : kAllTasks) {
    const World world(make_task(kind), BrightnessShift{});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto [scene, obs] = world.reset(seed);
      const std::string& subject = world.task().subject();
      const ObjectMask mask = ground_truth_mask(scene, subject);
      double bg = 0.0;
      double n = 0.0;
      for (std::size_t i = 0; i < obs.cells(); ++i) {
        if (!mask.get(i)) {
          bg += obs.cell(kObjectPlane, i);
          n += 1.0;
        }
      }
      bg /= n;
      const Observation zero = inpaint(obs, mask, ConstantFill{0.0});
      const Observation mean = inpaint(obs, mask, BackgroundMeanFill{});
      const Observation smooth = inpaint(obs, mask, NeighborDiffusionFill{});
      for (std::size_t i = 0; i < obs.cells(); ++i) {
        if (!mask.get(i)) continue;
        CHECK(zero.cell(kObjectPlane, i) == 0.0);
        CHECK(mean.cell(kObjectPlane, i) <= bg + 1e-9);
      }
      CHECK_FALSE(locate_class(zero, subject));
      CHECK_FALSE(locate_class(mean, subject));
      CHECK_FALSE(locate_class(smooth, subject));
    }
  }
}

TEST_CASE("masker unions every target and tracks it") {
  const World world(make_task(TaskKind::kStack), NoShift{});
  auto [scene, obs] = world.reset(6);
  MaskConfig cfg;
  Masker masker(cfg, world.task().instruction.target_labels, world.config(), Rng(1));
  const ObjectMask m = masker.update(scene, obs);
  ObjectMask expected(32, 32);
  for (const auto& label : world.task().instruction.target_labels) expected |= ground_truth_mask(scene, label);
  CHECK(iou(m, expected) == 1.0);
  const Observation cleaned = masker.apply(obs, m);
  for (const auto& label : world.task().instruction.target_labels) CHECK_FALSE(locate_class(cleaned, label));
}
