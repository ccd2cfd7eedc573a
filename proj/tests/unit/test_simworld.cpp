#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pcd/error.hpp"
#include "pcd/expert.hpp"
#include "pcd/simworld.hpp"
#include "pcd/track2mask.hpp"

using namespace pcd;

namespace {

const TaskKind kAllTasks[] = {TaskKind::kReach, TaskKind::kPickPlace, TaskKind::kMoveNear,
                              TaskKind::kStack};

SceneObject block(const std::string& label, Vec2 at) {
  return {label, at, 0.05, class_intensity(label), true};
}

// Runs the expert to termination; returns whether the task was completed.
bool expert_episode(const World& world, std::uint64_t seed) {
  const ScriptedExpert expert(world);
  auto [scene, obs] = world.reset(seed);
  while (true) {
    const auto action = expert.act(scene);
    auto [next, result] = world.step(scene, action);
    scene = std::move(next);
    if (result.success_now) return true;
    if (result.terminated) return false;
  }
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("render planes") {
  Scene empty;
  const Observation obs = render(empty);
  CHECK(obs.width() == 32);
  CHECK(obs.height() == 32);
  CHECK(obs.plane_mass(kObjectPlane) == 0.0);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    for (std::size_t i = 0; i < obs.cells(); ++i) {
      CHECK((obs.cell(p, i) >= 0.0 && obs.cell(p, i) <= 1.0));
    }
  }

  Scene a;
  a.objects.push_back(block("red_block", {0.25, 0.25}));
  Scene b;
  b.objects.push_back(block("green_block", {0.7, 0.7}));
  Scene both = a;
  both.objects.push_back(b.objects[0]);
  CHECK(render(both).plane_mass(kObjectPlane) ==
        doctest::Approx(render(a).plane_mass(kObjectPlane) + render(b).plane_mass(kObjectPlane))
            .epsilon(1e-12));

  // Removing one object with a zero fill leaves exactly the other one.
  const Observation full = render(both);
  const Observation cleared = inpaint(full, ground_truth_mask(both, "red_block"), ConstantFill{0.0});
  const ObjectMask red = ground_truth_mask(both, "red_block");
  for (std::size_t i = 0; i < full.cells(); ++i) {
    if (red.get(i)) CHECK(cleared.cell(kObjectPlane, i) == 0.0);
  }
  CHECK(cleared.plane_mass(kObjectPlane) == doctest::Approx(render(b).plane_mass(kObjectPlane)));
  CHECK(render(both) == render(both));
}

TEST_CASE("ground truth masks") {
  Scene s;
  s.objects.push_back(block("red_block", {0.4, 0.6}));
  const ObjectMask mask = ground_truth_mask(s, "red_block");
  const Observation obs = render(s);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      CHECK(mask.get(x, y) == (distance(obs.cell_center(x, y), {0.4, 0.6}) <= 0.05));
    }
  }
  CHECK_THROWS_AS(ground_truth_mask(s, "green_block"), Error);

  // Cell count against pi r^2, within one perimeter of cells.
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  for (int trial = 0; trial < 100; ++trial) {
    Scene t;
    const double r = 0.04 + 0.08 * (u(gen) - 0.2);
    t.objects.push_back({"zone", {u(gen), u(gen)}, r, class_intensity("zone"), false});
    const double area = std::acos(-1.0) * r * r * 32.0 * 32.0;
    const double perimeter = 2.0 * std::acos(-1.0) * r * 32.0;
    CHECK(std::abs(double(ground_truth_mask(t, "zone").count()) - area) <= perimeter);
  }
}

TEST_CASE("resets are deterministic and separate task and nuisance factors") {
  for (const auto kind : kAllTasks) {
    const World plain(make_task(kind), NoShift{});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto [s0, o0] = plain.reset(seed);
      const auto [s1, o1] = plain.reset(seed);
      CHECK(s0 == s1);
      CHECK(o0 == o1);
      // Training distribution: light on the subject.
      CHECK(distance(s0.spurious.light, s0.find(plain.task().subject())->position) <= 0.03 + 1e-12);

      for (const ShiftSpec& shift :
           {ShiftSpec{BrightnessShift{}}, ShiftSpec{TextureShift{}}, ShiftSpec{DistractorShift{}}}) {
        const World shifted(make_task(kind), shift);
        const auto [ss, os] = shifted.reset(seed);
        CHECK(ss.objects == s0.objects);
        CHECK(ss.gripper == s0.gripper);
        CHECK(shifted.success(ss) == plain.success(s0));
      }
    }
  }
  const World bright(make_task(TaskKind::kReach), BrightnessShift{0.25});
  CHECK(bright.reset(1).first.spurious.brightness == doctest::Approx(0.5));
  const World distract(make_task(TaskKind::kReach), DistractorShift{3, "can"});
  CHECK(distract.reset(1).first.spurious.distractors.size() == 3);
}

TEST_CASE("success reads only task geometry") {
  const World world(make_task(TaskKind::kReach), NoShift{});
  auto [scene, obs] = world.reset(5);
  Scene moved = scene;
  moved.spurious.light = {0.01, 0.99};
  moved.spurious.brightness = 0.9;
  moved.spurious.texture = 3;
  CHECK(world.success(moved) == world.success(scene));
  moved.gripper = scene.find("red_block")->position;
  CHECK(world.success(moved));
}

TEST_CASE("light is uncorrelated with the subject under shift") {
  const World world(make_task(TaskKind::kReach), BrightnessShift{});
  std::vector<double> lx, ly, sx, sy;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto [scene, obs] = world.reset(seed);
    lx.push_back(scene.spurious.light.x);
    ly.push_back(scene.spurious.light.y);
    sx.push_back(scene.find("red_block")->position.x);
    sy.push_back(scene.find("red_block")->position.y);
  }
  CHECK(std::abs(pearson(lx, sx)) < 0.1);
  CHECK(std::abs(pearson(ly, sy)) < 0.1);
}

TEST_CASE("state stays on the table and terminated episodes are frozen") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto kind : kAllTasks) {
    const World world(make_task(kind), SpatialShift{}, WorldConfig{.terminate_on_success = false});
    auto [scene, obs] = world.reset(2);
    for (std::size_t t = 0; t < world.task().max_steps; ++t) {
      const std::vector<double> action{u(gen), u(gen), u(gen)};
      auto [next, result] = world.step(scene, action);
      scene = std::move(next);
      CHECK((scene.gripper.x >= 0.0 && scene.gripper.x <= 1.0));
      CHECK((scene.gripper.y >= 0.0 && scene.gripper.y <= 1.0));
      for (const auto& o : scene.objects) {
        CHECK((o.position.x >= 0.0 && o.position.x <= 1.0 && o.position.y >= 0.0 &&
               o.position.y <= 1.0));
      }
      CHECK(result.terminated == (t + 1 == world.task().max_steps));
    }
    CHECK(scene.terminated);
    CHECK_THROWS_AS(world.step(scene, std::vector<double>{0.0, 0.0, 0.0}), Error);
  }
  const World world(make_task(TaskKind::kReach), NoShift{});
  const auto [scene, obs] = world.reset(0);
  CHECK_THROWS_AS(world.step(scene, std::vector<double>{0.0, 0.0}), Error);
  CHECK_THROWS_AS(world.step(scene, std::vector<double>{NAN, 0.0, 0.0}), Error);
}

TEST_CASE("scripted expert") {
  SUBCASE("proportional rule") {
    const World world(make_task(TaskKind::kReach), NoShift{});
    const ScriptedExpert expert(world);
    Scene s;
    s.gripper = {0.2, 0.5};
    s.objects.push_back(block("red_block", {0.6, 0.5}));
    CHECK(expert.act(s) == std::vector<double>{0.05, 0.0, grip_value(GripCommand::kHold)});
    s.gripper = {0.58, 0.51};
    CHECK(expert.act(s) == std::vector<double>{0.0, 0.0, grip_value(GripCommand::kHold)});
  }
  SUBCASE("completes every unshifted task") {
    for (const auto kind : kAllTasks) {
      const World world(make_task(kind), NoShift{});
      std::size_t wins = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) wins += expert_episode(world, seed) ? 1 : 0;
      INFO(to_string(kind));
      CHECK(wins == 100);
    }
  }
}

TEST_CASE("task and shift names") {
  for (const auto kind : kAllTasks) CHECK(parse_task_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_task_kind("juggle"), Error);
  for (const char* name : {"none", "spatial", "brightness", "distractors", "texture"}) {
    CHECK(shift_name(parse_shift(name)) == name);
  }
  CHECK_THROWS_AS(parse_shift("fog"), Error);
  CHECK(make_task(TaskKind::kReach).max_steps == 40);
  CHECK(make_task(TaskKind::kPickPlace).max_steps == 80);
  CHECK(make_task(TaskKind::kMoveNear).max_steps == 80);
  CHECK(make_task(TaskKind::kStack).max_steps == 120);
}
