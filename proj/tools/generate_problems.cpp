// Writes a benchmark suite: start/goal pairs whose last ball sits inside
// target regions (damped least-squares IK from random seeds), classified by
// the collision count of the minimum-kinetic initial trajectory. Problems are
// kept in generation order until every class quota is met.

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "hp/aip.hpp"
#include "hp/problem_io.hpp"

namespace fs = std::filesystem;
using namespace hp;

namespace {

struct Region {
  Vec3 lo, hi;
};

bool solve_ik(const RobotModel& robot, std::size_t ball, const Vec3& target, Vec& q) {
  for (int it = 0; it < 300; ++it) {
    const BallState state = ball_state(robot, chain_frames(robot, q), ball);
    const Vec3 err = target - state.center;
    if (err.norm() < 2e-3) return true;
    Mat gram = state.jacobian * state.jacobian.transpose();
    gram.diagonal().array() += 1e-3;
    q += state.jacobian.transpose() * gram.ldlt().solve(err);
    q = q.cwiseMax(0.95 * robot.limits().min).cwiseMin(0.95 * robot.limits().max);
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark problem generator"};
  std::string robot_path, scene_path, out_dir, prefix = "problem";
  std::vector<double> region_values;
  std::array<int, 3> quota{0, 0, 0};
  int period = 60, harmonics = 5, repeats = 5, max_attempts = 200000;
  double epsilon = 0.05, clearance = 0.075;
  std::uint64_t seed = 1;
  app.add_option("--robot", robot_path)->required()->check(CLI::ExistingFile);
  app.add_option("--scene", scene_path)->required()->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir)->required();
  app.add_option("--prefix", prefix);
  app.add_option("--region", region_values, "x0 y0 z0 x1 y1 z1, repeatable")->required()->expected(6, -1);
  app.add_option("--count-a", quota[0]);
  app.add_option("--count-b", quota[1]);
  app.add_option("--count-c", quota[2]);
  app.add_option("--T", period);
  app.add_option("--N", harmonics);
  app.add_option("--epsilon", epsilon);
  app.add_option("--clearance", clearance, "minimum start/goal ball distance");
  app.add_option("--repeats", repeats);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);
  if (region_values.size() % 6 != 0) {
    std::cerr << "error: --region takes six numbers\n";
    return 1;
  }

  const RobotModel robot = RobotModel::load(robot_path);
  const Scene scene = Scene::load(scene_path);
  std::vector<Region> regions;
  for (std::size_t i = 0; i < region_values.size(); i += 6) {
    regions.push_back({Vec3(region_values[i], region_values[i + 1], region_values[i + 2]),
                       Vec3(region_values[i + 3], region_values[i + 4], region_values[i + 5])});
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t tip = robot.balls().size() - 1;
  int attempts = 0;
  const auto sample_config = [&](const Region& region) {
    while (++attempts < max_attempts) {
      Vec3 target;
      for (int i = 0; i < 3; ++i) target(i) = region.lo(i) + (region.hi(i) - region.lo(i)) * unit(rng);
      Vec q(robot.dof());
      for (Index j = 0; j < robot.dof(); ++j) {
        q(j) = 0.9 * (robot.limits().min(j) + (robot.limits().max(j) - robot.limits().min(j)) * unit(rng));
      }
      if (!solve_ik(robot, tip, target, q)) continue;
      bool clear = true;
      for (const BallState& b : forward_kinematics(robot, q)) {
        clear = clear && scene.signed_distance(b.center, b.radius).distance > clearance;
      }
      if (clear) return q;
    }
    throw std::runtime_error("no collision-free configuration found in a region");
  };

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  const auto relative = [&](const std::string& p) { return fs::relative(fs::absolute(p), fs::absolute(out)).string(); };
  std::array<int, 3> found{0, 0, 0};
  Json entries = Json::array();
  while (found != quota) {
    const Region& from = regions[static_cast<std::size_t>(unit(rng) * static_cast<double>(regions.size()))];
    const Region& to = regions[static_cast<std::size_t>(unit(rng) * static_cast<double>(regions.size()))];
    const Vec start = sample_config(from);
    const Vec goal = sample_config(to);
    const PlanProblem problem{robot, scene, CostParams{epsilon}, start, goal, SampleGrid(period),
                              static_cast<Index>(harmonics)};
    const int hits = count_colliding_samples(problem, initial_amplitudes(problem));
    const int cls = hits < 8 ? 0 : hits < 16 ? 1 : 2;
    if (found[cls] >= quota[cls]) continue;
    ++found[cls];
    const char letter = static_cast<char>('A' + cls);
    std::ostringstream name;
    name << prefix << "_" << letter << std::setw(2) << std::setfill('0') << found[cls] << ".json";
    const Json doc = {{"version", kProblemVersion},
                      {"robot", relative(robot_path)},
                      {"scene", relative(scene_path)},
                      {"start", json_io::to_json(start)},
                      {"goal", json_io::to_json(goal)},
                      {"N", harmonics},
                      {"T", period},
                      {"params", {{"epsilon", epsilon}, {"seed", 1}}}};
    std::ofstream(out / name.str()) << doc.dump(2) << "\n";
    entries.push_back({{"file", name.str()}, {"class", std::string(1, letter)}});
    std::cout << name.str() << " class " << letter << " colliding " << hits << "\n";
  }
  const Json suite = {{"version", 1}, {"repeats", repeats}, {"problems", entries}};
  std::ofstream(out / (prefix + "_suite.json")) << suite.dump(2) << "\n";
  return 0;
}
