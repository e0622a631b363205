#pragma once

// Problem and benchmark-suite files. Paths inside a file are resolved
// relative to the directory of that file.
//
// problem: {version, robot, scene, start, goal, N, T,
//           params{rho, lambda, alpha, beta, step_tol, epsilon, field, svm_model, seed}}
// suite:   {version, repeats, problems: [{file, class}]}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hp/aip.hpp"
#include "hp/json_io.hpp"

namespace hp {

struct ProblemFile {
  std::filesystem::path path;
  std::filesystem::path robot_path;
  std::filesystem::path scene_path;
  PlanProblem problem;
  AipParams params;
  std::optional<std::filesystem::path> svm_model;
  std::uint64_t seed = 1;
};

inline constexpr int kProblemVersion = 1;
inline constexpr int kSuiteVersion = 1;

inline ProblemFile parse_problem(const Json& doc, const std::filesystem::path& path) {
  json_io::check_keys(doc, "problem", {"version", "robot", "scene", "start", "goal", "N", "T"}, {"params"});
  json_io::check_version(doc, "problem", kProblemVersion);
  const auto base = path.parent_path();
  const auto file_field = [&](const char* key) {
    if (!doc.at(key).is_string()) throw IoError(std::string("problem: ") + key + " must be a path string");
    return base / doc.at(key).get<std::string>();
  };
  const auto count = [&](const Json& value, const char* key) {
    if (!value.is_number_integer()) throw IoError(std::string("problem: ") + key + " must be an integer");
    return value.get<long>();
  };

  const auto robot_path = file_field("robot");
  const auto scene_path = file_field("scene");
  RobotModel robot = RobotModel::load(robot_path);
  Scene scene = Scene::load(scene_path);
  const Vec start = json_io::vector(doc.at("start"), "problem start", robot.dof());
  const Vec goal = json_io::vector(doc.at("goal"), "problem goal", robot.dof());
  const long harmonics = count(doc.at("N"), "N");
  const long period = count(doc.at("T"), "T");

  AipParams params;
  CostParams cost;
  std::optional<std::filesystem::path> svm_model;
  std::uint64_t seed = 1;
  if (doc.contains("params")) {
    const Json& p = doc.at("params");
    json_io::check_keys(p, "problem params", {},
                        {"rho", "lambda", "alpha", "beta", "step_tol", "margin", "epsilon", "field", "svm_model", "seed", "max_iter"});
    if (p.contains("rho")) params.rho = json_io::number(p.at("rho"), "rho");
    if (p.contains("lambda")) params.lambda = json_io::number(p.at("lambda"), "lambda");
    if (p.contains("alpha")) params.alpha = json_io::number(p.at("alpha"), "alpha");
    if (p.contains("beta")) params.beta = json_io::number(p.at("beta"), "beta");
    if (p.contains("step_tol")) params.step_tol = json_io::number(p.at("step_tol"), "step_tol");
    if (p.contains("margin")) params.margin = json_io::number(p.at("margin"), "margin");
    if (p.contains("max_iter")) params.max_iter = static_cast<int>(count(p.at("max_iter"), "max_iter"));
    if (p.contains("epsilon")) cost.epsilon = json_io::number(p.at("epsilon"), "epsilon");
    if (p.contains("field")) {
      if (!p.at("field").is_string()) throw IoError("problem params: field must be \"raw\" or \"svm\"");
      try {
        params.field_source = parse_field_source(p.at("field").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw IoError(std::string("problem params: ") + e.what());
      }
    }
    if (p.contains("svm_model")) {
      if (!p.at("svm_model").is_string()) throw IoError("problem params: svm_model must be a path string");
      svm_model = base / p.at("svm_model").get<std::string>();
    }
    if (p.contains("seed")) seed = static_cast<std::uint64_t>(count(p.at("seed"), "seed"));
  }

  try {
    ProblemFile out{path, robot_path, scene_path,
                    PlanProblem{std::move(robot), std::move(scene), cost, start, goal,
                                SampleGrid(static_cast<int>(period)), static_cast<Index>(harmonics)},
                    params, svm_model, seed};
    out.problem.validate();
    out.params.validate();
    return out;
  } catch (const std::domain_error& e) {
    throw IoError(std::string("problem: ") + e.what());
  }
}

inline ProblemFile load_problem(const std::filesystem::path& path) {
  try {
    return parse_problem(json_io::read_file(path), path);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

struct SuiteEntry {
  ProblemFile problem;
  char task_class;  // 'A', 'B' or 'C'
};

struct BenchmarkSuite {
  std::vector<SuiteEntry> entries;
  int repeats = 1;
};

inline BenchmarkSuite load_suite(const std::filesystem::path& path) {
  try {
    const Json doc = json_io::read_file(path);
    json_io::check_keys(doc, "suite", {"version", "problems"}, {"repeats"});
    json_io::check_version(doc, "suite", kSuiteVersion);
    BenchmarkSuite suite;
    if (doc.contains("repeats")) {
      if (!doc.at("repeats").is_number_integer() || doc.at("repeats").get<int>() < 1) {
        throw IoError("suite: repeats must be an integer >= 1");
      }
      suite.repeats = doc.at("repeats").get<int>();
    }
    if (!doc.at("problems").is_array()) throw IoError("suite: problems must be an array");
    for (const Json& item : doc.at("problems")) {
      json_io::check_keys(item, "suite problem", {"file", "class"});
      const std::string cls = item.at("class").is_string() ? item.at("class").get<std::string>() : "";
      if (cls != "A" && cls != "B" && cls != "C") throw IoError("suite: class must be one of A, B, C");
      if (!item.at("file").is_string()) throw IoError("suite: file must be a path string");
      suite.entries.push_back({load_problem(path.parent_path() / item.at("file").get<std::string>()), cls[0]});
    }
    return suite;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace hp
