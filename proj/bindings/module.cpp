#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "imgrid/agent.hpp"
#include "imgrid/gridworld.hpp"
#include "imgrid/llm_reward.hpp"
#include "imgrid/net.hpp"
#include "imgrid/planner.hpp"
#include "imgrid/runner.hpp"
#include "imgrid/vae.hpp"

namespace py = pybind11;
using namespace imgrid;

PYBIND11_MODULE(_core, m) {
  m.doc() = "DoorKey gridworld with VAE and LLM intrinsic rewards";

  py::enum_<grid::Action>(m, "Action")
      .value("TURN_LEFT", grid::Action::TurnLeft)
      .value("TURN_RIGHT", grid::Action::TurnRight)
      .value("FORWARD", grid::Action::Forward)
      .value("PICKUP", grid::Action::Pickup)
      .value("DROP", grid::Action::Drop)
      .value("TOGGLE", grid::Action::Toggle)
      .value("DONE", grid::Action::Done);

  py::class_<grid::CellView>(m, "CellView")
      .def_readonly("object_id", &grid::CellView::object_id)
      .def_readonly("color_id", &grid::CellView::color_id)
      .def_readonly("state_id", &grid::CellView::state_id);

  py::class_<grid::Observation>(m, "Observation")
      .def_readonly("carrying_key", &grid::Observation::carrying_key)
      .def("at",
           [](const grid::Observation& obs, int col, int row) {
             return obs.at(col, row);
           },
           py::arg("col"), py::arg("row"))
      .def("flatten", &grid::Observation::flatten);

  py::class_<grid::VisibleObjects>(m, "VisibleObjects")
      .def_readonly("objects", &grid::VisibleObjects::objects)
      .def_readonly("carrying_key", &grid::VisibleObjects::carrying_key);

  m.def("visible_objects", &grid::visible_objects, py::arg("observation"));

  py::class_<grid::StepOutcome>(m, "StepOutcome")
      .def_readonly("observation", &grid::StepOutcome::observation)
      .def_readonly("extrinsic_reward", &grid::StepOutcome::extrinsic_reward)
      .def_readonly("terminated", &grid::StepOutcome::terminated)
      .def_readonly("truncated", &grid::StepOutcome::truncated);

  py::class_<grid::GridWorld>(m, "GridWorld")
      .def_static("doorkey", &grid::GridWorld::doorkey, py::arg("size"),
                  py::arg("layout_seed"))
      .def("step", &grid::GridWorld::step, py::arg("action"))
      .def("step",
           [](grid::GridWorld& world, int action) {
             return world.step(static_cast<grid::Action>(action));
           },
           py::arg("action"))
      .def("observe", &grid::GridWorld::observe)
      .def("render", &grid::GridWorld::render)
      .def_property_readonly("width", &grid::GridWorld::width)
      .def_property_readonly("height", &grid::GridWorld::height)
      .def_property_readonly("carrying_key", &grid::GridWorld::carrying_key)
      .def_property_readonly("step_count", &grid::GridWorld::step_count)
      .def_property_readonly("max_steps", &grid::GridWorld::max_steps)
      .def_property_readonly("terminated", &grid::GridWorld::terminated)
      .def_property_readonly("truncated", &grid::GridWorld::truncated)
      .def_property_readonly("done", &grid::GridWorld::done);

  m.def("find_goal_plan", &grid::find_goal_plan, py::arg("world"),
        "BFS action plan reaching the goal, or None when unsolvable");

  m.def(
      "softmax",
      [](const std::vector<double>& logits) { return nn::softmax(logits); },
      py::arg("logits"));

  m.def(
      "kl_divergence",
      [](const std::vector<double>& mu, const std::vector<double>& logvar) {
        return vae::kl_divergence({mu, logvar});
      },
      py::arg("mu"), py::arg("logvar"),
      "Closed-form KL of a diagonal Gaussian to the unit Gaussian");

  m.attr("PROMPT_TEMPLATE_VERSION") = llm::kPromptTemplateVersion;
  m.attr("DEFAULT_MISSION") = llm::kDefaultMission;
  m.def("build_prompt", &llm::build_prompt, py::arg("objects"),
        py::arg("carrying"), py::arg("mission"));
  m.def("parse_score", &llm::parse_score, py::arg("response"));

  py::class_<llm::HeuristicMockClient>(m, "HeuristicMockClient")
      .def(py::init<>())
      .def("complete", &llm::HeuristicMockClient::complete, py::arg("prompt"));

  m.def(
      "moving_average",
      [](const std::vector<double>& values, int window) {
        return runner::moving_average(values, window);
      },
      py::arg("values"), py::arg("window"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        runner::RunConfig cfg =
            runner::RunConfig::from_json(nlohmann::json::parse(config_json));
        const runner::RunOutput out = runner::run(std::move(cfg));
        std::vector<std::string> csvs;
        csvs.reserve(out.seeds.size());
        for (const runner::SeedRunResult& r : out.seeds)
          csvs.push_back(r.csv.string());
        return csvs;
      },
      py::arg("config_json"),
      "Runs a full strategy x seed grid from a JSON config string; returns "
      "the per-seed CSV paths");
}
