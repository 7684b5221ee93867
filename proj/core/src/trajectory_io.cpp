#include "mts/trajectory_io.hpp"

#include "mts/json_support.hpp"

namespace mts {

nlohmann::json trajectory_to_json(const TrajectoryRecord& record) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const TrajectoryStep& s = record.steps[k];
    steps.push_back({{"k", k},
                     {"position", s.pose.position},
                     {"orientation", s.pose.orientation},
                     {"p", s.p},
                     {"gradient", s.gradient.g},
                     {"residual_norm", s.gradient.residual_norm}});
  }
  return {{"controller", record.controller},
          {"scene", record.scene},
          {"termination", std::string(to_string(record.termination))},
          {"guidance_steps", record.guidance_steps()},
          {"render_calls", record.render_calls},
          {"steps", std::move(steps)}};
}

TrajectoryRecord trajectory_from_json(const nlohmann::json& doc) {
  TrajectoryRecord r;
  doc.at("controller").get_to(r.controller);
  doc.at("scene").get_to(r.scene);
  r.termination = termination_from_string(doc.at("termination").get<std::string>());
  doc.at("render_calls").get_to(r.render_calls);
  for (const auto& s : doc.at("steps")) {
    TrajectoryStep step;
    s.at("position").get_to(step.pose.position);
    s.at("orientation").get_to(step.pose.orientation);
    s.at("p").get_to(step.p);
    s.at("gradient").get_to(step.gradient.g);
    s.at("residual_norm").get_to(step.gradient.residual_norm);
    r.steps.push_back(std::move(step));
  }
  return r;
}

}  // namespace mts
