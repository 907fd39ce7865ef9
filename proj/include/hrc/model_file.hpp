#pragma once

#include <string_view>
#include <vector>

#include "hrc/json_io.hpp"
#include "hrc/motion_model.hpp"

namespace hrc {

/// Model file: {"format":"hrc-motion-models","version":1,"actions":[{"action_id",
/// "axes":[{D,t0,mu,sigma} x2], optional "beta":[{S_t,s_t,S_D} x2],
/// optional "start"/"goal":[x,y]}]}. Throws ParseError / ValidationError.
std::vector<ActionMotionModel> parse_model_set(std::string_view text);
json to_json(const std::vector<ActionMotionModel>& models);

const ActionMotionModel* find_model(const std::vector<ActionMotionModel>& models, std::string_view action_id);

}  // namespace hrc
