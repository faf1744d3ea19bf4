#pragma once

#include "vgswarm/common.hpp"

#include <array>
#include <cmath>
#include <string_view>

namespace vgswarm {

enum class BehaviorState { Init, Searching, Approaching, Departing, Keeping };

inline constexpr std::array<BehaviorState, 5> kAllStates{BehaviorState::Init, BehaviorState::Searching,
                                                         BehaviorState::Approaching, BehaviorState::Departing,
                                                         BehaviorState::Keeping};

inline std::string_view to_string(BehaviorState s) {
  switch (s) {
    case BehaviorState::Init: return "init";
    case BehaviorState::Searching: return "searching";
    case BehaviorState::Approaching: return "approaching";
    case BehaviorState::Departing: return "departing";
    case BehaviorState::Keeping: return "keeping";
  }
  return "?";
}

/// Random-walk search: the heading turns by N(0, turn_sigma) each tick,
/// except with probability `persistence` when it is kept as is.
struct SearchPolicy {
  double turn_sigma = deg2rad(4.0);  // per tick
  double persistence = 0.0;
  double avoid_radius = 1.2;          // neighbours ahead and closer than this are avoided, m
  double avoid_turn = deg2rad(10.0);  // per tick
};

struct AgentBehavior {
  BehaviorState state = BehaviorState::Init;
  double epsilon_c = 0.02;
  SearchPolicy search;
};

inline bool is_entrapping(BehaviorState s) {
  return s == BehaviorState::Approaching || s == BehaviorState::Departing || s == BehaviorState::Keeping;
}

/// Next state. Outside the pattern the field reads higher than the contour
/// level, so C_C > C_P + eps means approach and C_C < C_P - eps means depart.
inline AgentBehavior transition(AgentBehavior b, bool has_target, double c_c, double c_p) {
  if (b.state == BehaviorState::Init || !has_target) {
    b.state = BehaviorState::Searching;
    return b;
  }
  if (c_c > c_p + b.epsilon_c) b.state = BehaviorState::Approaching;
  else if (c_c < c_p - b.epsilon_c) b.state = BehaviorState::Departing;
  else b.state = BehaviorState::Keeping;
  return b;
}

}  // namespace vgswarm
