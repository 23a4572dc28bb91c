#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "trajkit/integrator.hpp"

namespace trajkit {

/// CSV rows trajectory_id,step,t,x0,x1,... with %.17g floats. Trajectory ids
/// start at first_id and follow the span order.
void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs, std::size_t first_id = 0,
                        bool header = true);

std::vector<Trajectory> read_trajectories(std::istream& is);

}  // namespace trajkit
