#pragma once

#include <vector>

#include "mirrormdp/mdp.hpp"

namespace mirrormdp {

/// Six states in a row, two actions (left = pair 2i, right = pair 2i+1).
/// Left always succeeds; the state-0 left self-loop pays 0.005. Right moves
/// right w.p. 0.35, stays w.p. 0.6, slips left w.p. 0.05; at the boundary
/// states the impossible move folds into staying. Right at state 5 pays 1.
Mdp river_swim();

/// Access-control queuing task: state = (free servers 0..num_servers,
/// priority of the head customer). Accept (unavailable with 0 free servers)
/// pays priority/8 and occupies a server; each busy server then frees
/// independently w.p. free_prob; the next customer's priority is uniform.
/// Pair ids: reject first, then accept, state-major order.
Mdp access_control(int num_servers = 10, double free_prob = 0.06,
                   std::vector<double> priorities = {1, 2, 4, 8});

}  // namespace mirrormdp
