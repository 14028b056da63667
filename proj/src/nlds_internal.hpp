#pragma once

// Per-node update shared by the OpenMP and serial reference nlds_step.

#include "spm/nlds.hpp"

namespace spm::detail {

inline double zeta_of(const NldsState& state, const Graph& graph, double beta_tilde, NodeId node) {
    double z = 1.0;
    for (NodeId j : graph.neighbors(node)) z *= 1.0 - beta_tilde * state[j].i;
    return z;
}

inline NodeProbabilities update_node(const NldsState& state, const Graph& graph, const NldsParams& p, NodeId node) {
    const NodeProbabilities& cur = state[node];
    const double z = zeta_of(state, graph, p.beta_tilde, node);
    NodeProbabilities next;
    next.s = cur.s * z;
    next.i = cur.s * (1.0 - z) + cur.i * p.alpha_ii + cur.id * p.alpha_idi;
    next.id = cur.i * p.alpha_iid + cur.id * p.alpha_idid;
    // R has no outflow: it gains the recovering mass of I and any I_D leak.
    next.r = cur.r + cur.i * (1.0 - p.alpha_ii - p.alpha_iid) + cur.id * (1.0 - p.alpha_idi - p.alpha_idid);
    return next;
}

}  // namespace spm::detail
