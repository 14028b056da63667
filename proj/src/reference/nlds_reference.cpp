// Serial reference kernels for nlds-engine.

#include "../nlds_internal.hpp"
#include "spm/errors.hpp"

namespace spm::reference {

NldsState nlds_step(const NldsState& state, const Graph& graph, const NldsParams& params) {
    if (state.size() != graph.node_count()) throw InvalidInput("state size does not match graph");
    std::vector<NodeProbabilities> next(state.size());
    for (std::size_t u = 0; u < next.size(); ++u) {
        next[u] = detail::update_node(state, graph, params, static_cast<NodeId>(u));
    }
    return NldsState(std::move(next));
}

}  // namespace spm::reference
