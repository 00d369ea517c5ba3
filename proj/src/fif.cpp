#include "legest/fif.hpp"

#include "legest/errors.hpp"

namespace legest {

FifResult solve_fif(const FifProblem& problem, int T) {
  const int last = static_cast<int>(problem.history.size()) - 1;
  if (T < 0) T = last;
  if (T > last) {
    throw Error(ErrorCode::DimensionMismatch,
                "requested tick is beyond the recorded history");
  }

  std::vector<QpNode> nodes;
  nodes.reserve(T + 1);
  for (int k = 0; k <= T; ++k) {
    nodes.push_back(make_qp_node(problem.history[k], problem.n_feet, problem.cfg));
  }
  for (int k = 0; k < T; ++k) {
    attach_successor_blocks(nodes[k], problem.history[k],
                            problem.history[k + 1], problem.n_feet,
                            problem.cfg);
    if (problem.history[k].has_vo) {
      attach_vo_block(nodes[k], problem.history[k].vo_increment,
                      problem.n_feet, problem.cfg);
    }
  }
  return solve_fif(nodes, problem.prior.to_vector(), problem.P0);
}

MheState fif_mhe_state(const FifResult& r, int k, int n_feet) {
  return MheState::from_vector(fif_state(r, k), n_feet);
}

}  // namespace legest
