#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uamtfl/tensor.hpp"

namespace uamtfl {

struct GradCheckResult {
  bool pass = true;
  double worst_rel_error = 0.0;
  std::string worst_parameter;  // name of the worst-offending parameter
  std::size_t worst_index = 0;  // flat index within that parameter
  double analytic = 0.0;        // analytic gradient at the worst coordinate
  double numeric = 0.0;         // central-difference estimate there
  std::size_t checked = 0;      // number of coordinates compared
};

/// Compares analytic gradients against central finite differences for
/// every element of every parameter tracked by `graph`.
///
/// `loss_fn` must rebuild the forward graph and return the scalar loss;
/// it is re-evaluated with each coordinate perturbed by +/-step. The
/// relative error at a coordinate is |a - n| / max(|n|, 1e-12), with
/// differences below 1e-9 treated as exact so that dead subgradients
/// (relu/l1 at 0) compare clean. A graph with no parameters passes
/// vacuously.
GradCheckResult finite_difference_check(Graph& graph,
                                        const std::function<Tensor()>& loss_fn,
                                        double tolerance, double step = 1e-5);

struct NamedCheck {
  std::string name;
  std::function<GradCheckResult()> run;
};

/// The full coverage suite: every differentiable operation, every loss,
/// and every model variant's total objective on small fixed instances.
/// Used by the `gradcheck` CLI command and the acceptance tests.
std::vector<NamedCheck> standard_gradcheck_suite(double tolerance = 1e-4);

}  // namespace uamtfl
