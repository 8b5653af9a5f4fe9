// Compiles the templated core once for double so that errors surface in the
// library build rather than in every client.
#include <netlasso/netlasso.hpp>

namespace netlasso {

template class WeightedGraph<double>;
template class DifferenceOperator<double>;
template class LossSet<double>;
template class AdmmSolver<double>;
template class SpdSolver<double>;

template SolveResult<double> solve_ntl(const LossSet<double>&, const WeightedGraph<double>&, SolverConfig<double>,
                                       const SolverInit<double>&);
template SolveResult<double> solve_nl(const LossSet<double>&, const WeightedGraph<double>&, SolverConfig<double>,
                                      const SolverInit<double>&);
template ConvergenceReport<double> validate_convergence_params(const LossSet<double>&, const WeightedGraph<double>&,
                                                               const SolverConfig<double>&);
template RecoveryReport<double> recovery_interval(const LossSet<double>&, const WeightedGraph<double>&,
                                                  const Partition&, const std::optional<std::vector<double>>&);
template PathResult<double> k_path(const LossSet<double>&, const WeightedGraph<double>&, double,
                                   const std::vector<Index>&, SolverConfig<double>,
                                   std::optional<CentroidMatrix<double>>, double);
template PathResult<double> gamma_path(const LossSet<double>&, const WeightedGraph<double>&,
                                       const std::vector<double>&, SolverConfig<double>,
                                       std::optional<CentroidMatrix<double>>, bool, bool, double);

}  // namespace netlasso
