#ifndef NLSLAB_MODULATION_HPP
#define NLSLAB_MODULATION_HPP

#include <Eigen/Dense>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/groundstate.hpp"
#include "nlslab/model.hpp"
#include "nlslab/nls.hpp"
#include "nlslab/scenario.hpp"
#include "nlslab/soliton.hpp"

namespace nlslab {

// Parameter ordering inside one soliton block: beta, E, b_1..b_d, v_1..v_d.
int block_size(int d);
Eigen::VectorXd pack(const std::vector<SolitonParams>& sigma);
std::vector<SolitonParams> unpack(const Eigen::VectorXd& x, int d);

struct DecompositionConfig {
  double tol = 1e-9;      // residual tolerance relative to ||psi||_2
  int max_iters = 20;
  double fd_step = 1e-6;  // finite-difference step (relative to E for the E column)
  bool rates = false;     // also assemble the differentiated system (requires model)
};

struct Decomposition {
  std::vector<SolitonParams> sigma;
  Field chi;
  double residual = 0.0;  // max_k |<f_j, sigma3 xi_k(E_j)>|
  int iters = 0;
  // Differentiated orthogonality conditions J sigma' + rhs = 0; J0 keeps the soliton-diagonal part
  // -<d_sigma w_j, sigma3 zeta_l(sigma_j)>. Filled when DecompositionConfig::rates is set.
  Eigen::MatrixXd J, J0;
  Eigen::VectorXd rhs;
};

// Orthogonality functionals <f_j, sigma3 xi_l(E_j)> as real numbers (the imaginary unit of the
// (1,1)-type pairings is dropped), ordered soliton by soliton.
Eigen::VectorXd orthogonality_residuals(const Grid& grid, const Field& psi, const std::vector<SolitonParams>& sigma,
                                        const ProfileFamily& family);

// Newton solve of the orthogonality conditions starting from guess.
Decomposition modulation_project(const FieldState& psi, const std::vector<SolitonParams>& guess,
                                 const ProfileFamily& family, const DecompositionConfig& cfg = {},
                                 const NonlinearityModel* model = nullptr);

struct JacobianIdentity {
  double fd_det = 0.0;       // |det grad_lambda Phi| by central differences
  double formula = 0.0;      // e^2 n^{2d}
  double rel_err = 0.0;
};
JacobianIdentity jacobian_identity_check(double E, const ProfileFamily& family, const Grid& grid, double h = 1e-5);

struct ModulationCoordinates {
  double gamma = 0.0;
  double E = 0.0;
  Vec c;
  Vec v;
};

struct DecompositionRecord {
  double t = 0.0;
  std::vector<SolitonParams> sigma;
  double ortho_residual = 0.0;
  double M0 = 0.0, M1 = 0.0, M2 = 0.0;
  double rho = 0.0;
  double chi_l2 = 0.0, chi_lm = 0.0;
  int newton_iters = 0;
  Eigen::MatrixXd J, J0;
  Eigen::VectorXd rhs;
};

// sum_j ||<x - b_j>^{-nu} chi||_2 with x - b_j wrapped into the box.
double majorant_M1(const Grid& grid, const Field& chi, const std::vector<SolitonParams>& sigma, double nu);
// ||chi||_m by quadrature.
double majorant_M2(const Grid& grid, const Field& chi, double m);
// sum_j |gamma_j - beta_0j| + |E_j - E_0j| + |c_j - b_0j| + |v_j - v_0j|.
double majorant_M0(const std::vector<ModulationCoordinates>& coords, const std::vector<SolitonParams>& sigma0);

// gamma_j(t) = beta_j - int_0^t (E_j - |v_j|^2/4 - v_j'.b_j/2), c_j(t) = b_j - int_0^t v_j, by the trapezoid
// rule over the record times; v_j' from finite differences of the series.
std::vector<std::vector<ModulationCoordinates>> reconstruct_coordinates(
    const std::vector<DecompositionRecord>& series);

// rho(t) = <t>^{-1} + sum over the listed times of <t - t_jk>^{-1}.
double weight_rho(double t, const std::vector<double>& collision_times);

// t_jk for every ordered pair j != k: zero when t0_jk <= 0, otherwise the root of
// int_0^{t_jk} v_jk(s).v0_jk / |v0_jk|^2 ds = t0_jk with v_jk frozen after the last record.
std::vector<double> collision_times(const std::vector<DecompositionRecord>& series,
                                    const std::vector<SolitonParams>& sigma0);

struct RateSeries {
  std::vector<double> t;
  // Per record, rates of (gamma, E, c, v) for every soliton packed like pack().
  std::vector<Eigen::VectorXd> fd;      // centered differences of the extracted series
  std::vector<Eigen::VectorXd> sweep;   // one fixed-point sweep seeded by fd (empty if unavailable)
  std::vector<Eigen::VectorXd> solve;   // exact solve of the differentiated conditions (empty if unavailable)
  std::vector<double> discrepancy;      // max |sweep - fd| per record
};

// Rates of (beta, E, b, v) by centered differences (one-sided second order at the ends).
std::vector<Eigen::VectorXd> sigma_rates(const std::vector<DecompositionRecord>& series);
RateSeries modulation_rates(const std::vector<DecompositionRecord>& series);

// Converts rates of (beta, E, b, v) into rates of (gamma, E, c, v).
Eigen::VectorXd to_modulation_rates(const Eigen::VectorXd& sigma_dot, const std::vector<SolitonParams>& sigma);

}  // namespace nlslab

#endif
