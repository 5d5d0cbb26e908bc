#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "router/device.hpp"
#include "router/fock.hpp"

namespace router {

using Operator = SparseOp<cplx>;

struct LinearOperator
{
  std::string label;
  Operator matrix;
};

/// Rate is folded into `op` (op = sqrt(rate) * base).
struct CollapseOperator
{
  std::string label;
  Operator op;
};

struct DensityMatrix
{
  Eigen::MatrixXcd rho;
  double time_ns = 0;

  static DensityMatrix pure(Eigen::VectorXcd const &psi, double t_ns = 0);
};

/// H(t) contribution 2 pi [f(t) G + conj(f(t)) G^dag] with f in linear MHz,
/// active on [start_ns, stop_ns). The window ends are integration breakpoints.
struct DriveComponent
{
  std::string label;
  Operator generator;
  std::function<cplx(double t_ns)> coefficient;
  double start_ns = 0;
  double stop_ns = std::numeric_limits<double>::infinity();
};

/// Rotating-frame Hamiltonian in rad/us: a static Hermitian part plus windowed drives.
struct HamiltonianModel
{
  HilbertSpace space;
  Operator static_part;
  std::vector<DriveComponent> drives;

  explicit HamiltonianModel(HilbertSpace s);

  void add_frame_detuning(std::string const &mode, double MHz);
  /// (K/2) a^dag a^dag a a
  void add_self_kerr(std::string const &mode, double K_MHz);
  /// chi n_a n_b
  void add_cross_kerr(std::string const &a, std::string const &b, double chi_MHz);
  /// Bilinear exchange f(t) a^dag b + h.c.
  void add_exchange(std::string const &a, std::string const &b, std::function<cplx(double)> f, double start_ns,
                    double stop_ns, std::string label = {});
  /// Single-mode drive f(t) a^dag + h.c.
  void add_drive(std::string const &mode, std::function<cplx(double)> f, double start_ns, double stop_ns,
                 std::string label = {});

  /// Assembled H(t) in rad/us.
  Operator at(double t_ns) const;
  std::vector<double> breakpoints() const;
};

/// Relaxation sqrt(1/T1) a and, when T_phi is finite, dephasing sqrt(2/T_phi) a^dag a.
std::vector<CollapseOperator> collapse_operators(DeviceConfig const &device, HilbertSpace const &space,
                                                 CoherencePolicy policy = CoherencePolicy::PhotonSwap);

struct IntegrationOptions
{
  double tol = 1e-8;
  double max_step_ns = std::numeric_limits<double>::infinity();
  double trace_limit = 1e-4;
  long max_steps = 5'000'000;
};

struct IntegrationStats
{
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double max_trace_drift = 0;
};

struct Trajectory
{
  std::vector<DensityMatrix> samples;
  DensityMatrix final_state;
  IntegrationStats stats;
};

/// Adaptive Dormand-Prince 5(4) on the matrix-valued master equation with
/// dense output at `sample_times_ns`. Integration restarts at every drive
/// window edge. The trace is never renormalised.
Trajectory integrate(DensityMatrix const &rho0, HamiltonianModel const &model,
                     std::vector<CollapseOperator> const &collapse, double t_end_ns,
                     std::vector<double> const &sample_times_ns = {}, IntegrationOptions const &opts = {});

/// exp(-i theta (a^dag b + a b^dag)) assembled block by block over a+b excitation number.
Operator exchange_unitary(HilbertSpace const &space, std::string const &a, std::string const &b, double theta);

inline double exchange_angle(double exponent) { return exponent * 1.5707963267948966; }

Eigen::VectorXcd apply_exchange_unitary(Eigen::VectorXcd const &psi, HilbertSpace const &space, std::string const &a,
                                        std::string const &b, double exponent);
DensityMatrix apply_exchange_unitary(DensityMatrix const &rho, HilbertSpace const &space, std::string const &a,
                                     std::string const &b, double exponent);

/// Re Tr(rho O); the imaginary part is written to `imag_residue` when given.
double expectation(Eigen::MatrixXcd const &rho, Operator const &observable, double *imag_residue = nullptr);
double expectation(Eigen::MatrixXcd const &rho, Eigen::MatrixXcd const &observable, double *imag_residue = nullptr);

struct StateDiagnostics
{
  double trace_drift;
  double hermiticity_residue;
  double min_eigenvalue;
};

StateDiagnostics diagnose(Eigen::MatrixXcd const &rho);

/// CSV: time_ns then one column per observable.
void write_trajectory_csv(std::ostream &out, Trajectory const &traj, std::vector<LinearOperator> const &observables);

/// Little-endian snapshot: "RHO1", u32 mode count, u32 dims, f64 time_ns, then
/// row-major (re, im) f64 pairs.
void write_snapshot(std::filesystem::path const &path, HilbertSpace const &space, DensityMatrix const &rho);
DensityMatrix read_snapshot(std::filesystem::path const &path, std::vector<int> *dims = nullptr);

} // namespace router
