#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace router {

struct MeasurementSetting
{
  std::string pauli; // one of I, X, Y, Z per qubit, e.g. "XZ"
  long shots = 1;
};

/// Row-stochastic P(reported | true) for one qubit.
struct ConfusionMatrix
{
  Eigen::Matrix2d p = Eigen::Matrix2d::Identity();

  /// Diagonal = fidelity, equal error both ways.
  static ConfusionMatrix symmetric(double fidelity);
  void validate() const;
};

struct TomographyRecord
{
  MeasurementSetting setting;
  double expectation;
  std::vector<long> counts; // indexed by reported bit string, first qubit most significant
};

struct BootstrapResult
{
  double estimate;
  double sigma;
  long n;
  long n_boot;
};

struct Reconstruction
{
  Eigen::MatrixXcd raw;       // linear inversion
  Eigen::MatrixXcd projected; // nearest PSD, unit trace
};

/// Pauli operator for a label string, first qubit most significant.
Eigen::MatrixXcd pauli_operator(std::string const &label);

/// All 4^n - 1 non-identity labels in lexicographic order over "IXYZ".
std::vector<std::string> pauli_labels(int n_qubits);

/// Draws multinomial counts per setting from std::mt19937_64. Setting k uses
/// the seed seed + k so settings are independent of evaluation order.
std::vector<TomographyRecord> sample_measurements(Eigen::MatrixXcd const &rho,
                                                  std::vector<MeasurementSetting> const &settings,
                                                  std::vector<ConfusionMatrix> const &confusion, std::uint64_t seed);

/// Infinite-shot expectations under the same readout model; counts left empty.
std::vector<TomographyRecord> exact_measurements(Eigen::MatrixXcd const &rho,
                                                 std::vector<MeasurementSetting> const &settings,
                                                 std::vector<ConfusionMatrix> const &confusion);

/// Every non-identity Pauli setting for n qubits.
std::vector<MeasurementSetting> full_settings(int n_qubits, long shots);

/// Linear inversion; settings missing from the records are taken as zero only
/// when `allow_subset`, otherwise an error.
Reconstruction reconstruct(std::vector<TomographyRecord> const &records, int n_qubits, bool allow_subset = false);

/// Eigenvalue clipping with water-filling so the spectrum stays on the simplex.
Eigen::MatrixXcd project_psd(Eigen::MatrixXcd const &rho);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(Eigen::MatrixXcd const &rho, Eigen::MatrixXcd const &sigma);

/// sigma = sqrt(N / (N - 1)) * std of N_boot resample means.
BootstrapResult bootstrap(std::vector<double> const &samples, long n_boot, std::uint64_t seed);

struct PauliBar
{
  std::string label;
  double value;
};

std::vector<PauliBar> pauli_bars(Eigen::MatrixXcd const &rho);

/// Header: setting,expectation,shots,sigma
void write_tomography_csv(std::ostream &out, std::vector<TomographyRecord> const &records);

/// {"dims": [...], "data": [[re, im], ...]} row-major.
std::string density_matrix_json(Eigen::MatrixXcd const &rho, std::vector<int> const &dims);

} // namespace router
