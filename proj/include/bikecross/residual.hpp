#pragma once

#include <Eigen/Dense>
#include <deque>
#include <string>
#include <vector>

#include "bikecross/eic.hpp"
#include "bikecross/impact.hpp"
#include "bikecross/params.hpp"
#include "bikecross/rng.hpp"
#include "bikecross/scenario.hpp"

namespace bikecross {

// Per-tick observation layout fed to the residual model:
// [a_x, a_y, a_z, omega_x, omega_y, omega_z, v, varphi_b, phi, psi].
inline constexpr int kFeatureDim = 10;
// Predicted correction layout matches the generalized velocity
// (dx, dy, dz, dpsi, dvarphi_b).
inline constexpr int kOutputDim = 5;

Eigen::VectorXd make_features(const Eigen::Vector3d& accel,
                              const Eigen::Vector3d& gyro, double v,
                              double varphi_b, double phi, double psi);

// Fixed-length FIFO of observation ticks; the model consumes the most
// recent `window` ticks ending at the impact tick.
class WindowBuffer {
 public:
  explicit WindowBuffer(int window);
  void push(const Eigen::VectorXd& feat);
  void clear() { buf_.clear(); }
  bool full() const { return static_cast<int>(buf_.size()) == window_; }
  int size() const { return static_cast<int>(buf_.size()); }
  int window() const { return window_; }
  // Feature matrix, one column per tick, oldest first.
  Eigen::MatrixXd matrix() const;

 private:
  int window_;
  std::deque<Eigen::VectorXd> buf_;
};

// Gated recurrent unit over the observation window followed by a linear
// head; inputs and labels are whitened with stored statistics. A freshly
// constructed model has zero weights and identity statistics, so it
// predicts exactly zero correction.
class GruResidualModel {
 public:
  explicit GruResidualModel(int hidden = 32, int window = 10);

  int hidden() const { return hidden_; }
  int window() const { return window_; }

  // window matrix is kFeatureDim x window, oldest column first.
  Vector5d predict(const Eigen::MatrixXd& window) const;
  Vector5d predict(const WindowBuffer& buf) const;

  // Nominal post-impact velocity plus the learned correction.
  Vector5d enhance(const Vector5d& qdot_nominal,
                   const WindowBuffer& buf) const;

  void save(const std::string& path) const;
  static GruResidualModel load(const std::string& path);

  // Flat parameter vector (gate and head weights); exposed for the
  // trainer and for serialization round-trip checks.
  Eigen::VectorXd& raw_params() { return theta_; }
  const Eigen::VectorXd& raw_params() const { return theta_; }
  void set_normalization(const Eigen::VectorXd& feat_mean,
                         const Eigen::VectorXd& feat_std,
                         const Vector5d& label_mean,
                         const Vector5d& label_std);
  const Eigen::VectorXd& feat_mean() const { return feat_mean_; }
  const Eigen::VectorXd& feat_std() const { return feat_std_; }

  // Batched forward pass in normalized space: X[t] is kFeatureDim x B.
  // Returns kOutputDim x B. Caches for backprop are written when given.
  struct ForwardCache;
  Eigen::MatrixXd forward_normalized(const std::vector<Eigen::MatrixXd>& xs,
                                     ForwardCache* cache) const;
  Eigen::VectorXd backward(const ForwardCache& cache,
                           const Eigen::MatrixXd& dy) const;

  struct ForwardCache {
    std::vector<Eigen::MatrixXd> x;       // inputs per step
    std::vector<Eigen::MatrixXd> h_prev;  // state entering each step
    std::vector<Eigen::MatrixXd> z, r, hc;
    Eigen::MatrixXd h_last;
  };

 private:
  int hidden_;
  int window_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd feat_mean_, feat_std_;
  Eigen::VectorXd label_mean_, label_std_;

  friend struct GruLayout;
};

// One synthetic impact example: observation window and the correction the
// enhanced estimator should add to the nominal post-impact solution.
struct ResidualDataset {
  int window = 0;
  std::vector<Eigen::MatrixXd> features;  // kFeatureDim x window each
  std::vector<Vector5d> labels;
  std::size_t size() const { return features.size(); }
};

// Simulates impact events under randomized plant truth (mass, center of
// mass, restitution, obstacle height, approach state, sensor noise) and an
// unmodeled post-impact hop, then labels each with the gap between the
// true outcome and the nominal rigid-impact reconstruction.
ResidualDataset generate_synthetic_dataset(const ResidualConfig& cfg,
                                           const BikebotParams& nominal,
                                           const ActuatorLimits& lim,
                                           const ControllerGains& gains,
                                           const EicConfig& eic,
                                           const RestitutionModel& e_nominal,
                                           std::uint64_t seed);

struct TrainResult {
  GruResidualModel model{32, 10};
  double train_rmse = 0.0;    // enhanced estimator, train split
  double val_rmse = 0.0;      // enhanced estimator, validation split
  double nominal_rmse = 0.0;  // zero-correction baseline, validation split
  int epochs_run = 0;
};

TrainResult train_residual(const ResidualDataset& data,
                           const ResidualConfig& cfg, Rng& rng);

}  // namespace bikecross
