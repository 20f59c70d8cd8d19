#include "bikecross/residual.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "bikecross/dynamics.hpp"
#include "bikecross/errors.hpp"

namespace bikecross {

Eigen::VectorXd make_features(const Eigen::Vector3d& accel,
                              const Eigen::Vector3d& gyro, double v,
                              double varphi_b, double phi, double psi) {
  Eigen::VectorXd f(kFeatureDim);
  f << accel(0), accel(1), accel(2), gyro(0), gyro(1), gyro(2), v, varphi_b,
      phi, psi;
  return f;
}

WindowBuffer::WindowBuffer(int window) : window_(window) {
  if (window < 2) throw ValidationError("WindowBuffer: window must be >= 2");
}

void WindowBuffer::push(const Eigen::VectorXd& feat) {
  if (feat.size() != kFeatureDim)
    throw ValidationError("WindowBuffer: feature vector has wrong size");
  buf_.push_back(feat);
  while (static_cast<int>(buf_.size()) > window_) buf_.pop_front();
}

Eigen::MatrixXd WindowBuffer::matrix() const {
  if (!full()) throw IncompleteWindow("observation window is not full");
  Eigen::MatrixXd m(kFeatureDim, window_);
  for (int i = 0; i < window_; ++i) m.col(i) = buf_[static_cast<std::size_t>(i)];
  return m;
}

// Offsets of each weight block inside the flat parameter vector.
struct GruLayout {
  int H, D, O;
  int wz, wr, wh, uz, ur, uh, bz, br, bh, wo, bo, total;
  explicit GruLayout(int hidden) : H(hidden), D(kFeatureDim), O(kOutputDim) {
    int off = 0;
    auto adv = [&off](int n) {
      const int at = off;
      off += n;
      return at;
    };
    wz = adv(H * D);
    wr = adv(H * D);
    wh = adv(H * D);
    uz = adv(H * H);
    ur = adv(H * H);
    uh = adv(H * H);
    bz = adv(H);
    br = adv(H);
    bh = adv(H);
    wo = adv(O * H);
    bo = adv(O);
    total = off;
  }
};

namespace {

using CMap = Eigen::Map<const Eigen::MatrixXd>;
using MMap = Eigen::Map<Eigen::MatrixXd>;
using CVMap = Eigen::Map<const Eigen::VectorXd>;
using MVMap = Eigen::Map<Eigen::VectorXd>;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

}  // namespace

GruResidualModel::GruResidualModel(int hidden, int window)
    : hidden_(hidden), window_(window) {
  if (hidden < 1 || hidden > 512)
    throw ValidationError("GruResidualModel: hidden must lie in [1, 512]");
  if (window < 2)
    throw ValidationError("GruResidualModel: window must be >= 2");
  theta_ = Eigen::VectorXd::Zero(GruLayout(hidden_).total);
  feat_mean_ = Eigen::VectorXd::Zero(kFeatureDim);
  feat_std_ = Eigen::VectorXd::Ones(kFeatureDim);
  label_mean_ = Vector5d::Zero();
  label_std_ = Vector5d::Ones();
}

void GruResidualModel::set_normalization(const Eigen::VectorXd& feat_mean,
                                         const Eigen::VectorXd& feat_std,
                                         const Vector5d& label_mean,
                                         const Vector5d& label_std) {
  if (feat_mean.size() != kFeatureDim || feat_std.size() != kFeatureDim)
    throw ValidationError("set_normalization: bad feature stat size");
  if ((feat_std.array() <= 0).any() || (label_std.array() <= 0).any())
    throw ValidationError("set_normalization: stds must be positive");
  feat_mean_ = feat_mean;
  feat_std_ = feat_std;
  label_mean_ = label_mean;
  label_std_ = label_std;
}

Eigen::MatrixXd GruResidualModel::forward_normalized(
    const std::vector<Eigen::MatrixXd>& xs, ForwardCache* cache) const {
  const GruLayout L(hidden_);
  const double* th = theta_.data();
  CMap Wz(th + L.wz, L.H, L.D), Wr(th + L.wr, L.H, L.D), Wh(th + L.wh, L.H, L.D);
  CMap Uz(th + L.uz, L.H, L.H), Ur(th + L.ur, L.H, L.H), Uh(th + L.uh, L.H, L.H);
  CVMap bz(th + L.bz, L.H), br(th + L.br, L.H), bh(th + L.bh, L.H);
  CMap Wo(th + L.wo, L.O, L.H);
  CVMap bo(th + L.bo, L.O);

  const Eigen::Index B = xs.empty() ? 0 : xs.front().cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L.H, B);
  if (cache) {
    cache->x.clear();
    cache->h_prev.clear();
    cache->z.clear();
    cache->r.clear();
    cache->hc.clear();
  }
  for (const Eigen::MatrixXd& x : xs) {
    Eigen::MatrixXd az = Wz * x + Uz * h;
    az.colwise() += bz;
    Eigen::MatrixXd ar = Wr * x + Ur * h;
    ar.colwise() += br;
    const Eigen::MatrixXd z = sigmoid(az);
    const Eigen::MatrixXd r = sigmoid(ar);
    const Eigen::MatrixXd rh = r.cwiseProduct(h);
    Eigen::MatrixXd ah = Wh * x + Uh * rh;
    ah.colwise() += bh;
    const Eigen::MatrixXd hc = ah.array().tanh().matrix();
    if (cache) {
      cache->x.push_back(x);
      cache->h_prev.push_back(h);
      cache->z.push_back(z);
      cache->r.push_back(r);
      cache->hc.push_back(hc);
    }
    h = h.cwiseProduct((1.0 - z.array()).matrix()) + z.cwiseProduct(hc);
  }
  if (cache) cache->h_last = h;
  Eigen::MatrixXd y = Wo * h;
  y.colwise() += bo;
  return y;
}

Eigen::VectorXd GruResidualModel::backward(const ForwardCache& cache,
                                           const Eigen::MatrixXd& dy) const {
  const GruLayout L(hidden_);
  const double* th = theta_.data();
  CMap Uz(th + L.uz, L.H, L.H), Ur(th + L.ur, L.H, L.H), Uh(th + L.uh, L.H, L.H);
  CMap Wo(th + L.wo, L.O, L.H);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(L.total);
  double* g = grad.data();
  MMap gWz(g + L.wz, L.H, L.D), gWr(g + L.wr, L.H, L.D), gWh(g + L.wh, L.H, L.D);
  MMap gUz(g + L.uz, L.H, L.H), gUr(g + L.ur, L.H, L.H), gUh(g + L.uh, L.H, L.H);
  MVMap gbz(g + L.bz, L.H), gbr(g + L.br, L.H), gbh(g + L.bh, L.H);
  MMap gWo(g + L.wo, L.O, L.H);
  MVMap gbo(g + L.bo, L.O);

  gWo = dy * cache.h_last.transpose();
  gbo = dy.rowwise().sum();
  Eigen::MatrixXd dh = Wo.transpose() * dy;

  for (int t = static_cast<int>(cache.x.size()) - 1; t >= 0; --t) {
    const std::size_t k = static_cast<std::size_t>(t);
    const Eigen::MatrixXd& x = cache.x[k];
    const Eigen::MatrixXd& hp = cache.h_prev[k];
    const Eigen::MatrixXd& z = cache.z[k];
    const Eigen::MatrixXd& r = cache.r[k];
    const Eigen::MatrixXd& hc = cache.hc[k];

    const Eigen::MatrixXd dz =
        (dh.array() * (hc - hp).array() * z.array() * (1.0 - z.array()))
            .matrix();
    const Eigen::MatrixXd dah =
        (dh.array() * z.array() * (1.0 - hc.array().square())).matrix();
    const Eigen::MatrixXd rh = r.cwiseProduct(hp);

    gWh += dah * x.transpose();
    gUh += dah * rh.transpose();
    gbh += dah.rowwise().sum();

    const Eigen::MatrixXd drh = Uh.transpose() * dah;
    const Eigen::MatrixXd dr =
        (drh.array() * hp.array() * r.array() * (1.0 - r.array())).matrix();

    gWz += dz * x.transpose();
    gUz += dz * hp.transpose();
    gbz += dz.rowwise().sum();
    gWr += dr * x.transpose();
    gUr += dr * hp.transpose();
    gbr += dr.rowwise().sum();

    dh = dh.cwiseProduct((1.0 - z.array()).matrix()) + Uz.transpose() * dz +
         Ur.transpose() * dr + drh.cwiseProduct(r);
  }
  return grad;
}

Vector5d GruResidualModel::predict(const Eigen::MatrixXd& window) const {
  if (window.rows() != kFeatureDim || window.cols() != window_)
    throw ValidationError("predict: window must be kFeatureDim x window");
  std::vector<Eigen::MatrixXd> xs;
  xs.reserve(static_cast<std::size_t>(window_));
  for (int t = 0; t < window_; ++t) {
    Eigen::MatrixXd x(kFeatureDim, 1);
    x.col(0) = (window.col(t) - feat_mean_).cwiseQuotient(feat_std_);
    xs.push_back(std::move(x));
  }
  const Eigen::MatrixXd y = forward_normalized(xs, nullptr);
  return (y.col(0).cwiseProduct(label_std_) + label_mean_).eval();
}

Vector5d GruResidualModel::predict(const WindowBuffer& buf) const {
  if (!buf.full()) throw IncompleteWindow("observation window is not full");
  if (buf.window() != window_)
    throw ValidationError("predict: buffer window does not match the model");
  return predict(buf.matrix());
}

Vector5d GruResidualModel::enhance(const Vector5d& qdot_nominal,
                                   const WindowBuffer& buf) const {
  return qdot_nominal + predict(buf);
}

namespace {

constexpr char kMagic[4] = {'B', 'K', 'R', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_array(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const float f = static_cast<float>(v(i));
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
  }
}

Eigen::VectorXd get_f32_array(std::istream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    v(i) = static_cast<double>(f);
  }
  return v;
}

}  // namespace

void GruResidualModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write model file: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(hidden_));
  put_u32(os, static_cast<std::uint32_t>(window_));
  put_u32(os, static_cast<std::uint32_t>(kFeatureDim));
  put_u32(os, static_cast<std::uint32_t>(kOutputDim));
  put_f32_array(os, theta_);
  put_f32_array(os, feat_mean_);
  put_f32_array(os, feat_std_);
  put_f32_array(os, label_mean_);
  put_f32_array(os, label_std_);
  if (!os) throw IoError("short write on model file: " + path);
}

GruResidualModel GruResidualModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a residual model file: " + path);
  if (get_u32(is) != kVersion)
    throw IoError("unsupported model version: " + path);
  const std::uint32_t hidden = get_u32(is);
  const std::uint32_t window = get_u32(is);
  const std::uint32_t fdim = get_u32(is);
  const std::uint32_t odim = get_u32(is);
  if (fdim != kFeatureDim || odim != kOutputDim)
    throw IoError("model feature layout mismatch: " + path);
  GruResidualModel m(static_cast<int>(hidden), static_cast<int>(window));
  const GruLayout L(m.hidden_);
  m.theta_ = get_f32_array(is, L.total);
  m.feat_mean_ = get_f32_array(is, kFeatureDim);
  m.feat_std_ = get_f32_array(is, kFeatureDim);
  m.label_mean_ = get_f32_array(is, kOutputDim);
  m.label_std_ = get_f32_array(is, kOutputDim);
  if (!is) throw IoError("truncated model file: " + path);
  return m;
}

ResidualDataset generate_synthetic_dataset(const ResidualConfig& cfg,
                                           const BikebotParams& nominal,
                                           const ActuatorLimits& lim,
                                           const ControllerGains& gains,
                                           const EicConfig& eic,
                                           const RestitutionModel& e_nominal,
                                           std::uint64_t seed) {
  cfg.validate();
  nominal.validate();
  ResidualDataset data;
  data.window = cfg.window;
  data.features.reserve(static_cast<std::size_t>(cfg.num_examples));
  data.labels.reserve(static_cast<std::size_t>(cfg.num_examples));

  Rng master(seed);
  const double dt = 1e-3;
  const int ctrl_every =
      std::max(1, static_cast<int>(std::round(eic.dt_ctrl / dt)));
  const int approach_steps =
      static_cast<int>(std::round(0.5 / dt));  // 0.5 s run-up before impact

  const int max_attempts = 2 * cfg.num_examples;
  for (int attempt = 0;
       attempt < max_attempts &&
       static_cast<int>(data.size()) < cfg.num_examples;
       ++attempt) {
    Rng ex = master.fork(static_cast<std::uint64_t>(attempt));
    try {
      const double v_d = ex.uniform(0.4, 1.3);
      const double phi_b0 = deg2rad(ex.uniform(-3.0, 3.0));
      const double h_o = ex.uniform(0.01, 0.12);
      auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
      const double de = cfg.e_jitter;
      RestitutionModel e_true;
      e_true.e_x = clamp01(e_nominal.e_x + ex.uniform(-de, de));
      e_true.e_y = clamp01(e_nominal.e_y + ex.uniform(-de, de));
      e_true.e_z = clamp01(e_nominal.e_z + ex.uniform(-de, de));
      const double dp = cfg.param_jitter;
      BikebotParams truth = nominal;
      truth.m_b *= 1.0 + ex.uniform(-dp, dp);
      truth.h_G *= 1.0 + ex.uniform(-dp, dp);

      const ReferenceTrajectory ref =
          ReferenceTrajectory::line({0, 0}, 0.0, v_d);
      BikebotState s;
      s.v = v_d;
      s.varphi_b = phi_b0;
      EicController ctrl(nominal, lim, gains, eic);
      ActuatorCommand cmd{0.0, 0.0};

      std::vector<Eigen::VectorXd> rows;
      double prev_v = s.v;
      for (int k = 0; k < approach_steps; ++k) {
        if (k % ctrl_every == 0) {
          cmd = ctrl.tick(s, ref);
          const double psi_dot = yaw_rate(s, truth);
          const Eigen::Vector3d accel(
              (s.v - prev_v) / eic.dt_ctrl + cfg.sigma_a * ex.normal(),
              s.v * psi_dot + cfg.sigma_a * ex.normal(),
              -kGravity * std::cos(s.varphi_b) + cfg.sigma_a * ex.normal());
          const Eigen::Vector3d gyro(
              s.dot_varphi_b + cfg.sigma_omega * ex.normal(),
              cfg.sigma_omega * ex.normal(),
              psi_dot + cfg.sigma_omega * ex.normal());
          rows.push_back(make_features(accel, gyro,
                                       s.v + cfg.sigma_v * ex.normal(),
                                       s.varphi_b, s.phi, s.psi));
          prev_v = s.v;
        }
        s = step(s, cmd, RollTorquePort{}, dt, truth, lim);
      }

      // Impact at the end of the approach.
      Vector5d q;
      q << s.x, s.y, 0.0, s.psi, s.varphi_b;
      const double psi_dot_minus = yaw_rate(s, truth);
      Vector5d qdot_minus;
      qdot_minus << s.v * std::cos(s.psi), s.v * std::sin(s.psi), 0.0,
          psi_dot_minus, s.dot_varphi_b;
      const ImpactSolution true_sol =
          post_impact(q, qdot_minus, h_o, e_true, truth, s.phi);
      Vector5d qdot_true = true_sol.qdot_plus;
      // Unmodeled mount hop: extra vertical kick that scales with approach
      // speed and fades for taller steps.
      const ContactGeometry geo = contact_geometry(h_o, truth);
      qdot_true(2) += cfg.hop_gain * s.v * geo.L * (truth.R_w - h_o) /
                      (truth.R_w * truth.R_w);

      // Impact-tick observation: the window ends here, so the accelerations
      // carry the impact spike.
      const PlanarVelocities pl = project_to_planar(qdot_true, s.psi);
      const Eigen::Vector3d accel_imp(
          (pl.v - prev_v) / eic.dt_ctrl + cfg.sigma_a * ex.normal(),
          pl.v * pl.psi_dot + cfg.sigma_a * ex.normal(),
          -kGravity * std::cos(s.varphi_b) + qdot_true(2) / eic.dt_ctrl +
              cfg.sigma_a * ex.normal());
      const Eigen::Vector3d gyro_imp(
          qdot_true(4) + cfg.sigma_omega * ex.normal(),
          cfg.sigma_omega * ex.normal(),
          qdot_true(3) + cfg.sigma_omega * ex.normal());
      rows.push_back(make_features(accel_imp, gyro_imp,
                                   pl.v + cfg.sigma_v * ex.normal(),
                                   s.varphi_b, s.phi, s.psi));

      if (static_cast<int>(rows.size()) < cfg.window) continue;

      // Nominal reconstruction: measured pre-impact rates, catalog
      // restitution, nameplate parameters.
      const double v_meas = s.v + cfg.sigma_v * ex.normal();
      const double psi_dot_meas = psi_dot_minus + cfg.sigma_omega * ex.normal();
      const double rate_meas = s.dot_varphi_b + cfg.sigma_omega * ex.normal();
      Vector5d qdot_minus_meas;
      qdot_minus_meas << v_meas * std::cos(s.psi), v_meas * std::sin(s.psi),
          0.0, psi_dot_meas, rate_meas;
      const ImpactSolution nom_sol =
          post_impact(q, qdot_minus_meas, h_o, e_nominal, nominal, s.phi);

      Eigen::MatrixXd win(kFeatureDim, cfg.window);
      const std::size_t first = rows.size() - static_cast<std::size_t>(cfg.window);
      for (int t = 0; t < cfg.window; ++t)
        win.col(t) = rows[first + static_cast<std::size_t>(t)];
      data.features.push_back(std::move(win));
      data.labels.push_back(qdot_true - nom_sol.qdot_plus);
    } catch (const Error&) {
      // Rare divergent draw; skip it and keep the stream position moving.
      continue;
    }
  }
  if (static_cast<int>(data.size()) < cfg.num_examples)
    throw ValidationError("generate_synthetic_dataset: too many failed draws");
  return data;
}

namespace {

double dataset_rmse(const GruResidualModel& model, const ResidualDataset& data,
                    const std::vector<int>& idx, bool enhanced) {
  double acc = 0.0;
  std::size_t n = 0;
  for (int i : idx) {
    const std::size_t k = static_cast<std::size_t>(i);
    Vector5d err = data.labels[k];
    if (enhanced) err -= model.predict(data.features[k]);
    acc += err.squaredNorm();
    n += static_cast<std::size_t>(kOutputDim);
  }
  return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

TrainResult train_residual(const ResidualDataset& data,
                           const ResidualConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = static_cast<int>(data.size());
  if (n < 10) throw ValidationError("train_residual: need at least 10 examples");
  if (data.window != cfg.window)
    throw ValidationError("train_residual: dataset window mismatch");

  // Deterministic shuffled split.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform01() * (i + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(std::min(j, i))]);
  }
  const int n_val = std::max(1, static_cast<int>(std::round(cfg.val_frac * n)));
  const std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  const std::vector<int> train_idx(order.begin() + n_val, order.end());

  // Whitening statistics from the training split only.
  Eigen::VectorXd fmean = Eigen::VectorXd::Zero(kFeatureDim);
  Eigen::VectorXd fsq = Eigen::VectorXd::Zero(kFeatureDim);
  Vector5d lmean = Vector5d::Zero();
  Vector5d lsq = Vector5d::Zero();
  std::size_t ticks = 0;
  for (int i : train_idx) {
    const Eigen::MatrixXd& w = data.features[static_cast<std::size_t>(i)];
    fmean += w.rowwise().sum();
    fsq += w.array().square().matrix().rowwise().sum();
    ticks += static_cast<std::size_t>(w.cols());
    const Vector5d& y = data.labels[static_cast<std::size_t>(i)];
    lmean += y;
    lsq += y.array().square().matrix();
  }
  fmean /= static_cast<double>(ticks);
  Eigen::VectorXd fstd =
      (fsq / static_cast<double>(ticks) - fmean.array().square().matrix())
          .cwiseMax(1e-12)
          .cwiseSqrt()
          .cwiseMax(1e-6);
  lmean /= static_cast<double>(train_idx.size());
  Vector5d lstd = (lsq / static_cast<double>(train_idx.size()) -
                   lmean.array().square().matrix())
                      .cwiseMax(1e-12)
                      .cwiseSqrt()
                      .cwiseMax(1e-6);

  GruResidualModel model(cfg.hidden, cfg.window);
  model.set_normalization(fmean, fstd, lmean, lstd);

  // Uniform init scaled by fan-in; the output head starts at zero so the
  // untrained model predicts the label mean.
  {
    const GruLayout L(cfg.hidden);
    Eigen::VectorXd& th = model.raw_params();
    const double kw = 1.0 / std::sqrt(static_cast<double>(L.D));
    const double ku = 1.0 / std::sqrt(static_cast<double>(L.H));
    for (int i = L.wz; i < L.uz; ++i) th(i) = rng.uniform(-kw, kw);
    for (int i = L.uz; i < L.bz; ++i) th(i) = rng.uniform(-ku, ku);
    // Biases and the output head stay zero.
  }

  // Pre-normalized feature tensors and labels.
  std::vector<Eigen::MatrixXd> xn(static_cast<std::size_t>(n));
  std::vector<Vector5d> yn(static_cast<std::size_t>(n));
  const Eigen::VectorXd finv = fstd.cwiseInverse();
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    xn[k] = finv.asDiagonal() * (data.features[k].colwise() - fmean);
    yn[k] = (data.labels[k] - lmean).cwiseQuotient(lstd);
  }

  // Adam state.
  const GruLayout L(cfg.hidden);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(L.total);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(L.total);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step_no = 0;

  TrainResult result;
  result.nominal_rmse = dataset_rmse(model, data, val_idx, false);
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = model.raw_params();

  std::vector<int> sched = train_idx;
  GruResidualModel::ForwardCache cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = static_cast<int>(sched.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform01() * (i + 1));
      std::swap(sched[static_cast<std::size_t>(i)],
                sched[static_cast<std::size_t>(std::min(j, i))]);
    }
    for (std::size_t at = 0; at < sched.size(); at += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t bend = std::min(sched.size(), at + static_cast<std::size_t>(cfg.batch));
      const int B = static_cast<int>(bend - at);
      std::vector<Eigen::MatrixXd> xs(
          static_cast<std::size_t>(cfg.window),
          Eigen::MatrixXd(kFeatureDim, B));
      Eigen::MatrixXd Y(kOutputDim, B);
      for (int b = 0; b < B; ++b) {
        const std::size_t k = static_cast<std::size_t>(sched[at + static_cast<std::size_t>(b)]);
        for (int t = 0; t < cfg.window; ++t)
          xs[static_cast<std::size_t>(t)].col(b) = xn[k].col(t);
        Y.col(b) = yn[k];
      }
      const Eigen::MatrixXd yhat = model.forward_normalized(xs, &cache);
      const Eigen::MatrixXd dy =
          (yhat - Y) * (2.0 / static_cast<double>(kOutputDim * B));
      const Eigen::VectorXd grad = model.backward(cache, dy);

      ++step_no;
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.array().square().matrix();
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_no));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_no));
      model.raw_params() -=
          (cfg.lr / bc1) *
          (m.array() / ((v.array() / bc2).sqrt() + eps)).matrix();
    }
    result.epochs_run = epoch + 1;
    const double val = dataset_rmse(model, data, val_idx, true);
    if (val < best_val) {
      best_val = val;
      best_theta = model.raw_params();
    }
    if (val <= cfg.early_stop_ratio * result.nominal_rmse) break;
  }

  model.raw_params() = best_theta;
  result.val_rmse = dataset_rmse(model, data, val_idx, true);
  result.train_rmse = dataset_rmse(model, data, train_idx, true);
  result.model = model;
  return result;
}

}  // namespace bikecross
