#include "polyflow/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "polyflow/rng.hpp"

namespace polyflow::nn {

bool InputScaler::is_identity() const {
  if (shift.size() == 0) return true;
  return shift.isZero(0.0) && (scale.array() == 1.0).all();
}

Vec InputScaler::apply(const Vec& x) const {
  if (shift.size() == 0) return x;
  return (x - shift).cwiseQuotient(scale);
}

InputScaler InputScaler::identity(int dim) {
  InputScaler s;
  s.shift = Vec::Zero(dim);
  s.scale = Vec::Ones(dim);
  return s;
}

int MlpParams::total_neurons() const {
  int n = 0;
  for (const auto& m : w) n += static_cast<int>(m.rows());
  return n;
}

void MlpParams::check_shapes() const {
  if (w.size() != b.size()) throw std::invalid_argument("mlp: weight/bias layer count mismatch");
  for (size_t l = 0; l < w.size(); ++l) {
    if (w[l].rows() != b[l].size()) throw std::invalid_argument("mlp: bias length mismatch");
    if (l > 0 && w[l].cols() != w[l - 1].rows())
      throw std::invalid_argument("mlp: layer width chain broken");
  }
  const int last = w.empty() ? input_dim() : static_cast<int>(w.back().rows());
  if (w_out.size() != last) throw std::invalid_argument("mlp: output weight length mismatch");
  if (scaler.shift.size() != 0 &&
      (scaler.shift.size() != input_dim() || scaler.scale.size() != input_dim()))
    throw std::invalid_argument("mlp: scaler dimension mismatch");
}

ForwardTrace forward_trace(const MlpParams& p, const Vec& x) {
  if (x.size() != p.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
  ForwardTrace t;
  t.x_std = p.scaler.apply(x);
  const Vec* prev = &t.x_std;
  t.z.reserve(p.w.size());
  t.s.reserve(p.w.size());
  for (size_t l = 0; l < p.w.size(); ++l) {
    t.z.push_back(p.w[l] * (*prev) + p.b[l]);
    t.s.push_back(t.z.back().cwiseMax(0.0));
    prev = &t.s.back();
  }
  t.output = p.w_out.dot(*prev) + p.b_out;
  return t;
}

double forward(const MlpParams& p, const Vec& x) { return forward_trace(p, x).output; }

namespace {

struct Grads {
  std::vector<Mat> w;
  std::vector<Vec> b;
  Vec w_out;
  double b_out = 0.0;

  explicit Grads(const MlpParams& p) {
    for (const auto& m : p.w) w.push_back(Mat::Zero(m.rows(), m.cols()));
    for (const auto& v : p.b) b.push_back(Vec::Zero(v.size()));
    w_out = Vec::Zero(p.w_out.size());
  }
  void zero() {
    for (auto& m : w) m.setZero();
    for (auto& v : b) v.setZero();
    w_out.setZero();
    b_out = 0.0;
  }
};

// Accumulates d(out)/d(params) scaled by `dout` for one already-traced input.
void backprop(const MlpParams& p, const ForwardTrace& t, double dout, Grads& g) {
  const int L = p.hidden_layers();
  const Vec& top = L > 0 ? t.s.back() : t.x_std;
  g.w_out += dout * top;
  g.b_out += dout;
  if (L == 0) return;
  Vec delta = dout * p.w_out;
  for (int l = L - 1; l >= 0; --l) {
    const Vec& z = t.z[static_cast<size_t>(l)];
    for (int k = 0; k < delta.size(); ++k)
      if (z(k) <= 0.0) delta(k) = 0.0;
    const Vec& below = l > 0 ? t.s[static_cast<size_t>(l - 1)] : t.x_std;
    g.w[static_cast<size_t>(l)] += delta * below.transpose();
    g.b[static_cast<size_t>(l)] += delta;
    if (l > 0) delta = p.w[static_cast<size_t>(l)].transpose() * delta;
  }
}

double mse(const MlpParams& p, const std::vector<Vec>& xs, const std::vector<double>& ys,
           const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  double acc = 0.0;
  for (int i : idx) {
    const double e = forward(p, xs[static_cast<size_t>(i)]) - ys[static_cast<size_t>(i)];
    acc += e * e;
  }
  return acc / static_cast<double>(idx.size());
}

MlpParams init_params(int input_dim, const std::vector<int>& hidden_sizes, Rng& rng) {
  MlpParams p;
  int fan_in = input_dim;
  for (int width : hidden_sizes) {
    if (width < 1) throw std::invalid_argument("train: hidden layer width must be positive");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + width));
    Mat w(width, fan_in);
    for (int r = 0; r < width; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-a, a);
    p.w.push_back(std::move(w));
    p.b.push_back(Vec::Zero(width));
    fan_in = width;
  }
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
  p.w_out = Vec(fan_in);
  for (int r = 0; r < fan_in; ++r) p.w_out(r) = rng.uniform(-a, a);
  p.b_out = 0.0;
  p.scaler = InputScaler::identity(input_dim);
  return p;
}

}  // namespace

TrainResult train(const std::vector<Vec>& xs, const std::vector<double>& ys,
                  const std::vector<int>& hidden_sizes, const TrainConfig& cfg) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("train: bad data");
  if (cfg.batch < 1 || cfg.learning_rate <= 0.0 || cfg.epochs < 0)
    throw std::invalid_argument("train: bad hyperparameters");
  const int n = static_cast<int>(xs.size());
  const int d = static_cast<int>(xs.front().size());

  Rng rng(cfg.seed);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int n_val = std::min(n - 1, static_cast<int>(std::llround(cfg.validation_fraction * n)));
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());

  MlpParams p = init_params(d, hidden_sizes, rng);
  // Zero-mean, unit-range scaling from the training split only.
  p.scaler.shift = Vec::Zero(d);
  Vec lo = xs[static_cast<size_t>(train_idx.front())];
  Vec hi = lo;
  for (int i : train_idx) {
    p.scaler.shift += xs[static_cast<size_t>(i)];
    lo = lo.cwiseMin(xs[static_cast<size_t>(i)]);
    hi = hi.cwiseMax(xs[static_cast<size_t>(i)]);
  }
  p.scaler.shift /= static_cast<double>(train_idx.size());
  p.scaler.scale = (hi - lo).cwiseMax(1e-12);
  for (int j = 0; j < d; ++j)
    if (hi(j) - lo(j) <= 0.0) p.scaler.scale(j) = 1.0;

  TrainResult res;
  res.initial_val_mse = mse(p, xs, ys, val_idx.empty() ? train_idx : val_idx);
  res.best_val_mse = res.initial_val_mse;
  res.params = p;

  Grads g(p), m1(p), m2(p);
  m1.zero();
  m2.zero();
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    long seen = 0;
    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch));
      const double bs = static_cast<double>(end - start);
      g.zero();
      double batch_loss = 0.0;
      for (size_t k = start; k < end; ++k) {
        const int i = train_idx[k];
        const ForwardTrace t = forward_trace(p, xs[static_cast<size_t>(i)]);
        const double err = t.output - ys[static_cast<size_t>(i)];
        batch_loss += err * err;
        backprop(p, t, 2.0 * err / bs, g);
      }
      batch_loss /= bs;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: loss diverged to NaN/inf at epoch " +
                                 std::to_string(epoch));
      epoch_loss += batch_loss * bs;
      seen += static_cast<long>(bs);

      ++step;
      const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto adam = [&](auto& param, auto& grad, auto& mm, auto& vv) {
        mm = beta1 * mm + (1.0 - beta1) * grad;
        vv = beta2 * vv + (1.0 - beta2) * grad.cwiseProduct(grad);
        param -= cfg.learning_rate *
                 (mm / corr1).cwiseQuotient(((vv / corr2).cwiseSqrt().array() + adam_eps).matrix());
      };
      for (size_t l = 0; l < p.w.size(); ++l) {
        // Matrices updated through their flattened views.
        auto pw = p.w[l].reshaped();
        auto gw = g.w[l].reshaped();
        auto mw = m1.w[l].reshaped();
        auto vw = m2.w[l].reshaped();
        for (int k = 0; k < pw.size(); ++k) {
          mw(k) = beta1 * mw(k) + (1.0 - beta1) * gw(k);
          vw(k) = beta2 * vw(k) + (1.0 - beta2) * gw(k) * gw(k);
          pw(k) -= cfg.learning_rate * (mw(k) / corr1) / (std::sqrt(vw(k) / corr2) + adam_eps);
        }
        adam(p.b[l], g.b[l], m1.b[l], m2.b[l]);
      }
      adam(p.w_out, g.w_out, m1.w_out, m2.w_out);
      m1.b_out = beta1 * m1.b_out + (1.0 - beta1) * g.b_out;
      m2.b_out = beta2 * m2.b_out + (1.0 - beta2) * g.b_out * g.b_out;
      p.b_out -= cfg.learning_rate * (m1.b_out / corr1) / (std::sqrt(m2.b_out / corr2) + adam_eps);
    }
    res.trace.push_back(seen > 0 ? epoch_loss / static_cast<double>(seen) : 0.0);

    const double val = mse(p, xs, ys, val_idx.empty() ? train_idx : val_idx);
    if (val < res.best_val_mse) {
      res.best_val_mse = val;
      res.params = p;
    }
  }
  return res;
}

double gradient_check(const MlpParams& p, const Vec& x, double eps, bool* kink_warning) {
  ForwardTrace t = forward_trace(p, x);
  bool kink = false;
  for (const Vec& z : t.z)
    if ((z.array().abs() <= 10.0 * eps).any()) kink = true;
  if (kink_warning) *kink_warning = kink;

  Grads g(p);
  g.zero();
  backprop(p, t, 1.0, g);

  MlpParams q = p;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + eps;
    const double up = forward(q, x);
    param = keep - eps;
    const double dn = forward(q, x);
    param = keep;
    const double numeric = (up - dn) / (2.0 * eps);
    const double rel = std::abs(analytic - numeric) /
                       std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, rel);
  };
  for (size_t l = 0; l < q.w.size(); ++l) {
    for (int r = 0; r < q.w[l].rows(); ++r)
      for (int c = 0; c < q.w[l].cols(); ++c) probe(q.w[l](r, c), g.w[l](r, c));
    for (int r = 0; r < q.b[l].size(); ++r) probe(q.b[l](r), g.b[l](r));
  }
  for (int r = 0; r < q.w_out.size(); ++r) probe(q.w_out(r), g.w_out(r));
  probe(q.b_out, g.b_out);
  return worst;
}

}  // namespace polyflow::nn
