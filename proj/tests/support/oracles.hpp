#pragma once

// Scalar-loop oracles shared by the unit tests and the acceptance gate. Each
// is a direct transcription written without the library's vectorized code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "noisylab/label_model.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/model.hpp"

namespace testing {

inline bool on(const std::vector<bool>& flags, Index c) { return flags.empty() || flags[static_cast<std::size_t>(c)]; }

// Straight transcriptions of the objectives, one scalar at a time.
inline double bce_oracle(const Eigen::MatrixXd& p, const BinaryMatrix& y, const ClassWeights& w, const BoolMatrix& m) {
  double s = 0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index c = 0; c < p.cols(); ++c)
      if (m(i, c) && !w.degenerate[static_cast<std::size_t>(c)])
        s += w.w_pos(c) * y(i, c) * std::log(p(i, c)) + w.w_neg(c) * (1 - y(i, c)) * std::log(1 - p(i, c));
  return -s;
}

inline double noise_oracle(const Eigen::MatrixXd& p, const BinaryMatrix& y, const ClassWeights& w, const NoiseProfile& n,
                    const BoolMatrix& m) {
  double s = 0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index c = 0; c < p.cols(); ++c) {
      if (!m(i, c) || w.degenerate[static_cast<std::size_t>(c)]) continue;
      const double wp = w.w_pos(c), wn = w.w_neg(c), lp = std::log(p(i, c)), lq = std::log(1 - p(i, c));
      const double fp = 1 - n.sensitivity(c), fn = 1 - n.specificity(c);
      const double lam = n.active[static_cast<std::size_t>(c)] ? n.lambda_noise : 0.0;
      s += wp * y(i, c) * lp + wn * (1 - y(i, c)) * lq + lam * (fp * wn * (1 - y(i, c)) * lp + fn * wp * y(i, c) * lq);
    }
  return -s;
}

inline double corr_oracle(const Eigen::MatrixXd& p, const BinaryMatrix& y, const ClassWeights& w, const Eigen::MatrixXd& cov,
                   const BoolMatrix& m, double scale, const std::vector<bool>& active) {
  const auto term = [&](Index i, Index c) {
    return w.w_pos(c) * y(i, c) * std::log(p(i, c)) + w.w_neg(c) * (1 - y(i, c)) * std::log(1 - p(i, c));
  };
  const auto used = [&](Index i, Index c) { return m(i, c) && !w.degenerate[static_cast<std::size_t>(c)]; };
  double s = 0;
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index n = 0; n < p.cols(); ++n) {
      if (used(i, n)) s += term(i, n);
    }
    for (Index n = 0; n < p.cols(); ++n) {
      if (!used(i, n) || !on(active, n)) continue;
      for (Index r = 0; r < p.cols(); ++r) {
        if (r != n && used(i, r) && on(active, r)) s += scale * cov(n, r) * term(i, r);
      }
    }
  }
  return -s;
}

inline double mse_oracle(const Eigen::MatrixXd& p, const Eigen::MatrixXd& s) {
  double total = 0;
  for (Index i = 0; i < p.rows(); ++i) {
    double row = 0;
    for (Index z = 0; z < p.cols(); ++z) row += (s(i, z) - p(i, z)) * (s(i, z) - p(i, z));
    total += row / static_cast<double>(p.cols());
  }
  return total;
}

inline double spatial_oracle(const Eigen::MatrixXd& p, const SpatialLabelMatrix& s, const ClassWeights& w) {
  double total = 0;
  for (Index i = 0; i < p.rows(); ++i) {
    bool any = false;
    for (Index c = 0; c < s.available.cols(); ++c) any = any || s.available(i, c);
    if (!any) continue;
    for (Index l = 0; l < SpatialLabelMatrix::kClasses; ++l) {
      if (w.degenerate[static_cast<std::size_t>(l)]) continue;
      total -= w.w_pos(l) * s.labels(i, l) * std::log(p(i, l)) + w.w_neg(l) * (1 - s.labels(i, l)) * std::log(1 - p(i, l));
    }
  }
  return total;
}


// Weights from counting owned entries; degenerate classes get 1 and 1.
struct WeightOracle {
  std::vector<double> w_pos, w_neg;
  std::vector<bool> degenerate;
};

inline WeightOracle class_weights_oracle(const BinaryMatrix& y, const BoolMatrix& mask) {
  WeightOracle o;
  for (Index c = 0; c < y.cols(); ++c) {
    double p = 0, n = 0;
    for (Index i = 0; i < y.rows(); ++i) {
      if (mask(i, c)) (y(i, c) ? p : n) += 1;
    }
    const bool deg = p == 0 || n == 0;
    o.degenerate.push_back(deg);
    o.w_pos.push_back(deg ? 1.0 : (p + n) / p);
    o.w_neg.push_back(deg ? 1.0 : (p + n) / n);
  }
  return o;
}

// Population covariance and Pearson correlation; zero-variance pairs give 0.
inline void moments_oracle(const BinaryMatrix& y, Eigen::MatrixXd& cov, Eigen::MatrixXd& pearson) {
  const Index f = y.rows(), d = y.cols();
  cov.resize(d, d);
  pearson.resize(d, d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      double ma = 0, mb = 0;
      for (Index i = 0; i < f; ++i) {
        ma += y(i, a);
        mb += y(i, b);
      }
      ma /= f;
      mb /= f;
      double c = 0, va = 0, vb = 0;
      for (Index i = 0; i < f; ++i) {
        c += (y(i, a) - ma) * (y(i, b) - mb);
        va += (y(i, a) - ma) * (y(i, a) - ma);
        vb += (y(i, b) - mb) * (y(i, b) - mb);
      }
      cov(a, b) = c / f;
      pearson(a, b) = (va == 0 || vb == 0) ? 0.0 : c / std::sqrt(va * vb);
    }
  }
}

// Probability a random positive outranks a random negative, ties counting half.
inline double pairwise_auc(const Eigen::VectorXd& s, const Eigen::VectorXi& y) {
  double wins = 0, pairs = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (y(i) != 1) continue;
    for (Index j = 0; j < s.size(); ++j) {
      if (y(j) != 0) continue;
      pairs += 1;
      wins += s(i) > s(j) ? 1.0 : (s(i) == s(j) ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

inline void sens_spec_oracle(const Eigen::VectorXi& pred, const Eigen::VectorXi& truth, double& sens, double& spec) {
  double tp = 0, p = 0, tn = 0, q = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (truth(i)) {
      p += 1;
      tp += pred(i);
    } else {
      q += 1;
      tn += 1 - pred(i);
    }
  }
  sens = tp / p;
  spec = tn / q;
}

// Finite differences run in long double: with 64-bit mantissas the round-off
// in (up - down) / 2h stays far below the smallest gradient entries checked.
using Extended = long double;
using MatrixXe = MatrixX<Extended>;

inline Predictions<Extended> extend(const Predictions<double>& p) {
  return {p.abnormality.cast<Extended>(), p.spatial.cast<Extended>(), p.segmentation.cast<Extended>()};
}

inline LossTargets<Extended> extend(const LossTargets<double>& t) {
  return {t.labels, t.mask, t.weights, t.noise, t.correlation, t.spatial, t.spatial_weights,
          t.segmentation.cast<Extended>()};
}

// Central differences of f over every entry of x; worst relative error against
// `grad`. f receives an extended-precision matrix.
template <typename F>
double fd_check(const Eigen::MatrixXd& at, const Eigen::MatrixXd& grad, F f, double h = 1e-6) {
  MatrixXe x = at.cast<Extended>();
  double worst = 0;
  for (Index k = 0; k < x.size(); ++k) {
    const Extended keep = x(k);
    x(k) = keep + h;
    const Extended up = f(x);
    x(k) = keep - h;
    const Extended down = f(x);
    x(k) = keep;
    worst = std::max(worst, rel_err(static_cast<double>((up - down) / (2 * static_cast<Extended>(h))), grad(k)));
  }
  return worst;
}

// Straight loops over a flat parameter vector laid out like `m.params`.
template <typename S>
std::vector<S> scalar_layer(const ModelState& m, const std::vector<S>& params, std::size_t idx,
                            const std::vector<S>& in, bool relu) {
  const LayerLayout& l = m.layout[idx];
  std::vector<S> out(static_cast<std::size_t>(l.rows));
  for (Index r = 0; r < l.rows; ++r) {
    S z = params[static_cast<std::size_t>(l.bias_offset() + r)];
    for (Index c = 0; c < l.cols; ++c) {
      z += params[static_cast<std::size_t>(l.offset + c * l.rows + r)] * in[static_cast<std::size_t>(c)];
    }
    out[static_cast<std::size_t>(r)] = relu ? std::max(S(0), z) : S(1) / (S(1) + std::exp(-z));
  }
  return out;
}

template <typename S>
Predictions<S> scalar_forward(const ModelState& m, const std::vector<S>& params, const Eigen::MatrixXd& x,
                              HeadSelection heads = {}) {
  Predictions<S> p;
  p.abnormality.resize(x.rows(), m.arch.classes);
  if (heads.spatial) p.spatial.resize(x.rows(), m.arch.spatial);
  if (heads.segmentation) p.segmentation.resize(x.rows(), m.arch.segmentation_outputs());
  const auto put = [](MatrixX<S>& out, Index i, const std::vector<S>& v) {
    for (Index c = 0; c < out.cols(); ++c) out(i, c) = v[static_cast<std::size_t>(c)];
  };
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<S> in(static_cast<std::size_t>(x.cols()));
    for (Index k = 0; k < x.cols(); ++k) {
      in[static_cast<std::size_t>(k)] = (S(x(i, k)) - S(m.input_shift(k))) / S(m.input_scale(k));
    }
    const std::vector<S> h = scalar_layer(m, params, kTrunk2, scalar_layer(m, params, kTrunk1, in, true), true);
    put(p.abnormality, i, scalar_layer(m, params, kAbnormalityHead, h, false));
    if (heads.spatial) put(p.spatial, i, scalar_layer(m, params, kSpatialHead, h, false));
    if (heads.segmentation) put(p.segmentation, i, scalar_layer(m, params, kDecoder, h, false));
  }
  return p;
}

template <typename S>
std::vector<S> params_as(const ModelState& m) {
  std::vector<S> out(static_cast<std::size_t>(m.params.size()));
  for (Index k = 0; k < m.params.size(); ++k) out[static_cast<std::size_t>(k)] = S(m.params(k));
  return out;
}

inline Architecture tiny(Index inputs, Index hidden, Index classes, Index mask_side) {
  Architecture a;
  a.inputs = inputs;
  a.hidden1 = a.hidden2 = hidden;
  a.classes = classes;
  a.mask_side = mask_side;
  return a;
}

inline Eigen::MatrixXd random_features(Gen& g, Index f, Index n) {
  Eigen::MatrixXd x(f, n);
  for (Index k = 0; k < x.size(); ++k) x(k) = g.uniform();
  return x;
}

// Largest relative error between backprop and central differences of an
// independent extended-precision forward pass.
inline double network_gradient_error(const ModelState& m, const Eigen::MatrixXd& x, const LossTargets<double>& t,
                                     const LossConfig& cfg) {
  const ForwardCache cache = forward_cached(m, x, {cfg.loc, cfg.seg});
  const Eigen::VectorXd analytic = backward(m, cache, composite_loss(cache.outputs, t, cfg));
  const LossTargets<Extended> te = extend(t);
  std::vector<Extended> params = params_as<Extended>(m);
  const auto loss_at = [&] { return composite_loss(scalar_forward(m, params, x, {cfg.loc, cfg.seg}), te, cfg).value; };
  double worst = 0;
  const Extended h = 1e-6;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Extended keep = params[k];
    params[k] = keep + h;
    const Extended up = loss_at();
    params[k] = keep - h;
    const Extended down = loss_at();
    params[k] = keep;
    worst = std::max(worst, rel_err(analytic(static_cast<Index>(k)), static_cast<double>((up - down) / (2 * h))));
  }
  return worst;
}

}  // namespace testing
