#include "noisylab/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "noisylab/error.hpp"

namespace noisylab {
namespace {

Eigen::MatrixXd affine(const Eigen::MatrixXd& in, const ModelState& m, std::size_t layer) {
  Eigen::MatrixXd out = in * m.weight(layer).transpose();
  out.rowwise() += m.bias(layer).transpose();
  return out;
}

Eigen::MatrixXd sigmoid_of(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

void check_finite(const Eigen::MatrixXd& m, const char* what, const ModelState& model) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "non-finite " << what << " activations (parameter |max| = " << model.params.cwiseAbs().maxCoeff()
       << ", finite parameters: " << (model.params.allFinite() ? "yes" : "no") << ", step " << model.step_count
       << ")";
    throw NumericalError(os.str());
  }
}

// Gradient through a sigmoid head: dL/dz = dL/dp * p (1 - p).
Eigen::MatrixXd through_sigmoid(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& p) {
  return (grad.array() * p.array() * (1.0 - p.array())).matrix();
}

void accumulate_layer(Eigen::VectorXd& grad, const LayerLayout& l, const Eigen::MatrixXd& delta,
                      const Eigen::MatrixXd& input) {
  Eigen::Map<Eigen::MatrixXd>(grad.data() + l.offset, l.rows, l.cols).noalias() += delta.transpose() * input;
  Eigen::Map<Eigen::VectorXd>(grad.data() + l.bias_offset(), l.rows) += delta.colwise().sum().transpose();
}

}  // namespace

std::vector<LayerLayout> make_layout(const Architecture& arch) {
  if (arch.inputs < 1 || arch.hidden1 < 1 || arch.hidden2 < 1 || arch.classes < 1 || arch.spatial < 1 ||
      arch.mask_side < 1) {
    throw UsageError("architecture sizes must be positive");
  }
  std::vector<LayerLayout> layout = {
      {"trunk1", arch.hidden1, arch.inputs, 0},
      {"trunk2", arch.hidden2, arch.hidden1, 0},
      {"abnormality", arch.classes, arch.hidden2, 0},
      {"spatial", arch.spatial, arch.hidden2, 0},
      {"decoder", arch.segmentation_outputs(), arch.hidden2, 0},
  };
  Index offset = 0;
  for (auto& l : layout) {
    l.offset = offset;
    offset = l.end();
  }
  return layout;
}

ModelState ModelState::zeros(const Architecture& arch) {
  ModelState m;
  m.arch = arch;
  m.layout = make_layout(arch);
  const Index n = m.layout.back().end();
  m.params = Eigen::VectorXd::Zero(n);
  m.adam_m = Eigen::VectorXd::Zero(n);
  m.adam_v = Eigen::VectorXd::Zero(n);
  m.input_shift = Eigen::VectorXd::Zero(arch.inputs);
  m.input_scale = Eigen::VectorXd::Ones(arch.inputs);
  return m;
}

ModelState ModelState::initialize(const Architecture& arch, std::uint64_t seed) {
  ModelState m = zeros(arch);
  std::mt19937_64 rng(seed);
  for (const auto& l : m.layout) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index k = 0; k < l.weight_count(); ++k) {
      m.params(l.offset + k) = dist(rng);
    }
  }
  return m;
}

Eigen::Map<const Eigen::MatrixXd> ModelState::weight(std::size_t layer) const {
  const auto& l = layout[layer];
  return {params.data() + l.offset, l.rows, l.cols};
}

Eigen::Map<Eigen::MatrixXd> ModelState::weight(std::size_t layer) {
  const auto& l = layout[layer];
  return {params.data() + l.offset, l.rows, l.cols};
}

Eigen::Map<const Eigen::VectorXd> ModelState::bias(std::size_t layer) const {
  const auto& l = layout[layer];
  return {params.data() + l.bias_offset(), l.rows};
}

Eigen::Map<Eigen::VectorXd> ModelState::bias(std::size_t layer) {
  const auto& l = layout[layer];
  return {params.data() + l.bias_offset(), l.rows};
}

ForwardCache forward_cached(const ModelState& model, const Eigen::MatrixXd& features, HeadSelection heads) {
  if (features.cols() != model.arch.inputs) {
    throw DataError("feature width " + std::to_string(features.cols()) + " does not match model inputs " +
                    std::to_string(model.arch.inputs));
  }
  ForwardCache c;
  c.input = ((features.rowwise() - model.input_shift.transpose()).array().rowwise() /
             model.input_scale.transpose().array())
                .matrix();
  c.pre1 = affine(c.input, model, kTrunk1);
  c.hidden1 = c.pre1.cwiseMax(0.0);
  c.pre2 = affine(c.hidden1, model, kTrunk2);
  c.hidden2 = c.pre2.cwiseMax(0.0);
  c.outputs.abnormality = sigmoid_of(affine(c.hidden2, model, kAbnormalityHead));
  check_finite(c.outputs.abnormality, "abnormality", model);
  if (heads.spatial) {
    c.outputs.spatial = sigmoid_of(affine(c.hidden2, model, kSpatialHead));
    check_finite(c.outputs.spatial, "spatial", model);
  }
  if (heads.segmentation) {
    c.outputs.segmentation = sigmoid_of(affine(c.hidden2, model, kDecoder));
    check_finite(c.outputs.segmentation, "segmentation", model);
  }
  return c;
}

Predictions<double> forward(const ModelState& model, const Eigen::MatrixXd& features, HeadSelection heads) {
  return forward_cached(model, features, heads).outputs;
}

Eigen::VectorXd backward(const ModelState& model, const ForwardCache& cache, const LossResult<double>& loss) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.params.size());
  const auto& L = model.layout;
  Eigen::MatrixXd d_hidden2 = Eigen::MatrixXd::Zero(cache.hidden2.rows(), cache.hidden2.cols());

  auto head = [&](std::size_t layer, const Eigen::MatrixXd& g, const Eigen::MatrixXd& p) {
    if (g.size() == 0) {
      return;
    }
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw DataError("loss gradient shape does not match head '" + L[layer].name + "'");
    }
    const Eigen::MatrixXd delta = through_sigmoid(g, p);
    accumulate_layer(grad, L[layer], delta, cache.hidden2);
    d_hidden2.noalias() += delta * model.weight(layer);
  };
  head(kAbnormalityHead, loss.grad_abnormality, cache.outputs.abnormality);
  head(kSpatialHead, loss.grad_spatial, cache.outputs.spatial);
  head(kDecoder, loss.grad_segmentation, cache.outputs.segmentation);

  const Eigen::MatrixXd d_pre2 = (d_hidden2.array() * (cache.pre2.array() > 0.0).cast<double>()).matrix();
  accumulate_layer(grad, L[kTrunk2], d_pre2, cache.hidden1);
  const Eigen::MatrixXd d_hidden1 = d_pre2 * model.weight(kTrunk2);
  const Eigen::MatrixXd d_pre1 = (d_hidden1.array() * (cache.pre1.array() > 0.0).cast<double>()).matrix();
  accumulate_layer(grad, L[kTrunk1], d_pre1, cache.input);
  return grad;
}

void adam_step(ModelState& model, const Eigen::VectorXd& gradient, const AdamConfig& config) {
  if (gradient.size() != model.params.size()) {
    throw DataError("gradient length does not match parameters");
  }
  if (!gradient.allFinite()) {
    throw NumericalError("non-finite gradient at step " + std::to_string(model.step_count));
  }
  model.step_count += 1;
  const double t = static_cast<double>(model.step_count);
  model.adam_m = config.beta1 * model.adam_m + (1.0 - config.beta1) * gradient;
  model.adam_v = config.beta2 * model.adam_v + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const Eigen::ArrayXd update =
      config.learning_rate * (model.adam_m.array() / c1) / ((model.adam_v.array() / c2).sqrt() + config.epsilon);
  if (!update.allFinite()) {
    throw NumericalError("non-finite Adam update at step " + std::to_string(model.step_count));
  }
  model.params.array() -= update;
}

}  // namespace noisylab
