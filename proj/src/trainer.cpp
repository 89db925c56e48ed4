#include "noisylab/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "noisylab/config_file.hpp"
#include "noisylab/error.hpp"
#include "noisylab/metrics.hpp"
#include "noisylab/special.hpp"

namespace noisylab {

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0) || !(adam.epsilon > 0.0)) {
    throw UsageError("learning rate and epsilon must be positive");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1 || max_epochs < 1 || hidden < 1) {
    throw UsageError("batch size, epoch count and hidden width must be positive");
  }
  if (!(plateau_factor >= 1.0) || plateau_patience < 1 || early_stop_patience < 1) {
    throw UsageError("plateau factor must be >= 1 and patience values positive");
  }
  if (!(loss.alpha_seg >= 0.0) || !(loss.alpha_loc >= 0.0)) {
    throw UsageError("loss weights must be nonnegative");
  }
}

namespace {

template <typename M>
M take_rows(const M& m, const std::vector<Index>& rows) {
  if (m.size() == 0) {
    return m;
  }
  M out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Index>(k)) = m.row(rows[k]);
  }
  return out;
}

HeadSelection heads_for(const LossConfig& loss) { return {loss.loc, loss.seg}; }

Index mask_side_for(const Eigen::MatrixXd& segmentation) {
  if (segmentation.cols() == 0) {
    return 16;
  }
  const auto side = static_cast<Index>(std::lround(std::sqrt(segmentation.cols() / 2.0)));
  if (2 * side * side != segmentation.cols()) {
    throw DataError("segmentation targets must hold two square channels");
  }
  return side;
}

}  // namespace

TrainingSplit TrainingSplit::select_rows(const std::vector<Index>& rows) const {
  TrainingSplit out;
  out.features = take_rows(features, rows);
  out.labels = labels.select_rows(rows);
  if (clean) {
    out.clean = take_rows(*clean, rows);
  }
  out.spatial.labels = take_rows(spatial.labels, rows);
  out.spatial.available = take_rows(spatial.available, rows);
  out.segmentation = take_rows(segmentation, rows);
  return out;
}

LossTargets<double> make_targets(const TrainingSplit& split, const std::vector<Index>& rows,
                                 const TrainingPriors& priors) {
  LossTargets<double> t;
  t.labels = take_rows(split.labels.labels, rows);
  t.mask = take_rows(split.labels.ownership_mask(), rows);
  t.weights = priors.weights;
  t.noise = priors.noise;
  t.correlation = priors.correlation;
  t.spatial.labels = take_rows(split.spatial.labels, rows);
  t.spatial.available = take_rows(split.spatial.available, rows);
  t.spatial_weights = priors.spatial_weights;
  t.segmentation = take_rows(split.segmentation, rows);
  return t;
}

double evaluate_loss(const ModelState& model, const TrainingSplit& split, const TrainingPriors& priors,
                     const LossConfig& loss) {
  std::vector<Index> all(static_cast<std::size_t>(split.samples()));
  std::iota(all.begin(), all.end(), Index{0});
  const Predictions<double> pred = forward(model, split.features, heads_for(loss));
  auto result = composite_loss(pred, make_targets(split, all, priors), loss);
  return result.value / static_cast<double>(split.samples());
}

Eigen::VectorXd per_class_auc(const Eigen::MatrixXd& scores, const BinaryMatrix& labels, const BoolMatrix* mask) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw DataError("scores and labels differ in shape");
  }
  Eigen::VectorXd out(labels.cols());
  for (Index c = 0; c < labels.cols(); ++c) {
    std::vector<Index> rows;
    for (Index i = 0; i < labels.rows(); ++i) {
      if (!mask || (*mask)(i, c)) {
        rows.push_back(i);
      }
    }
    Eigen::VectorXd s(static_cast<Index>(rows.size()));
    Eigen::VectorXi y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      s(static_cast<Index>(k)) = scores(rows[k], c);
      y(static_cast<Index>(k)) = labels(rows[k], c);
    }
    const Index pos = y.sum();
    out(c) = (pos == 0 || pos == y.size()) ? std::numeric_limits<double>::quiet_NaN() : auc(s, y).auc;
  }
  return out;
}

TrainResult train(const TrainingSplit& train_split, const TrainingSplit& validation, const TrainingPriors& priors,
                  const TrainConfig& config) {
  config.validate();
  if (train_split.samples() == 0 || validation.samples() == 0) {
    throw DataError("training and validation splits must be non-empty");
  }
  if (train_split.features.cols() != validation.features.cols()) {
    throw DataError("training and validation features differ in width");
  }
  if (config.batch_size > train_split.samples()) {
    throw UsageError("batch_size exceeds the training split");
  }
  Architecture arch;
  arch.inputs = train_split.features.cols();
  arch.hidden1 = config.hidden;
  arch.hidden2 = config.hidden;
  arch.classes = train_split.labels.classes();
  arch.mask_side = mask_side_for(train_split.segmentation);

  TrainResult result;
  result.model = ModelState::initialize(arch, derive_seed(config.seed, 1));
  if (config.standardize_inputs) {
    const Eigen::MatrixXd& x = train_split.features;
    result.model.input_shift = x.colwise().mean().transpose();
    const Eigen::ArrayXd sd =
        ((x.rowwise() - result.model.input_shift.transpose()).array().square().colwise().mean()).sqrt().transpose();
    // Constant columns pass through centred.
    result.model.input_scale = (sd > 1e-12).select(sd, 1.0).matrix();
  }
  ModelState model = result.model;
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 2));

  const HeadSelection heads = heads_for(config.loss);
  const BoolMatrix val_mask = validation.labels.ownership_mask();
  AdamConfig adam = config.adam;
  double best = std::numeric_limits<double>::infinity();
  int since_plateau = 0;
  int since_best = 0;

  std::vector<Index> order(static_cast<std::size_t>(train_split.samples()));
  std::iota(order.begin(), order.end(), Index{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.learning_rate = adam.learning_rate;
    try {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      double total = 0.0;
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
        const Eigen::MatrixXd x = take_rows(train_split.features, rows);
        const ForwardCache cache = forward_cached(model, x, heads);
        auto loss = composite_loss(cache.outputs, make_targets(train_split, rows, priors), config.loss);
        total += loss.value;
        loss.divide_by(static_cast<double>(rows.size()));
        adam_step(model, backward(model, cache, loss), adam);
      }
      entry.train_loss = total / static_cast<double>(train_split.samples());

      const Predictions<double> pred = forward(model, validation.features, heads);
      std::vector<Index> all(static_cast<std::size_t>(validation.samples()));
      std::iota(all.begin(), all.end(), Index{0});
      entry.val_loss = composite_loss(pred, make_targets(validation, all, priors), config.loss).value /
                       static_cast<double>(validation.samples());
      entry.val_auc_noisy = per_class_auc(pred.abnormality, validation.labels.labels, &val_mask);
      entry.val_auc_clean = validation.clean ? per_class_auc(pred.abnormality, *validation.clean, &val_mask)
                                             : Eigen::VectorXd::Constant(arch.classes, std::nan(""));
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    result.log.push_back(entry);
    if (!std::isfinite(entry.val_loss) || !std::isfinite(entry.train_loss)) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": non-finite loss";
      break;
    }
    if (entry.val_loss < best) {
      best = entry.val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_plateau = 0;
      since_best = 0;
      continue;
    }
    ++since_best;
    if (++since_plateau >= config.plateau_patience) {
      adam.learning_rate /= config.plateau_factor;
      since_plateau = 0;
    }
    if (since_best >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

Eigen::MatrixXd image_features(const std::vector<GrayImage<double>>& images, const FeatureConfig& config) {
  if (images.empty()) {
    return {};
  }
  const int f = config.downsample;
  if (f < 1) {
    throw UsageError("downsample factor must be positive");
  }
  const Index rows = images.front().rows();
  const Index cols = images.front().cols();
  if (rows % f || cols % f) {
    throw DataError("image size must be a multiple of the downsample factor");
  }
  const Index out_rows = rows / f;
  const Index out_cols = cols / f;
  Eigen::MatrixXd features(static_cast<Index>(images.size()), out_rows * out_cols);
  for (std::size_t k = 0; k < images.size(); ++k) {
    const GrayImage<double>& img = images[k];
    if (img.rows() != rows || img.cols() != cols) {
      throw DataError("images differ in size");
    }
    const GrayImage<double> scaled = config.normalize ? normalize(img, config.window) : GrayImage<double>(img / config.raw_scale);
    for (Index y = 0; y < out_rows; ++y) {
      for (Index x = 0; x < out_cols; ++x) {
        features(static_cast<Index>(k), y * out_cols + x) = scaled.block(y * f, x * f, f, f).mean();
      }
    }
  }
  return features;
}

Eigen::MatrixXd segmentation_targets(const std::vector<Eigen::ArrayXXi>& lungs,
                                     const std::vector<Eigen::ArrayXXi>& hearts, Index mask_side) {
  if (lungs.size() != hearts.size()) {
    throw DataError("lung and heart mask counts differ");
  }
  const Index per_channel = mask_side * mask_side;
  Eigen::MatrixXd out(static_cast<Index>(lungs.size()), 2 * per_channel);
  for (std::size_t k = 0; k < lungs.size(); ++k) {
    const Eigen::ArrayXXi* channels[2] = {&lungs[k], &hearts[k]};
    for (int ch = 0; ch < 2; ++ch) {
      const Eigen::ArrayXXi& m = *channels[ch];
      if (m.rows() % mask_side || m.cols() != m.rows()) {
        throw DataError("masks must be square with a side divisible by the target side");
      }
      const Index f = m.rows() / mask_side;
      for (Index y = 0; y < mask_side; ++y) {
        for (Index x = 0; x < mask_side; ++x) {
          out(static_cast<Index>(k), ch * per_channel + y * mask_side + x) =
              m.block(y * f, x * f, f, f).cast<double>().mean();
        }
      }
    }
  }
  return out;
}

Eigen::ArrayXXd upsample_bilinear(const Eigen::ArrayXXd& image, Index rows, Index cols) {
  if (image.size() == 0 || rows < 1 || cols < 1) {
    throw UsageError("bilinear resampling needs non-empty input and output");
  }
  const auto axis = [](Index dst, Index n_out, Index n_in, Index& i0, Index& i1, double& t) {
    const double src = (dst + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    const double clamped = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
    i0 = static_cast<Index>(std::floor(clamped));
    i1 = std::min(i0 + 1, n_in - 1);
    t = clamped - static_cast<double>(i0);
  };
  Eigen::ArrayXXd out(rows, cols);
  for (Index y = 0; y < rows; ++y) {
    Index y0, y1;
    double ty;
    axis(y, rows, image.rows(), y0, y1, ty);
    for (Index x = 0; x < cols; ++x) {
      Index x0, x1;
      double tx;
      axis(x, cols, image.cols(), x0, x1, tx);
      const double top = (1 - tx) * image(y0, x0) + tx * image(y0, x1);
      const double bottom = (1 - tx) * image(y1, x0) + tx * image(y1, x1);
      out(y, x) = (1 - ty) * top + ty * bottom;
    }
  }
  return out;
}

void write_training_log(std::ostream& os, const std::vector<EpochLog>& log,
                        const std::vector<std::string>& class_names) {
  os << "epoch,learning_rate,train_loss,val_loss";
  for (const auto& name : class_names) {
    os << ",auc_clean:" << name;
  }
  for (const auto& name : class_names) {
    os << ",auc_noisy:" << name;
  }
  os << '\n';
  const auto cell = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
  for (const EpochLog& e : log) {
    os << e.epoch << ',' << cell(e.learning_rate) << ',' << cell(e.train_loss) << ',' << cell(e.val_loss);
    for (Index c = 0; c < static_cast<Index>(class_names.size()); ++c) {
      os << ',' << cell(c < e.val_auc_clean.size() ? e.val_auc_clean(c) : std::nan(""));
    }
    for (Index c = 0; c < static_cast<Index>(class_names.size()); ++c) {
      os << ',' << cell(c < e.val_auc_noisy.size() ? e.val_auc_noisy(c) : std::nan(""));
    }
    os << '\n';
  }
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log,
                        const std::vector<std::string>& class_names) {
  std::ofstream os(path);
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
  write_training_log(os, log, class_names);
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int k = 0; k < 8; ++k) {
    bytes[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  }
  os.write(bytes, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char bytes[4];
  for (int k = 0; k < 4; ++k) {
    bytes[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  }
  os.write(bytes, 4);
}

void put_i64(std::ostream& os, std::int64_t v) { put_u64(os, static_cast<std::uint64_t>(v)); }

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (Index k = 0; k < v.size(); ++k) {
    put_u64(os, std::bit_cast<std::uint64_t>(v(k)));
  }
}

struct Reader {
  std::ifstream& is;
  std::string source;

  void bytes(char* out, std::size_t n) {
    is.read(out, static_cast<std::streamsize>(n));
    if (!is) {
      throw DataError(source + ": truncated checkpoint");
    }
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) {
      v = (v << 8) | b[k];
    }
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) {
      v = (v << 8) | b[k];
    }
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  Eigen::VectorXd vector(Index n) {
    Eigen::VectorXd v(n);
    for (Index k = 0; k < n; ++k) {
      v(k) = std::bit_cast<double>(u64());
    }
    return v;
  }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(os, kCheckpointVersion);
  const Architecture& a = model.arch;
  for (Index v : {a.inputs, a.hidden1, a.hidden2, a.classes, a.spatial, a.mask_side}) {
    put_i64(os, v);
  }
  put_u32(os, static_cast<std::uint32_t>(model.layout.size()));
  for (const LayerLayout& l : model.layout) {
    put_u32(os, static_cast<std::uint32_t>(l.name.size()));
    os.write(l.name.data(), static_cast<std::streamsize>(l.name.size()));
    put_i64(os, l.rows);
    put_i64(os, l.cols);
    put_i64(os, l.offset);
  }
  put_i64(os, model.params.size());
  put_vector(os, model.params);
  put_vector(os, model.adam_m);
  put_vector(os, model.adam_v);
  put_i64(os, model.step_count);
  put_vector(os, model.input_shift);
  put_vector(os, model.input_scale);
  if (!os) {
    throw DataError("failed writing " + path.string());
  }
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot read " + path.string());
  }
  Reader in{is, path.string()};
  char magic[sizeof kCheckpointMagic];
  in.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw DataError(in.source + ": not a checkpoint file");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw DataError(in.source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Architecture a;
  a.inputs = in.i64();
  a.hidden1 = in.i64();
  a.hidden2 = in.i64();
  a.classes = in.i64();
  a.spatial = in.i64();
  a.mask_side = in.i64();
  if (a.inputs < 1 || a.hidden1 < 1 || a.hidden2 < 1 || a.classes < 1 || a.spatial < 1 || a.mask_side < 1) {
    throw DataError(in.source + ": invalid architecture");
  }
  ModelState model = ModelState::zeros(a);
  const std::uint32_t layers = in.u32();
  if (layers != model.layout.size()) {
    throw DataError(in.source + ": layer table does not match the architecture");
  }
  for (const LayerLayout& expected : model.layout) {
    const std::uint32_t len = in.u32();
    if (len > 256) {
      throw DataError(in.source + ": corrupt layer name");
    }
    std::string name(len, '\0');
    in.bytes(name.data(), len);
    const Index rows = in.i64();
    const Index cols = in.i64();
    const Index offset = in.i64();
    if (name != expected.name || rows != expected.rows || cols != expected.cols || offset != expected.offset) {
      throw DataError(in.source + ": layer '" + name + "' does not match the architecture");
    }
  }
  const Index n = in.i64();
  if (n != model.params.size()) {
    throw DataError(in.source + ": parameter count mismatch");
  }
  model.params = in.vector(n);
  model.adam_m = in.vector(n);
  model.adam_v = in.vector(n);
  model.step_count = in.i64();
  model.input_shift = in.vector(a.inputs);
  model.input_scale = in.vector(a.inputs);
  return model;
}

}  // namespace noisylab
