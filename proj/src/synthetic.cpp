#include "noisylab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "noisylab/error.hpp"
#include "noisylab/label_io.hpp"
#include "noisylab/pgm.hpp"
#include "noisylab/special.hpp"

namespace noisylab {
namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kImageStreamBase = 1000;

std::string format_matrix_inline(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.format(Eigen::IOFormat(6, 0, ", ", "\n", "[", "]"));
  return os.str();
}

Eigen::MatrixXd row_of(const Eigen::VectorXd& v) { return v.transpose(); }

Eigen::VectorXd vector_from(const StructuredText& doc, const std::string& name, Index n) {
  const Eigen::MatrixXd& m = doc.matrix(name);
  if (m.rows() != 1 || m.cols() != n) {
    throw DataError("matrix '" + name + "' must be 1 x " + std::to_string(n));
  }
  return m.row(0).transpose();
}

const Ellipse& lung_of(const OrganLayout& layout, Organ organ) {
  return organ == Organ::LeftLung ? layout.left_lung : layout.right_lung;
}

bool in_organ(const OrganLayout& layout, Organ organ, double x, double y) {
  if (organ == Organ::Heart) {
    return layout.heart.contains(x, y);
  }
  return lung_of(layout, organ).contains(x, y) && !layout.heart.contains(x, y);
}

// Vertical band of y within a lung's bounding box: 0 upper, 1 middle, 2 lower.
int band_of(const Ellipse& lung, double y) {
  const double top = lung.cy - lung.ry;
  const double third = 2.0 * lung.ry / 3.0;
  return std::clamp(static_cast<int>(std::floor((y - top) / third)), 0, 2);
}

}  // namespace

void GeneratorConfig::validate() const {
  const Index d = classes();
  if (n_samples < 1 || d < 1) {
    throw DataError("generator needs at least one sample and one class");
  }
  if (prevalence.size() != d || sensitivity.size() != d || specificity.size() != d || lesion_contrast.size() != d ||
      static_cast<Index>(spatially_annotated.size()) != d) {
    throw DataError("generator per-class settings must have one entry per class");
  }
  if (latent_correlation.rows() != d || latent_correlation.cols() != d) {
    throw DataError("latent correlation must be D x D");
  }
  if ((prevalence.array() <= 0.0).any() || (prevalence.array() >= 1.0).any()) {
    throw DataError("prevalences must lie in (0, 1)");
  }
  if ((sensitivity.array() < 0.0).any() || (sensitivity.array() > 1.0).any() || (specificity.array() < 0.0).any() ||
      (specificity.array() > 1.0).any()) {
    throw DataError("noise targets must lie in [0, 1]");
  }
  if (cardiac_class < -1 || cardiac_class >= d) {
    throw DataError("cardiac class out of range");
  }
  if (image_size < 32) {
    throw DataError("image size must be at least 32");
  }
  if (!(shift_gain_min > 0.0) || shift_gain_max < shift_gain_min || shift_offset_max < 0.0 || pixel_noise < 0.0 ||
      rib_contrast < 0.0) {
    throw DataError("invalid intensity settings");
  }
  const Eigen::MatrixXd& r = latent_correlation;
  if (!r.isApprox(r.transpose(), 1e-12) || (r.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw DataError("latent correlation must be symmetric with unit diagonal");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw DataError("latent correlation is not positive semidefinite; nearest valid matrix:\n" +
                    format_matrix_inline(nearest_correlation_matrix(r)));
  }
}

GeneratorConfig GeneratorConfig::standard_benchmark(Index n_samples, std::uint64_t seed) {
  GeneratorConfig c;
  c.n_samples = n_samples;
  c.seed = seed;
  c.class_names = {"Effusion", "Cardiomegaly", "Consolidation", "Atelectasis", "Mass"};
  c.prevalence = (Eigen::VectorXd(5) << 0.20, 0.12, 0.15, 0.20, 0.10).finished();
  c.latent_correlation.resize(5, 5);
  c.latent_correlation << 1.0, 0.4, 0.5, 0.6, 0.1,  //
      0.4, 1.0, 0.2, 0.3, 0.0,                      //
      0.5, 0.2, 1.0, 0.5, 0.1,                      //
      0.6, 0.3, 0.5, 1.0, 0.2,                      //
      0.1, 0.0, 0.1, 0.2, 1.0;
  c.sensitivity = (Eigen::VectorXd(5) << 0.300, 0.342, 0.129, 0.221, 0.364).finished();
  c.specificity = (Eigen::VectorXd(5) << 0.966, 0.986, 0.949, 0.970, 0.972).finished();
  c.cardiac_class = 1;
  c.spatially_annotated = {false, false, true, true, true};
  c.lesion_contrast = Eigen::VectorXd::Constant(5, 600.0);
  // Rib clutter rather than pixel noise makes lesions hard to see, as on real
  // radiographs; the histogram edges stay sharp enough to window reliably.
  c.pixel_noise = 30.0;
  c.rib_contrast = 400.0;
  return c;
}

StructuredText GeneratorConfig::to_structured() const {
  StructuredText doc;
  doc.set("type", "generator");
  doc.set("n_samples", std::to_string(n_samples));
  doc.set("classes", join(class_names, ","));
  doc.set("cardiac_class", std::to_string(cardiac_class));
  std::vector<std::string> annotated;
  for (bool b : spatially_annotated) {
    annotated.push_back(b ? "1" : "0");
  }
  doc.set("spatially_annotated", join(annotated, ","));
  doc.set("image_size", std::to_string(image_size));
  doc.set("pixel_noise", format_double(pixel_noise));
  doc.set("rib_contrast", format_double(rib_contrast));
  doc.set("anonymization_box_probability", format_double(anonymization_box_probability));
  doc.set("intensity_shift", intensity_shift ? "1" : "0");
  doc.set("shift_gain_min", format_double(shift_gain_min));
  doc.set("shift_gain_max", format_double(shift_gain_max));
  doc.set("shift_offset_max", format_double(shift_offset_max));
  doc.set("seed", std::to_string(seed));
  doc.set_matrix("prevalence", row_of(prevalence));
  doc.set_matrix("latent_correlation", latent_correlation);
  doc.set_matrix("sensitivity", row_of(sensitivity));
  doc.set_matrix("specificity", row_of(specificity));
  doc.set_matrix("lesion_contrast", row_of(lesion_contrast));
  return doc;
}

GeneratorConfig GeneratorConfig::from_structured(const StructuredText& doc) {
  GeneratorConfig c = standard_benchmark(doc.get_int_or("n_samples", 1000),
                                         static_cast<std::uint64_t>(doc.get_int_or("seed", 1)));
  if (doc.has("classes")) {
    c.class_names = split(doc.get("classes"), ',');
    for (auto& n : c.class_names) {
      n = trim(n);
    }
  }
  const Index d = c.classes();
  if (doc.has_matrix("prevalence")) c.prevalence = vector_from(doc, "prevalence", d);
  if (doc.has_matrix("latent_correlation")) c.latent_correlation = doc.matrix("latent_correlation");
  if (doc.has_matrix("sensitivity")) c.sensitivity = vector_from(doc, "sensitivity", d);
  if (doc.has_matrix("specificity")) c.specificity = vector_from(doc, "specificity", d);
  if (doc.has_matrix("lesion_contrast")) c.lesion_contrast = vector_from(doc, "lesion_contrast", d);
  c.cardiac_class = doc.get_int_or("cardiac_class", c.cardiac_class);
  if (doc.has("spatially_annotated")) {
    c.spatially_annotated.clear();
    for (const auto& s : split(doc.get("spatially_annotated"), ',')) {
      c.spatially_annotated.push_back(parse_int(s, "spatially_annotated") != 0);
    }
  }
  c.image_size = static_cast<int>(doc.get_int_or("image_size", c.image_size));
  c.pixel_noise = doc.get_double_or("pixel_noise", c.pixel_noise);
  c.rib_contrast = doc.get_double_or("rib_contrast", c.rib_contrast);
  c.anonymization_box_probability = doc.get_double_or("anonymization_box_probability", c.anonymization_box_probability);
  c.intensity_shift = doc.get_int_or("intensity_shift", c.intensity_shift ? 1 : 0) != 0;
  c.shift_gain_min = doc.get_double_or("shift_gain_min", c.shift_gain_min);
  c.shift_gain_max = doc.get_double_or("shift_gain_max", c.shift_gain_max);
  c.shift_offset_max = doc.get_double_or("shift_offset_max", c.shift_offset_max);
  c.validate();
  return c;
}

Eigen::MatrixXd nearest_correlation_matrix(const Eigen::MatrixXd& m, double min_eigen) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(min_eigen);
  Eigen::MatrixXd psd = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd scale = psd.diagonal().cwiseSqrt().cwiseInverse();
  psd = scale.asDiagonal() * psd * scale.asDiagonal();
  psd.diagonal().setOnes();
  return 0.5 * (psd + psd.transpose());
}

double label_pearson_from_latent(double rho, double prevalence_a, double prevalence_b) {
  const double ta = normal_quantile(1.0 - prevalence_a);
  const double tb = normal_quantile(1.0 - prevalence_b);
  double both;
  if (rho >= 1.0 - 1e-12) {
    both = std::min(prevalence_a, prevalence_b);
  } else if (rho <= -1.0 + 1e-12) {
    both = std::max(0.0, prevalence_a + prevalence_b - 1.0);
  } else {
    // P(Za > ta, Zb > tb) = int_ta^inf phi(x) P(Zb > tb | Za = x) dx, composite Simpson.
    const double s = std::sqrt(1.0 - rho * rho);
    const double upper = std::max(ta, 0.0) + 12.0;
    const int intervals = 4000;
    const double h = (upper - ta) / intervals;
    auto integrand = [&](double x) {
      const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
      return phi * (1.0 - normal_cdf((tb - rho * x) / s));
    };
    double acc = integrand(ta) + integrand(upper);
    for (int k = 1; k < intervals; ++k) {
      acc += (k % 2 ? 4.0 : 2.0) * integrand(ta + k * h);
    }
    both = acc * h / 3.0;
  }
  const double va = prevalence_a * (1.0 - prevalence_a);
  const double vb = prevalence_b * (1.0 - prevalence_b);
  return (both - prevalence_a * prevalence_b) / std::sqrt(va * vb);
}

LatentLabels generate_labels(const GeneratorConfig& config) {
  config.validate();
  const Index f = config.n_samples;
  const Index d = config.classes();
  // LDLT tolerates semidefinite matrices; validate() already rejected indefinite ones.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(config.latent_correlation);
  const Eigen::MatrixXd factor =
      ldlt.transpositionsP().transpose() * Eigen::MatrixXd(ldlt.matrixL()) *
      ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  LatentLabels out;
  out.thresholds.resize(d);
  for (Index c = 0; c < d; ++c) {
    out.thresholds(c) = normal_quantile(1.0 - config.prevalence(c));
  }
  std::mt19937_64 rng(derive_seed(config.seed, kLabelStream));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd white(f, d);
  for (Index i = 0; i < f; ++i) {
    for (Index c = 0; c < d; ++c) {
      white(i, c) = normal(rng);
    }
  }
  out.latent = white * factor.transpose();
  out.labels.resize(f, d);
  for (Index i = 0; i < f; ++i) {
    for (Index c = 0; c < d; ++c) {
      out.labels(i, c) = out.latent(i, c) > out.thresholds(c) ? 1 : 0;
    }
  }
  return out;
}

BinaryMatrix inject_noise(const BinaryMatrix& true_labels, const Eigen::VectorXd& sensitivity,
                          const Eigen::VectorXd& specificity, std::uint64_t seed) {
  const Index d = true_labels.cols();
  if (sensitivity.size() != d || specificity.size() != d) {
    throw DataError("noise targets must have one entry per class");
  }
  if ((sensitivity.array() < 0.0).any() || (sensitivity.array() > 1.0).any() || (specificity.array() < 0.0).any() ||
      (specificity.array() > 1.0).any()) {
    throw DataError("noise targets must lie in [0, 1]");
  }
  std::mt19937_64 rng(derive_seed(seed, kNoiseStream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BinaryMatrix noisy(true_labels.rows(), d);
  for (Index i = 0; i < true_labels.rows(); ++i) {
    for (Index c = 0; c < d; ++c) {
      const double u = unif(rng);
      if (true_labels(i, c) == 1) {
        noisy(i, c) = u < sensitivity(c) ? 1 : 0;
      } else {
        noisy(i, c) = u < specificity(c) ? 0 : 1;
      }
    }
  }
  return noisy;
}

OrganLayout OrganLayout::nominal(int image_size) {
  const double n = image_size;
  OrganLayout l;
  l.right_lung = {0.31 * n, 0.48 * n, 0.15 * n, 0.30 * n};
  l.left_lung = {0.69 * n, 0.48 * n, 0.15 * n, 0.30 * n};
  l.heart = {0.56 * n, 0.66 * n, 0.14 * n, 0.12 * n};
  return l;
}

Eigen::ArrayXXi lesion_footprint(const Lesion& lesion, const OrganLayout& layout, int image_size) {
  Eigen::ArrayXXi mask = Eigen::ArrayXXi::Zero(image_size, image_size);
  const double r2 = lesion.radius * lesion.radius;
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      const double dx = px - lesion.cx;
      const double dy = py - lesion.cy;
      if (dx * dx + dy * dy <= r2 && in_organ(layout, lesion.organ, px, py)) {
        mask(y, x) = 1;
      }
    }
  }
  return mask;
}

Eigen::RowVectorXi spatial_labels_for(const std::vector<Lesion>& annotated, const OrganLayout& layout) {
  using S = SpatialLabelMatrix;
  Eigen::RowVectorXi out = Eigen::RowVectorXi::Zero(S::kClasses);
  std::vector<const Lesion*> lung_lesions;
  for (const Lesion& l : annotated) {
    if (l.organ == Organ::Heart) {
      continue;
    }
    lung_lesions.push_back(&l);
    out(l.organ == Organ::LeftLung ? S::LeftLung : S::RightLung) = 1;
    const Ellipse& lung = lung_of(layout, l.organ);
    const int top = band_of(lung, std::max(l.cy - l.radius, lung.cy - lung.ry));
    const int bottom = band_of(lung, std::min(l.cy + l.radius, lung.cy + lung.ry - 1e-9));
    if (l.diffuse || (top == 0 && bottom == 2)) {
      out(S::Diffused) = 1;
    } else if (top == bottom) {
      out(top == 0 ? S::Upper : top == 1 ? S::Middle : S::Lower) = 1;
    } else {
      out(top == 0 ? S::UpperMiddle : S::LowerMiddle) = 1;
    }
  }
  // Connected components of overlapping lesion disks.
  const std::size_t n = lung_lesions.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      a = parent[a] = parent[parent[a]];
    }
    return a;
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const Lesion& la = *lung_lesions[a];
      const Lesion& lb = *lung_lesions[b];
      const double dist = std::hypot(la.cx - lb.cx, la.cy - lb.cy);
      if (la.organ == lb.organ && dist <= la.radius + lb.radius) {
        parent[find(a)] = find(b);
      }
    }
  }
  std::size_t components = 0;
  for (std::size_t a = 0; a < n; ++a) {
    components += find(a) == a;
  }
  if (components >= 2) {
    out(S::Multiple) = 1;
  }
  return out;
}

namespace {

struct LesionShape {
  double radius;         // fraction of the image size
  double diffuse_prob;   // chance of a large, diffuse lesion
  double second_prob;    // chance of a second, separate focus
  bool lower_only;       // effusion-like: settles in the lower third
};

LesionShape shape_for(Index c) {
  // Cycles through a small catalogue so any class count gets distinct shapes.
  static const LesionShape catalogue[] = {
      {0.10, 0.0, 0.0, true},   // Effusion-like
      {0.09, 0.0, 0.0, false},  // cardiac or generic
      {0.09, 0.25, 0.0, false}, // Consolidation-like
      {0.07, 0.0, 0.0, false},  // Atelectasis-like
      {0.05, 0.0, 0.3, false},  // Mass-like
  };
  return catalogue[static_cast<std::size_t>(c) % 5];
}

// Draws a lesion centre inside the organ (and the band for lower-only lesions),
// keeping it clear of `avoid` when given.
bool place_lesion(Lesion& lesion, const OrganLayout& layout, bool lower_only, const Lesion* avoid,
                  std::mt19937_64& rng) {
  const Ellipse& box = lesion.organ == Organ::Heart ? layout.heart : lung_of(layout, lesion.organ);
  std::uniform_real_distribution<double> ux(box.cx - box.rx, box.cx + box.rx);
  const double y_lo = lower_only ? box.cy + box.ry / 3.0 : box.cy - box.ry;
  std::uniform_real_distribution<double> uy(y_lo, box.cy + box.ry);
  for (int attempt = 0; attempt < 200; ++attempt) {
    lesion.cx = ux(rng);
    lesion.cy = uy(rng);
    if (!in_organ(layout, lesion.organ, lesion.cx, lesion.cy)) {
      continue;
    }
    if (avoid && std::hypot(lesion.cx - avoid->cx, lesion.cy - avoid->cy) <= lesion.radius + avoid->radius + 1.0) {
      continue;
    }
    return true;
  }
  return false;
}

}  // namespace

RenderedSample render_image(const Eigen::RowVectorXd& latent, const Eigen::RowVectorXi& labels,
                            const Eigen::VectorXd& thresholds, const GeneratorConfig& config, std::uint64_t seed) {
  const int n = config.image_size;
  const Index d = config.classes();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

  RenderedSample out;
  out.layout = OrganLayout::nominal(n);
  const double jitter = n / 32.0;
  for (Ellipse* e : {&out.layout.right_lung, &out.layout.left_lung, &out.layout.heart}) {
    e->cx += uniform(-jitter, jitter);
    e->cy += uniform(-jitter, jitter);
    e->rx *= uniform(0.92, 1.08);
    e->ry *= uniform(0.92, 1.08);
  }

  for (Index c = 0; c < d; ++c) {
    if (labels(c) != 1) {
      continue;
    }
    const LesionShape shape = shape_for(c);
    const double severity = std::tanh(std::max(0.0, latent(c) - thresholds(c)));
    Lesion lesion;
    lesion.abnormality = c;
    lesion.amplitude = config.lesion_contrast(c) * (0.6 + 0.4 * severity);
    lesion.radius = shape.radius * n;
    if (c == config.cardiac_class) {
      lesion.organ = Organ::Heart;
    } else {
      lesion.organ = unif(rng) < 0.5 ? Organ::LeftLung : Organ::RightLung;
      if (unif(rng) < shape.diffuse_prob) {
        lesion.diffuse = true;
        lesion.radius = 0.2 * n;
        lesion.amplitude *= 0.6;
      }
    }
    if (!place_lesion(lesion, out.layout, shape.lower_only, nullptr, rng)) {
      continue;
    }
    out.lesions.push_back(lesion);
    if (lesion.organ != Organ::Heart && !lesion.diffuse && unif(rng) < shape.second_prob) {
      Lesion second = lesion;
      second.organ = unif(rng) < 0.5 ? Organ::LeftLung : Organ::RightLung;
      const Lesion first = lesion;
      if (place_lesion(second, out.layout, shape.lower_only, second.organ == first.organ ? &first : nullptr, rng)) {
        out.lesions.push_back(second);
      }
    }
  }

  // Ribs: parallel, slightly oblique bands with a random phase and strength.
  // They only brighten lung pixels, so the darkest parenchyma stays flat.
  double rib_amplitude = 0.0, rib_phase = 0.0, rib_slope = 0.0;
  const double rib_spacing = 0.15 * n;
  const double rib_half_width = 0.035 * n;
  if (config.rib_contrast > 0.0) {
    rib_amplitude = config.rib_contrast * uniform(0.5, 1.0);
    rib_phase = uniform(0.0, rib_spacing);
    rib_slope = uniform(0.1, 0.3);
  }

  out.image.resize(n, n);
  out.lung_mask = Eigen::ArrayXXi::Zero(n, n);
  out.heart_mask = Eigen::ArrayXXi::Zero(n, n);
  std::normal_distribution<double> noise(0.0, config.pixel_noise);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      double v = 1800.0;
      if (out.layout.heart.contains(px, py)) {
        v = 2000.0;
        out.heart_mask(y, x) = 1;
      } else if (out.layout.left_lung.contains(px, py) || out.layout.right_lung.contains(px, py)) {
        v = 900.0;
        out.lung_mask(y, x) = 1;
        if (rib_amplitude > 0.0) {
          // Ribs fall away from the midline on both sides.
          const double rise = rib_slope * std::abs(px - 0.5 * n);
          const double t = std::fmod(py - rise - rib_phase + 4.0 * n, rib_spacing);
          const double dy = std::min(t, rib_spacing - t) / rib_half_width;
          if (dy < 1.0) v += rib_amplitude * (1.0 - dy * dy);
        }
      }
      for (const Lesion& l : out.lesions) {
        const double d2 = (px - l.cx) * (px - l.cx) + (py - l.cy) * (py - l.cy);
        const double r2 = l.radius * l.radius;
        if (d2 <= r2 && in_organ(out.layout, l.organ, px, py)) {
          v += l.amplitude * (1.0 - d2 / r2);
        }
      }
      out.image(y, x) = v + noise(rng);
    }
  }
  if (unif(rng) < config.anonymization_box_probability) {
    const int h = std::max(1, static_cast<int>(0.12 * n));
    const int w = std::max(1, static_cast<int>(0.2 * n));
    out.image.block(1, 1, h, w).setZero();
  }
  if (config.intensity_shift) {
    const double gain = std::exp(uniform(std::log(config.shift_gain_min), std::log(config.shift_gain_max)));
    const double offset = uniform(0.0, config.shift_offset_max);
    out.image = gain * out.image + offset;
  }
  out.image = out.image.max(0.0).min(65535.0).round();

  std::vector<Lesion> annotated;
  for (const Lesion& l : out.lesions) {
    if (config.spatially_annotated[static_cast<std::size_t>(l.abnormality)]) {
      annotated.push_back(l);
    }
  }
  out.spatial = spatial_labels_for(annotated, out.layout);
  return out;
}

StructuredText SyntheticDataset::manifest() const {
  StructuredText doc = config.to_structured();
  doc.set("type", "dataset_manifest");
  doc.set("samples", std::to_string(samples()));
  doc.set("vertical_bands", "equal thirds of the containing lung bounding box");
  doc.set("lung_sides", "patient left lung is drawn on the image right");
  doc.set("organ_mask_channels", "0=lungs,1=heart");
  doc.set("image_seed_rule", "derive_seed(seed, 1000 + sample index)");
  return doc;
}

SyntheticDataset generate_dataset(const GeneratorConfig& config, bool render) {
  config.validate();
  SyntheticDataset out;
  out.config = config;
  LatentLabels latent = generate_labels(config);
  out.latent = latent.latent;
  out.true_labels = LabelMatrix::from_dense(latent.labels, config.class_names);
  out.noisy_labels = LabelMatrix::from_dense(
      inject_noise(latent.labels, config.sensitivity, config.specificity, config.seed), config.class_names);

  const Index f = config.n_samples;
  const Index d = config.classes();
  out.spatial.labels = BinaryMatrix::Zero(f, SpatialLabelMatrix::kClasses);
  out.spatial.available = BoolMatrix::Constant(f, d, false);
  for (Index i = 0; i < f; ++i) {
    for (Index c = 0; c < d; ++c) {
      out.spatial.available(i, c) = config.spatially_annotated[static_cast<std::size_t>(c)] && latent.labels(i, c) == 1;
    }
  }
  if (!render) {
    return out;
  }
  out.images.reserve(static_cast<std::size_t>(f));
  out.lung_masks.reserve(static_cast<std::size_t>(f));
  out.heart_masks.reserve(static_cast<std::size_t>(f));
  for (Index i = 0; i < f; ++i) {
    RenderedSample s = render_image(latent.latent.row(i), latent.labels.row(i), latent.thresholds, config,
                                    derive_seed(config.seed, kImageStreamBase + static_cast<std::uint64_t>(i)));
    out.spatial.labels.row(i) = s.spatial;
    out.images.push_back(std::move(s.image));
    out.lung_masks.push_back(std::move(s.lung_mask));
    out.heart_masks.push_back(std::move(s.heart_mask));
  }
  return out;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  write_labels_csv(dir / "labels_true.csv", data.true_labels);
  write_labels_csv(dir / "labels_noisy.csv", data.noisy_labels);
  write_spatial_csv(dir / "spatial.csv", data.true_labels.sample_ids, data.true_labels.class_names, data.spatial);
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const std::string& id = data.true_labels.sample_ids[i];
    write_pgm(dir / "images" / (id + ".pgm"), data.images[i], 65535);
    write_pgm(dir / "masks" / (id + "_lungs.pgm"), (data.lung_masks[i].cast<double>() * 255.0).eval(), 255);
    write_pgm(dir / "masks" / (id + "_heart.pgm"), (data.heart_masks[i].cast<double>() * 255.0).eval(), 255);
  }
  data.manifest().save(dir / "manifest");
}

SyntheticDataset read_dataset(const std::filesystem::path& dir) {
  SyntheticDataset out;
  const StructuredText manifest = StructuredText::load(dir / "manifest");
  out.config = GeneratorConfig::from_structured(manifest);
  out.true_labels = read_labels_csv(dir / "labels_true.csv");
  out.noisy_labels = read_labels_csv(dir / "labels_noisy.csv");
  if (out.true_labels.sample_ids != out.noisy_labels.sample_ids) {
    throw DataError(dir.string() + ": true and noisy label files list different samples");
  }
  std::vector<std::string> spatial_ids;
  out.spatial = read_spatial_csv(dir / "spatial.csv", &spatial_ids);
  if (spatial_ids != out.true_labels.sample_ids) {
    throw DataError(dir.string() + ": spatial.csv lists different samples");
  }
  for (const std::string& id : out.true_labels.sample_ids) {
    out.images.push_back(read_pgm(dir / "images" / (id + ".pgm")).pixels);
    out.lung_masks.push_back((read_pgm(dir / "masks" / (id + "_lungs.pgm")).pixels > 0.0).cast<int>());
    out.heart_masks.push_back((read_pgm(dir / "masks" / (id + "_heart.pgm")).pixels > 0.0).cast<int>());
  }
  return out;
}

}  // namespace noisylab
