#include "anneal/micronet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "anneal/error.hpp"
#include "anneal/random.hpp"

namespace anneal {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr std::array<char, 5> kMagic = {'M', 'N', 'E', 'T', '1'};

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double activate(double z, const HiddenActivation& act) {
  if (z > 0.0) {
    return z;
  }
  return act.kind == Activation::LeakyReLU ? act.slope * z : 0.0;
}

double activate_slope(double z, const HiddenActivation& act) {
  if (z > 0.0) {
    return 1.0;
  }
  return act.kind == Activation::LeakyReLU ? act.slope : 0.0;
}

void check_labels(const std::vector<int>& labels, Eigen::Index rows, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw Error(Errc::Dimension,
                fmt::format("batch has {} rows but {} labels", rows, labels.size()));
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw Error(Errc::LabelRange,
                  fmt::format("label {} outside [0, {})", label, classes));
    }
  }
}

// Targets for the categorical head: explicit rows when given, one-hot otherwise.
Matrix categorical_targets(const Batch& batch, Eigen::Index rows, int classes) {
  if (batch.targets.size() > 0) {
    if (batch.targets.rows() != rows || batch.targets.cols() != classes) {
      throw Error(Errc::Dimension, fmt::format("targets are {}x{}, expected {}x{}",
                                               batch.targets.rows(), batch.targets.cols(), rows,
                                               classes));
    }
    return batch.targets;
  }
  check_labels(batch.labels, rows, classes);
  Matrix t = Matrix::Zero(rows, classes);
  for (Eigen::Index r = 0; r < rows; ++r) {
    t(r, batch.labels[static_cast<std::size_t>(r)]) = 1.0;
  }
  return t;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (auto& b : bytes) {
    b = static_cast<char>(v & 0xFF);
    v >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

void write_f64(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  std::array<char, 8> bytes{};
  for (auto& b : bytes) {
    b = static_cast<char>(bits & 0xFF);
    bits >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

template <std::size_t N>
std::uint64_t read_le(std::istream& in) {
  std::array<unsigned char, N> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), N)) {
    throw Error(Errc::TruncatedFile, "model file ended early");
  }
  std::uint64_t v = 0;
  for (std::size_t i = N; i-- > 0;) {
    v = (v << 8) | bytes[i];
  }
  return v;
}

}  // namespace

std::string_view output_head_name(OutputHead head) noexcept {
  switch (head) {
    case OutputHead::SigmoidWithCategoricalCE: return "sigmoid-categorical";
    case OutputHead::SoftmaxWithSparseCE: return "softmax-sparse";
  }
  return "unknown";
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw Error(Errc::InvalidArgument, "an MLP needs at least an input and an output layer");
  }
  for (int size : layer_sizes) {
    if (size < 1) {
      throw Error(Errc::InvalidArgument, fmt::format("layer sizes must be >= 1 (got {})", size));
    }
  }
  if (hidden.kind == Activation::LeakyReLU && !(hidden.slope > 0.0 && hidden.slope < 1.0)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("leaky ReLU slope must be in (0, 1) (got {})", hidden.slope));
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

namespace {

template <typename Weights, typename Biases>
Vector flatten_layers(const Weights& weights, const Biases& biases) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  Vector flat(static_cast<Eigen::Index>(total));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) {
        flat[k++] = weights[l](r, c);
      }
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) {
      flat[k++] = biases[l][r];
    }
  }
  return flat;
}

}  // namespace

Vector MlpModel::flatten() const { return flatten_layers(weights, biases); }

Vector Gradients::flatten() const { return flatten_layers(weights, biases); }

void MlpModel::assign(const Eigen::Ref<const Vector>& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw Error(Errc::Dimension, fmt::format("expected {} parameters, got {}", parameter_count(),
                                             flat.size()));
  }
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) {
        weights[l](r, c) = flat[k++];
      }
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) {
      biases[l][r] = flat[k++];
    }
  }
}

MlpModel init(const MlpSpec& spec) {
  spec.validate();
  MlpModel model;
  model.spec = spec;
  Rng rng(spec.init_seed);
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = rng.uniform(-limit, limit);
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

Vector softmax(const Eigen::Ref<const Vector>& logits) {
  if (logits.size() < 1) {
    throw Error(Errc::Dimension, "softmax needs at least one logit");
  }
  const Vector shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

ForwardCache forward(const MlpModel& model, const Eigen::Ref<const Matrix>& inputs) {
  if (inputs.cols() != model.spec.input_dim()) {
    throw Error(Errc::Dimension, fmt::format("input has {} features, model expects {}",
                                             inputs.cols(), model.spec.input_dim()));
  }
  ForwardCache cache;
  cache.post.push_back(inputs);
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = cache.post.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    Matrix a = z;
    if (l + 1 < layers) {
      a = z.unaryExpr([&](double v) { return activate(v, model.spec.hidden); });
    } else if (model.spec.head == OutputHead::SigmoidWithCategoricalCE) {
      a = z.unaryExpr([](double v) { return stable_sigmoid(v); });
    }
    cache.pre.push_back(std::move(z));
    cache.post.push_back(std::move(a));
  }
  cache.outputs = cache.post.back();
  return cache;
}

double loss(const Eigen::Ref<const Matrix>& outputs, const Batch& batch, OutputHead head) {
  const Eigen::Index rows = outputs.rows();
  const auto classes = static_cast<int>(outputs.cols());
  if (rows < 1) {
    throw Error(Errc::Dimension, "loss needs a non-empty batch");
  }
  double total = 0.0;
  if (head == OutputHead::SigmoidWithCategoricalCE) {
    const Matrix t = categorical_targets(batch, rows, classes);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < classes; ++c) {
        if (t(r, c) != 0.0) {
          const double p = std::clamp(outputs(r, c), kProbClamp, 1.0 - kProbClamp);
          total -= t(r, c) * std::log(p);
        }
      }
    }
  } else {
    check_labels(batch.labels, rows, classes);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double top = outputs.row(r).maxCoeff();
      const double log_sum = top + std::log((outputs.row(r).array() - top).exp().sum());
      total += log_sum - outputs(r, batch.labels[static_cast<std::size_t>(r)]);
    }
  }
  return total / static_cast<double>(rows);
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Batch& batch) {
  const std::size_t layers = model.weights.size();
  if (cache.pre.size() != layers || cache.post.size() != layers + 1 ||
      cache.outputs.rows() != batch.size()) {
    throw Error(Errc::Dimension, "forward cache does not match this model and batch");
  }
  const Eigen::Index rows = cache.outputs.rows();
  const auto classes = static_cast<int>(cache.outputs.cols());
  const double inv_rows = 1.0 / static_cast<double>(rows);

  // Gradient of the mean loss with respect to the output pre-activations.
  Matrix delta(rows, classes);
  if (model.spec.head == OutputHead::SigmoidWithCategoricalCE) {
    const Matrix t = categorical_targets(batch, rows, classes);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double p = cache.outputs(r, c);
        const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        // d/dz of -t log(sigmoid(z)) is -t (1 - p); zero where the clamp is active.
        delta(r, c) = clamped ? 0.0 : -t(r, c) * (1.0 - p) * inv_rows;
      }
    }
  } else {
    check_labels(batch.labels, rows, classes);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Vector p = softmax(cache.outputs.row(r).transpose());
      delta.row(r) = p.transpose() * inv_rows;
      delta(r, batch.labels[static_cast<std::size_t>(r)]) -= inv_rows;
    }
  }

  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = delta.transpose() * cache.post[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix upstream = delta * model.weights[l];
      const Matrix& z = cache.pre[l - 1];
      for (Eigen::Index r = 0; r < upstream.rows(); ++r) {
        for (Eigen::Index c = 0; c < upstream.cols(); ++c) {
          upstream(r, c) *= activate_slope(z(r, c), model.spec.hidden);
        }
      }
      delta = std::move(upstream);
    }
  }
  return grads;
}

double accuracy(const Eigen::Ref<const Matrix>& outputs, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != outputs.rows() || outputs.rows() == 0) {
    throw Error(Errc::Dimension, "accuracy needs one label per output row");
  }
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    Eigen::Index best = 0;
    outputs.row(r).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(r)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

void save_model(const MlpModel& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, static_cast<std::uint32_t>(model.spec.layer_sizes.size()));
  for (int size : model.spec.layer_sizes) {
    write_u32(out, static_cast<std::uint32_t>(size));
  }
  for (double v : model.flatten()) {
    write_f64(out, v);
  }
  if (!out) {
    throw Error(Errc::Io, "failed to write model");
  }
}

MlpModel load_model(std::istream& in, HiddenActivation hidden, OutputHead head) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(Errc::Io, "not an MNET1 model file");
  }
  const auto count = read_le<4>(in);
  if (count < 2 || count > 4096) {
    throw Error(Errc::Io, fmt::format("implausible layer count {}", count));
  }
  MlpSpec spec;
  spec.hidden = hidden;
  spec.head = head;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto size = read_le<4>(in);
    if (size < 1 || size > (1u << 24)) {
      throw Error(Errc::Io, fmt::format("implausible layer size {}", size));
    }
    spec.layer_sizes.push_back(static_cast<int>(size));
  }
  spec.validate();
  MlpModel model;
  model.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    model.weights.emplace_back(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
    model.biases.emplace_back(spec.layer_sizes[l + 1]);
  }
  Vector flat(static_cast<Eigen::Index>(model.parameter_count()));
  for (auto& v : flat) {
    v = std::bit_cast<double>(read_le<8>(in));
  }
  model.assign(flat);
  return model;
}

}  // namespace anneal
