#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "anneal/optim.hpp"

namespace anneal {

enum class Activation { ReLU, LeakyReLU };

struct HiddenActivation {
  Activation kind = Activation::LeakyReLU;
  double slope = 0.01;  // LeakyReLU only
};

/// Output layer and its loss. The pairing is fixed: sigmoid outputs train
/// against categorical cross-entropy, softmax logits against sparse CE.
enum class OutputHead { SigmoidWithCategoricalCE, SoftmaxWithSparseCE };

std::string_view output_head_name(OutputHead head) noexcept;

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., classes
  HiddenActivation hidden;
  OutputHead head = OutputHead::SigmoidWithCategoricalCE;
  std::uint64_t init_seed = 42;

  void validate() const;
  int input_dim() const { return layer_sizes.front(); }
  int classes() const { return layer_sizes.back(); }
};

/// Dense feed-forward network. weights[l] maps layer l to layer l + 1 and is
/// stored (out x in).
struct MlpModel {
  MlpSpec spec;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t parameter_count() const;
  /// Layer by layer: weights row-major, then biases.
  Vector flatten() const;
  void assign(const Eigen::Ref<const Vector>& flat);
};

/// Rows are samples. `targets` is optional and only read by the categorical
/// head, which otherwise one-hot encodes `labels`; multi-hot rows are allowed.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  Matrix targets;

  Eigen::Index size() const { return inputs.rows(); }
};

struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activations per layer, pre[l] feeds layer l + 1
  std::vector<Matrix> post;  // post[0] is the input, post[l + 1] = act(pre[l])
  Matrix outputs;            // sigmoid probabilities or softmax logits, per head
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  Vector flatten() const;
};

/// Glorot-uniform weights, zero biases, drawn from the spec's seed.
MlpModel init(const MlpSpec& spec);

/// Max-shifted softmax.
Vector softmax(const Eigen::Ref<const Vector>& logits);

ForwardCache forward(const MlpModel& model, const Eigen::Ref<const Matrix>& inputs);

/// Mean batch loss. Categorical CE clamps probabilities to [1e-12, 1 - 1e-12].
/// Throws Errc::LabelRange for labels outside [0, C).
double loss(const Eigen::Ref<const Matrix>& outputs, const Batch& batch, OutputHead head);

/// Gradient of the mean batch loss with respect to every weight and bias.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Batch& batch);

/// Fraction of rows whose arg-max output equals the label.
double accuracy(const Eigen::Ref<const Matrix>& outputs, const std::vector<int>& labels);

/// Binary layout: "MNET1", u32 layer count, u32 sizes, then f64 parameters in
/// flatten() order. All integers and floats little-endian.
void save_model(const MlpModel& model, std::ostream& out);

/// Activation and head are not part of the file and come from the caller.
MlpModel load_model(std::istream& in, HiddenActivation hidden, OutputHead head);

}  // namespace anneal
