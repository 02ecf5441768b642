#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mpadnn::nn {

struct MlpSpec {
  int input = 0;
  int output = 0;
  std::vector<int> hidden{40, 40, 40};
};

// Fully-connected net with ELU hidden activations and identity output.
// Inputs are divided by input_scale and outputs multiplied by output_scale,
// so the weights live at O(1) magnitudes regardless of the case's MW level.
struct MlpParams {
  std::vector<Eigen::MatrixXd> w;  // w[l]: out x in
  std::vector<Eigen::VectorXd> b;
  double input_scale = 1.0;
  double output_scale = 1.0;

  int layers() const { return static_cast<int>(w.size()); }
  int input_size() const { return w.empty() ? 0 : static_cast<int>(w.front().cols()); }
  int output_size() const { return w.empty() ? 0 : static_cast<int>(w.back().rows()); }
  std::size_t parameter_count() const;
};

// He-style uniform fan-in init on hidden layers. output_layer_gain scales the
// final layer's init; training uses 0 so the raw schedule starts at the
// origin, whose projection sits on a high-dimensional face of the feasible
// set (a vertex start would zero out every gradient).
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed, double input_scale = 1.0,
                      double output_scale = 1.0, double output_layer_gain = 1.0);

struct ForwardCache {
  Eigen::VectorXd input_scaled;
  std::vector<Eigen::VectorXd> pre;  // pre-activation per layer
  std::vector<Eigen::VectorXd> act;  // post-activation per layer
};

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input,
                        ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  void scale(double a);
  bool all_finite() const;
};

// Gradients of <grad_output, forward(input)> with respect to every parameter.
Gradients backward(const MlpParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& grad_output);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState like(const MlpParams& params);
};

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

// Versioned binary checkpoint: case fingerprint, mode tag, shapes, scales,
// raw parameters and optimizer state.
struct Checkpoint {
  std::string case_fingerprint;
  std::string mode;
  int horizon = 0;
  MlpParams params;
  AdamState adam;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mpadnn::nn
