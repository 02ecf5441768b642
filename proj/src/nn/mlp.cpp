#include "nn/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace mpadnn::nn {

namespace {

double elu(double v) { return v > 0.0 ? v : std::expm1(v); }
double elu_grad(double v) { return v > 0.0 ? 1.0 : std::exp(v); }

constexpr char kMagic[8] = {'M', 'P', 'A', 'D', 'N', 'N', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw io_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  auto len = read_pod<std::uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw io_error("checkpoint: truncated string");
  return s;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  write_pod<std::int64_t>(os, m.rows());
  write_pod<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  auto rows = read_pod<std::int64_t>(is);
  auto cols = read_pod<std::int64_t>(is);
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 28))
    throw io_error("checkpoint: implausible matrix shape");
  Eigen::MatrixXd m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!is) throw io_error("checkpoint: truncated matrix");
  return m;
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& wi : w) n += static_cast<std::size_t>(wi.size());
  for (const auto& bi : b) n += static_cast<std::size_t>(bi.size());
  return n;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed, double input_scale,
                      double output_scale, double output_layer_gain) {
  if (spec.input < 1 || spec.output < 1) throw dimension_error("init_params: bad layer sizes");
  std::vector<int> sizes;
  sizes.push_back(spec.input);
  for (int hsz : spec.hidden) sizes.push_back(hsz);
  sizes.push_back(spec.output);

  MlpParams params;
  params.input_scale = input_scale;
  params.output_scale = output_scale;
  Rng rng(derive_seed(seed, 0x6d6c70 /* "mlp" */));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    double limit = std::sqrt(6.0 / fan_in);
    if (l + 2 == sizes.size()) limit *= output_layer_gain;
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.next_uniform(-limit, limit);
    params.w.push_back(std::move(w));
    params.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input,
                        ForwardCache* cache) {
  if (input.size() != params.input_size())
    throw dimension_error("forward: expected input length " +
                          std::to_string(params.input_size()) + ", got " +
                          std::to_string(input.size()));
  const int L = params.layers();
  Eigen::VectorXd a = input / params.input_scale;
  if (cache) {
    cache->input_scaled = a;
    cache->pre.assign(static_cast<std::size_t>(L), {});
    cache->act.assign(static_cast<std::size_t>(L), {});
  }
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = params.w[static_cast<std::size_t>(l)] * a + params.b[static_cast<std::size_t>(l)];
    if (cache) cache->pre[static_cast<std::size_t>(l)] = z;
    if (l + 1 < L)
      a = z.unaryExpr([](double v) { return elu(v); });
    else
      a = z;
    if (cache) cache->act[static_cast<std::size_t>(l)] = a;
  }
  return a * params.output_scale;
}

void Gradients::scale(double a) {
  for (auto& m : w) m *= a;
  for (auto& v : b) v *= a;
}

bool Gradients::all_finite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

Gradients backward(const MlpParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& grad_output) {
  const int L = params.layers();
  if (static_cast<int>(cache.pre.size()) != L || grad_output.size() != params.output_size())
    throw dimension_error("backward: cache does not match parameters");

  Gradients g;
  g.w.resize(static_cast<std::size_t>(L));
  g.b.resize(static_cast<std::size_t>(L));

  Eigen::VectorXd delta = grad_output * params.output_scale;
  for (int l = L - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    if (l < L - 1)
      delta = delta.cwiseProduct(
          cache.pre[lu].unaryExpr([](double v) { return elu_grad(v); }));
    const Eigen::VectorXd& in = l == 0 ? cache.input_scaled : cache.act[lu - 1];
    g.w[lu] = delta * in.transpose();
    g.b[lu] = delta;
    if (l > 0) delta = params.w[lu].transpose() * delta;
  }
  return g;
}

AdamState AdamState::like(const MlpParams& params) {
  AdamState st;
  for (const auto& w : params.w) {
    st.m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    st.v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.b) {
    st.m_b.push_back(Eigen::VectorXd::Zero(b.size()));
    st.v_b.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  return st;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (!grads.all_finite())
    throw Error(ErrorCode::Internal, "adam_step: non-finite gradient rejected");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p -= lr * (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + state.epsilon).matrix());
  };
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    update(params.w[l], grads.w[l], state.m_w[l], state.v_w[l]);
    update(params.b[l], grads.b[l], state.m_b[l], state.v_b[l]);
  }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_string(os, ck.case_fingerprint);
  write_string(os, ck.mode);
  write_pod<std::int32_t>(os, ck.horizon);
  write_pod<double>(os, ck.params.input_scale);
  write_pod<double>(os, ck.params.output_scale);
  write_pod<std::int32_t>(os, ck.params.layers());
  for (int l = 0; l < ck.params.layers(); ++l) {
    write_matrix(os, ck.params.w[static_cast<std::size_t>(l)]);
    write_matrix(os, ck.params.b[static_cast<std::size_t>(l)]);
  }
  write_pod<std::int64_t>(os, ck.adam.step);
  write_pod<double>(os, ck.adam.beta1);
  write_pod<double>(os, ck.adam.beta2);
  write_pod<double>(os, ck.adam.epsilon);
  for (std::size_t l = 0; l < ck.adam.m_w.size(); ++l) {
    write_matrix(os, ck.adam.m_w[l]);
    write_matrix(os, ck.adam.v_w[l]);
    write_matrix(os, ck.adam.m_b[l]);
    write_matrix(os, ck.adam.v_b[l]);
  }
  if (!os) throw io_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw io_error("checkpoint: bad magic in " + path);
  Checkpoint ck;
  ck.case_fingerprint = read_string(is);
  ck.mode = read_string(is);
  ck.horizon = read_pod<std::int32_t>(is);
  ck.params.input_scale = read_pod<double>(is);
  ck.params.output_scale = read_pod<double>(is);
  auto layers = read_pod<std::int32_t>(is);
  for (int l = 0; l < layers; ++l) {
    ck.params.w.push_back(read_matrix(is));
    Eigen::MatrixXd b = read_matrix(is);
    ck.params.b.push_back(Eigen::VectorXd(b.col(0)));
  }
  ck.adam.step = read_pod<std::int64_t>(is);
  ck.adam.beta1 = read_pod<double>(is);
  ck.adam.beta2 = read_pod<double>(is);
  ck.adam.epsilon = read_pod<double>(is);
  for (int l = 0; l < layers; ++l) {
    ck.adam.m_w.push_back(read_matrix(is));
    ck.adam.v_w.push_back(read_matrix(is));
    Eigen::MatrixXd mb = read_matrix(is);
    Eigen::MatrixXd vb = read_matrix(is);
    ck.adam.m_b.push_back(Eigen::VectorXd(mb.col(0)));
    ck.adam.v_b.push_back(Eigen::VectorXd(vb.col(0)));
  }
  return ck;
}

}  // namespace mpadnn::nn
