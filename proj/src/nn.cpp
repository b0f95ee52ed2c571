#include "wgcl/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wgcl/errors.hpp"

namespace wgcl {

Matrix& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  Param p{name, std::move(init), {}, {}};
  p.first_moment = Matrix(p.value.rows(), p.value.cols());
  p.second_moment = Matrix(p.value.rows(), p.value.cols());
  params_.push_back(std::move(p));
  return params_.back().value;
}

Matrix& ParamStore::at(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.value;
  throw ConfigError("unknown parameter '" + name + "'");
}

const Matrix& ParamStore::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw ConfigError("unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param& p) { return p.name == name; });
}

std::uint64_t ParamStore::hash() const {
  std::uint64_t h = fnv1a64("params");
  for (const auto& p : params_) {
    h = fnv1a64(p.name, h);
    const std::array<std::uint64_t, 2> shape{p.value.rows(), p.value.cols()};
    h = fnv1a64({reinterpret_cast<const char*>(shape.data()), sizeof(shape)}, h);
    h = fnv1a64({reinterpret_cast<const char*>(p.value.data()), p.value.size() * sizeof(double)},
                h);
  }
  return h;
}

Gradients ParamStore::zero_gradients() const {
  Gradients g;
  for (const auto& p : params_) g[p.name] = Matrix(p.value.rows(), p.value.cols());
  return g;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}

void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg) {
  const double t = static_cast<double>(params.step_count() + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  std::vector<Param> next = params.params();
  for (auto& p : next) {
    auto it = grads.find(p.name);
    if (it == grads.end()) continue;
    const Matrix& g = it->second;
    if (g.rows() != p.value.rows() || g.cols() != p.value.cols()) {
      throw InputError("gradient for '" + p.name + "' has the wrong shape");
    }
    auto w = p.value.flat();
    auto m = p.first_moment.flat();
    auto v = p.second_moment.flat();
    auto gf = g.flat();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = gf[k] + cfg.weight_decay * w[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      w[k] -= cfg.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.eps);
    }
    if (!all_finite(p.value)) {
      throw NumericalError("non-finite value in parameter '" + p.name +
                           "' after optimizer step; try a smaller learning rate");
    }
  }
  params.params() = std::move(next);
  params.advance_step();
}

Matrix l2_normalize_rows(const Matrix& x, std::vector<double>* norms) {
  Matrix y = x;
  if (norms) norms->assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double nrm = norm2(x.row(i));
    if (norms) (*norms)[i] = nrm;
    auto r = y.row(i);
    if (nrm == 0.0) continue;
    for (double& v : r) v /= nrm;
  }
  return y;
}

Matrix l2_normalize_rows_backward(const Matrix& normalized, const std::vector<double>& norms,
                                  const Matrix& upstream) {
  Matrix dx(normalized.rows(), normalized.cols());
  for (std::size_t i = 0; i < normalized.rows(); ++i) {
    if (norms[i] == 0.0) continue;
    auto y = normalized.row(i);
    auto dy = upstream.row(i);
    const double proj = dot(y, dy);
    auto out = dx.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (dy[j] - y[j] * proj) / norms[i];
  }
  return dx;
}

namespace {

Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.flat()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& pre, Matrix upstream) {
  auto p = pre.flat();
  auto g = upstream.flat();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(p[k] > 0.0)) g[k] = 0.0;
  return upstream;
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) {
    throw NumericalError(std::string("non-finite activation in ") + what +
                         "; lower the learning rate");
  }
}

}  // namespace

ParamStore make_gcn_params(const GcnDims& dims, std::uint64_t seed) {
  Rng rng = make_rng(seed, "gcn-init");
  ParamStore ps;
  ps.add("W1", glorot_uniform(dims.input, dims.hidden, rng));
  ps.add("W2", glorot_uniform(dims.hidden, dims.hidden, rng));
  ps.add("U1", glorot_uniform(dims.hidden, dims.projection, rng));
  ps.add("U2", glorot_uniform(dims.projection, dims.projection, rng));
  return ps;
}

GcnTrace gcn_forward(const NormalizedAdjacency& a_hat, const FeatureMatrix& x,
                     const ParamStore& params) {
  GcnTrace t;
  t.ax = spmm(a_hat, x);
  t.pre1 = matmul(t.ax, params.at("W1"));
  t.hidden1 = relu(t.pre1);
  t.a_hidden1 = spmm(a_hat, t.hidden1);
  t.pre2 = matmul(t.a_hidden1, params.at("W2"));
  require_finite(t.pre2, "GCN encoder");
  t.embeddings = l2_normalize_rows(t.pre2, &t.pre2_norms);
  t.proj_pre1 = matmul(t.embeddings, params.at("U1"));
  t.proj_hidden = relu(t.proj_pre1);
  t.proj_pre2 = matmul(t.proj_hidden, params.at("U2"));
  require_finite(t.proj_pre2, "projector");
  t.projections = l2_normalize_rows(t.proj_pre2, &t.proj_norms);
  return t;
}

Gradients gcn_backward(const NormalizedAdjacency& a_hat, const GcnTrace& t,
                       const Matrix& d_projections, const Matrix& d_embeddings,
                       const ParamStore& params) {
  Gradients g;
  const Matrix d_proj_pre2 = l2_normalize_rows_backward(t.projections, t.proj_norms, d_projections);
  g["U2"] = matmul_tn(t.proj_hidden, d_proj_pre2);
  const Matrix d_proj_pre1 =
      relu_backward(t.proj_pre1, matmul_nt(d_proj_pre2, params.at("U2")));
  g["U1"] = matmul_tn(t.embeddings, d_proj_pre1);

  Matrix d_h = matmul_nt(d_proj_pre1, params.at("U1"));
  if (!d_embeddings.empty()) d_h += d_embeddings;

  const Matrix d_pre2 = l2_normalize_rows_backward(t.embeddings, t.pre2_norms, d_h);
  g["W2"] = matmul_tn(t.a_hidden1, d_pre2);
  const Matrix d_hidden1 = spmm_transposed(a_hat, matmul_nt(d_pre2, params.at("W2")));
  const Matrix d_pre1 = relu_backward(t.pre1, d_hidden1);
  g["W1"] = matmul_tn(t.ax, d_pre1);
  return g;
}

ParamStore make_mlp_params(const MlpDims& dims, std::uint64_t seed) {
  Rng rng = make_rng(seed, "mlp-init");
  ParamStore ps;
  ps.add("W1", glorot_uniform(dims.input, dims.hidden, rng));
  ps.add("W2", glorot_uniform(dims.hidden, dims.hidden, rng));
  ps.add("Wc", glorot_uniform(dims.hidden, dims.classes, rng));
  return ps;
}

MlpTrace mlp_forward(const FeatureMatrix& x, const ParamStore& params) {
  MlpTrace t;
  t.input = x;
  t.pre1 = matmul(x, params.at("W1"));
  t.hidden1 = relu(t.pre1);
  t.features = matmul(t.hidden1, params.at("W2"));
  require_finite(t.features, "MLP");
  t.embeddings = l2_normalize_rows(t.features, &t.feature_norms);
  t.logits = matmul(t.features, params.at("Wc"));
  return t;
}

Gradients mlp_backward(const MlpTrace& t, const Matrix& d_embeddings, const Matrix& d_logits,
                       const ParamStore& params) {
  Gradients g;
  Matrix d_features(t.features.rows(), t.features.cols());
  if (!d_embeddings.empty()) {
    d_features += l2_normalize_rows_backward(t.embeddings, t.feature_norms, d_embeddings);
  }
  if (!d_logits.empty()) {
    g["Wc"] = matmul_tn(t.features, d_logits);
    d_features += matmul_nt(d_logits, params.at("Wc"));
  } else {
    const Matrix& wc = params.at("Wc");
    g["Wc"] = Matrix(wc.rows(), wc.cols());
  }
  g["W2"] = matmul_tn(t.hidden1, d_features);
  const Matrix d_pre1 = relu_backward(t.pre1, matmul_nt(d_features, params.at("W2")));
  g["W1"] = matmul_tn(t.input, d_pre1);
  return g;
}

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

std::vector<std::size_t> sample_coordinates(std::size_t total, const GradCheckOptions& opts) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (total > opts.coordinates) {
    Rng rng = make_rng(opts.seed, "grad-check");
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(opts.coordinates);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

double grad_check(const std::function<double()>& loss, ParamStore& params,
                  const Gradients& analytic, const GradCheckOptions& opts) {
  std::vector<std::pair<std::size_t, std::size_t>> coords;  // (param, entry)
  for (std::size_t p = 0; p < params.params().size(); ++p) {
    for (std::size_t k = 0; k < params.params()[p].value.size(); ++k) coords.emplace_back(p, k);
  }
  double worst = 0.0;
  for (std::size_t c : sample_coordinates(coords.size(), opts)) {
    auto [p, k] = coords[c];
    Param& param = params.params()[p];
    double& w = param.value.flat()[k];
    const double saved = w;
    w = saved + opts.epsilon;
    const double up = loss();
    w = saved - opts.epsilon;
    const double down = loss();
    w = saved;
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    const double a = analytic.at(param.name).flat()[k];
    worst = std::max(worst, relative_error(a, numeric));
  }
  return worst;
}

double grad_check(const std::function<double(const Matrix&)>& loss, const Matrix& at,
                  const Matrix& analytic, const GradCheckOptions& opts) {
  Matrix x = at;
  double worst = 0.0;
  for (std::size_t k : sample_coordinates(x.size(), opts)) {
    const double saved = x.flat()[k];
    x.flat()[k] = saved + opts.epsilon;
    const double up = loss(x);
    x.flat()[k] = saved - opts.epsilon;
    const double down = loss(x);
    x.flat()[k] = saved;
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    worst = std::max(worst, relative_error(analytic.flat()[k], numeric));
  }
  return worst;
}

namespace {

constexpr std::array<char, 8> kCkptMagic = {'W', 'G', 'C', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InputError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(kCkptMagic.data(), kCkptMagic.size());
  put(out, kCkptVersion);
  put<std::uint64_t>(out, config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.params().size()));
  for (const auto& p : params.params()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint64_t>(out, p.value.rows());
    put<std::uint64_t>(out, p.value.cols());
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw InputError("write failed for " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCkptMagic) {
    throw InputError(path.string() + " is not a checkpoint");
  }
  if (get<std::uint32_t>(in) != kCkptVersion) throw InputError("unsupported checkpoint version");
  const auto hash = get<std::uint64_t>(in);
  if (config_hash) *config_hash = hash;
  const auto count = get<std::uint32_t>(in);
  ParamStore ps;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw InputError("truncated checkpoint");
    }
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw InputError("truncated checkpoint");
    }
    ps.add(name, std::move(m));
  }
  return ps;
}

}  // namespace wgcl
