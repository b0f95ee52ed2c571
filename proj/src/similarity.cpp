#include "wgcl/similarity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wgcl/errors.hpp"
#include "wgcl/rng.hpp"

namespace wgcl {

std::string to_string(StructuralMode m) {
  return m == StructuralMode::kPprEntry ? "ppr-entry" : "ppr-row-cosine";
}

StructuralMode structural_mode_from_string(const std::string& s) {
  if (s == "ppr-entry") return StructuralMode::kPprEntry;
  if (s == "ppr-row-cosine") return StructuralMode::kPprRowCosine;
  throw ConfigError("unknown structural mode '" + s +
                    "' (expected ppr-entry or ppr-row-cosine)");
}

void SimilarityConfig::validate() const {
  if (!(alpha_ppr > 0.0 && alpha_ppr < 1.0)) {
    throw ConfigError("alpha_ppr must lie in (0, 1)");
  }
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (gamma && !std::isfinite(*gamma)) throw ConfigError("gamma must be finite");
}

std::uint64_t SimilarityConfig::hash() const {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=" << alpha_ppr << ";K=" << iterations << ";mode=" << to_string(structural_mode)
     << ";beta=" << beta << ";gamma=" << (gamma ? std::to_string(*gamma) : "auto")
     << ";clamp=" << clamp_nonnegative;
  return fnv1a64(os.str());
}

Matrix ppr_exact(const NormalizedAdjacency& a, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(a.n);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t k = a.indptr[i]; k < a.indptr[i + 1]; ++k)
      system(static_cast<Eigen::Index>(i), a.indices[k]) -= (1.0 - alpha) * a.values[k];

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
  if (!inv.allFinite()) throw NumericalError("ppr_exact: linear solve failed");

  Matrix p(a.n, a.n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      p(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = alpha * inv(i, j);
  return p;
}

Matrix ppr_iterative(const NormalizedAdjacency& a, double alpha, int iterations) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  Matrix p = Matrix::identity(a.n);
  for (int k = 0; k < iterations; ++k) {
    p = spmm(a, p);
    p *= 1.0 - alpha;
    for (std::size_t i = 0; i < a.n; ++i) p(i, i) += alpha;
  }
  return p;
}

Matrix row_cosine(const Matrix& m) {
  const std::size_t n = m.rows();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm2(m.row(i));
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (norms[i] == 0.0) continue;
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[j] == 0.0) continue;
      const double c = std::clamp(dot(m.row(i), m.row(j)) / (norms[i] * norms[j]), -1.0, 1.0);
      out(i, j) = c;
      out(j, i) = c;
    }
  }
  return out;
}

SimilarityMatrix structural_similarity(const Matrix& ppr, StructuralMode mode) {
  if (ppr.rows() != ppr.cols()) throw InputError("structural_similarity: PPR not square");
  if (mode == StructuralMode::kPprEntry) return {ppr, SimilarityKind::kStructural};
  return {row_cosine(ppr), SimilarityKind::kStructural};
}

SimilarityMatrix feature_similarity(const FeatureMatrix& x) {
  return {row_cosine(x), SimilarityKind::kFeature};
}

double auto_gamma(const SimilarityMatrix& sim_g, const SimilarityMatrix& sim_f) {
  double sum_g = 0.0;
  double sum_f = 0.0;
  const std::size_t n = sim_g.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum_g += sim_g(i, j);
      sum_f += sim_f(i, j);
    }
  }
  if (sum_f == 0.0) {
    throw ConfigError(
        "feature similarity sums to zero off the diagonal; set a fixed gamma instead of auto");
  }
  return sum_g / sum_f;
}

SimilarityMatrix fuse(const SimilarityMatrix& sim_g, const SimilarityMatrix& sim_f,
                      const SimilarityConfig& cfg) {
  cfg.validate();
  if (sim_g.values.rows() != sim_f.values.rows() ||
      sim_g.values.cols() != sim_f.values.cols()) {
    throw InputError("fuse: similarity matrices differ in shape");
  }
  // The scale factor is irrelevant at beta = 0, so a degenerate feature
  // similarity is only an error when it would actually be used.
  double gamma = 1.0;
  if (cfg.gamma) {
    gamma = *cfg.gamma;
  } else if (cfg.beta > 0.0) {
    gamma = auto_gamma(sim_g, sim_f);
  }

  SimilarityMatrix out{Matrix(sim_g.size(), sim_g.size()), SimilarityKind::kFused};
  auto g = sim_g.values.flat();
  auto f = sim_f.values.flat();
  auto o = out.values.flat();
  for (std::size_t k = 0; k < o.size(); ++k) {
    double s = cfg.beta * f[k] * gamma + (1.0 - cfg.beta) * g[k];
    if (cfg.clamp_nonnegative && s < 0.0) s = 0.0;
    o[k] = s;
  }
  return out;
}

SimilarityMatrix compute_similarity(const Graph& g, const FeatureMatrix& x,
                                    const SimilarityConfig& cfg) {
  cfg.validate();
  if (x.rows() != g.num_nodes()) {
    throw InputError("feature matrix has " + std::to_string(x.rows()) + " rows but graph has " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  const auto a = normalized_adjacency(g, /*add_self_loops=*/false);
  const auto sim_g =
      structural_similarity(ppr_iterative(a, cfg.alpha_ppr, cfg.iterations), cfg.structural_mode);
  const auto sim_f = feature_similarity(x);
  return fuse(sim_g, sim_f, cfg);
}

SimilarityStats summarize(const SimilarityMatrix& s) {
  SimilarityStats st;
  auto f = s.values.flat();
  if (f.empty()) return st;
  st.min = *std::min_element(f.begin(), f.end());
  st.max = *std::max_element(f.begin(), f.end());
  double sum = 0.0;
  for (double v : f) sum += v;
  st.mean = sum / static_cast<double>(f.size());
  return st;
}

namespace {

constexpr std::array<char, 8> kSimMagic = {'W', 'G', 'C', 'L', 'S', 'I', 'M', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw InputError("truncated similarity cache " + path.string());
  }
  return v;
}

}  // namespace

void write_similarity_cache(const std::filesystem::path& path, const SimilarityMatrix& s,
                            std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write similarity cache " + path.string());
  out.write(kSimMagic.data(), kSimMagic.size());
  put<std::uint64_t>(out, s.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.kind));
  put<std::uint64_t>(out, config_hash);
  out.write(reinterpret_cast<const char*>(s.values.data()),
            static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  if (!out) throw InputError("write failed for " + path.string());
}

std::optional<SimilarityMatrix> read_similarity_cache(const std::filesystem::path& path,
                                                      std::uint64_t config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSimMagic) {
    throw InputError(path.string() + " is not a similarity cache");
  }
  const auto n = get<std::uint64_t>(in, path);
  const auto kind = get<std::uint32_t>(in, path);
  const auto hash = get<std::uint64_t>(in, path);
  if (hash != config_hash) return std::nullopt;
  if (kind < 1 || kind > 3) throw InputError(path.string() + ": unknown similarity kind");

  SimilarityMatrix s{Matrix(n, n), static_cast<SimilarityKind>(kind)};
  if (!in.read(reinterpret_cast<char*>(s.values.data()),
               static_cast<std::streamsize>(s.values.size() * sizeof(double)))) {
    throw InputError("truncated similarity cache " + path.string());
  }
  return s;
}

}  // namespace wgcl
