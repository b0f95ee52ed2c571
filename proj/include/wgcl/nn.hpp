#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wgcl/graph.hpp"
#include "wgcl/matrix.hpp"
#include "wgcl/rng.hpp"

namespace wgcl {

struct Param {
  std::string name;
  Matrix value;
  Matrix first_moment;
  Matrix second_moment;
};

using Gradients = std::map<std::string, Matrix>;

/// Named parameter matrices plus their Adam state. Shapes are fixed once a
/// parameter is added.
class ParamStore {
 public:
  Matrix& add(const std::string& name, Matrix init);
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t step_count() const { return step_; }
  void advance_step() { ++step_; }

  /// Hash of names, shapes, and values; equal stores hash equal.
  std::uint64_t hash() const;
  Gradients zero_gradients() const;

 private:
  std::vector<Param> params_;
  std::size_t step_ = 0;
};

/// Uniform in ±sqrt(6 / (rows + cols)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty folded into the gradient.
  double weight_decay = 0.0;
};

/// One bias-corrected Adam update. Throws NumericalError if any updated
/// entry is non-finite; the store is left untouched in that case.
void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg);

// Row-wise ℓ2 normalization. Zero rows map to zero rows and receive zero
// gradient.
Matrix l2_normalize_rows(const Matrix& x, std::vector<double>* norms = nullptr);
Matrix l2_normalize_rows_backward(const Matrix& normalized, const std::vector<double>& norms,
                                  const Matrix& upstream);

// ---------------------------------------------------------------------------
// Two-layer GCN encoder followed by a two-layer projector:
//   H = normalize(Â · relu(Â·X·W1) · W2)
//   Z = normalize(relu(H·U1) · U2)
// ---------------------------------------------------------------------------

struct GcnDims {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t projection = 64;
};

ParamStore make_gcn_params(const GcnDims& dims, std::uint64_t seed);

struct GcnTrace {
  Matrix ax;          // Â·X
  Matrix pre1;        // Â·X·W1
  Matrix hidden1;     // relu(pre1)
  Matrix a_hidden1;   // Â·hidden1
  Matrix pre2;        // a_hidden1·W2
  std::vector<double> pre2_norms;
  Matrix embeddings;  // H
  Matrix proj_pre1;   // H·U1
  Matrix proj_hidden; // relu(proj_pre1)
  Matrix proj_pre2;   // proj_hidden·U2
  std::vector<double> proj_norms;
  Matrix projections; // Z
};

GcnTrace gcn_forward(const NormalizedAdjacency& a_hat, const FeatureMatrix& x,
                     const ParamStore& params);

/// Gradients of all four weight matrices given dL/dZ and, optionally, a
/// direct dL/dH (pass an empty matrix when H feeds nothing but the projector).
Gradients gcn_backward(const NormalizedAdjacency& a_hat, const GcnTrace& trace,
                       const Matrix& d_projections, const Matrix& d_embeddings,
                       const ParamStore& params);

// ---------------------------------------------------------------------------
// Two-layer MLP with a linear classification head:
//   E = relu(X·W1)·W2,  Z = normalize(E),  logits = E·Wc
// ---------------------------------------------------------------------------

struct MlpDims {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t classes = 2;
};

ParamStore make_mlp_params(const MlpDims& dims, std::uint64_t seed);

struct MlpTrace {
  Matrix input;
  Matrix pre1;
  Matrix hidden1;
  Matrix features;  // E
  std::vector<double> feature_norms;
  Matrix embeddings;  // Z
  Matrix logits;
};

MlpTrace mlp_forward(const FeatureMatrix& x, const ParamStore& params);

Gradients mlp_backward(const MlpTrace& trace, const Matrix& d_embeddings,
                       const Matrix& d_logits, const ParamStore& params);

// ---------------------------------------------------------------------------
// Finite-difference verification.
// ---------------------------------------------------------------------------

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled (all of them when fewer exist).
  std::size_t coordinates = 200;
  std::uint64_t seed = 0;
};

/// Max over sampled coordinates of |analytic − numeric| /
/// max(1e-8, |analytic| + |numeric|), using central differences. Parameters
/// are perturbed in place and restored.
double grad_check(const std::function<double()>& loss, ParamStore& params,
                  const Gradients& analytic, const GradCheckOptions& opts = {});

/// Same check for a loss of a single matrix argument.
double grad_check(const std::function<double(const Matrix&)>& loss, const Matrix& at,
                  const Matrix& analytic, const GradCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Checkpoints: magic, version, config hash, then (name, shape, row-major
// doubles) per parameter. Optimizer state is not stored.
// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     std::uint64_t config_hash);
ParamStore load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

}  // namespace wgcl
