#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "wgcl/config.hpp"
#include "wgcl/data.hpp"
#include "wgcl/errors.hpp"
#include "wgcl/objectives.hpp"
#include "wgcl/pipeline.hpp"
#include "wgcl/similarity.hpp"
#include "wgcl/weighting.hpp"

namespace py = pybind11;
using namespace wgcl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), a.mutable_data());
  return a;
}

Graph graph_from(const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
                 std::size_t n) {
  if (edges.size() > 0 && (edges.ndim() != 2 || edges.shape(1) != 2)) {
    throw py::value_error("edges must have shape (m, 2)");
  }
  std::vector<Edge> list;
  const std::size_t m = edges.size() == 0 ? 0 : edges.shape(0);
  const long long* p = edges.data();
  for (std::size_t i = 0; i < m; ++i) {
    if (p[2 * i] < 0 || p[2 * i + 1] < 0) throw InputError("negative node id");
    list.emplace_back(static_cast<NodeId>(p[2 * i]), static_cast<NodeId>(p[2 * i + 1]));
  }
  return build_graph(list, n);
}

py::array_t<long long> edges_of(const Graph& g) {
  const auto list = g.edge_list();
  py::array_t<long long> a({list.size(), std::size_t{2}});
  auto* p = a.mutable_data();
  for (std::size_t i = 0; i < list.size(); ++i) {
    p[2 * i] = list[i].first;
    p[2 * i + 1] = list[i].second;
  }
  return a;
}

ExperimentConfig experiment_from(const py::object& cfg) {
  if (cfg.is_none()) return {};
  const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return experiment_from_json(nlohmann::json::parse(text));
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["model"] = to_string(r.model);
  d["variant"] = to_string(r.variant);
  d["config_hash"] = r.config_hash;
  py::list losses;
  py::list skipped;
  for (const auto& e : r.epochs) {
    losses.append(e.loss);
    skipped.append(e.skipped);
  }
  d["losses"] = losses;
  d["skipped"] = skipped;
  d["accuracy"] = r.accuracy_mean;
  d["wall_seconds"] = r.wall_seconds;
  d["weight_computations"] = r.weight_computations;
  d["report_hash"] = r.hash();
  return d;
}

Dataset dataset_from(const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
                     const Array& features, const std::vector<int>& labels) {
  Dataset d;
  d.features = to_matrix(features);
  d.labels = labels;
  if (d.features.rows() != labels.size()) throw InputError("features and labels disagree on n");
  d.graph = graph_from(edges, labels.size());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Similarity-weighted graph contrastive learning";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "normalized_adjacency",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         std::size_t n, bool self_loops) {
        return to_array(normalized_adjacency(graph_from(edges, n), self_loops).to_dense());
      },
      py::arg("edges"), py::arg("n"), py::arg("self_loops") = false);

  m.def(
      "ppr_exact",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         std::size_t n, double alpha) {
        return to_array(ppr_exact(normalized_adjacency(graph_from(edges, n), false), alpha));
      },
      py::arg("edges"), py::arg("n"), py::arg("alpha") = 0.15);

  m.def(
      "ppr_iterative",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         std::size_t n, double alpha, int iterations) {
        return to_array(
            ppr_iterative(normalized_adjacency(graph_from(edges, n), false), alpha, iterations));
      },
      py::arg("edges"), py::arg("n"), py::arg("alpha") = 0.15, py::arg("iterations") = 10);

  m.def(
      "similarity",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         const Array& features, double beta, std::optional<double> gamma,
         const std::string& mode, double alpha, int iterations) {
        const Matrix x = to_matrix(features);
        SimilarityConfig cfg;
        cfg.beta = beta;
        cfg.gamma = gamma;
        cfg.structural_mode = structural_mode_from_string(mode);
        cfg.alpha_ppr = alpha;
        cfg.iterations = iterations;
        return to_array(compute_similarity(graph_from(edges, x.rows()), x, cfg).values);
      },
      py::arg("edges"), py::arg("features"), py::arg("beta") = 0.5,
      py::arg("gamma") = py::none(), py::arg("mode") = "ppr-entry", py::arg("alpha") = 0.15,
      py::arg("iterations") = 10);

  m.def(
      "positive_weights",
      [](const Array& sims, std::size_t anchor, const std::vector<std::size_t>& candidates,
         double tau_pos) {
        return positive_weights(anchor, SimilarityMatrix{to_matrix(sims)}, candidates, tau_pos);
      },
      py::arg("sims"), py::arg("anchor"), py::arg("candidates"), py::arg("tau_pos"));

  m.def(
      "negative_weights",
      [](const Array& sims, std::size_t anchor, const std::vector<std::size_t>& candidates,
         double tau_neg) {
        return negative_weights(anchor, SimilarityMatrix{to_matrix(sims)}, candidates, tau_neg);
      },
      py::arg("sims"), py::arg("anchor"), py::arg("candidates"), py::arg("tau_neg"));

  m.def(
      "infonce",
      [](const Array& emb, std::size_t anchor, std::size_t positive,
         const std::vector<std::size_t>& negatives, double tau) {
        const LossResult r = infonce(to_matrix(emb), anchor, positive, negatives, tau);
        return py::make_tuple(r.value, to_array(r.grad));
      },
      py::arg("emb"), py::arg("anchor"), py::arg("positive"), py::arg("negatives"),
      py::arg("tau") = 0.5);

  m.def(
      "enhanced_loss",
      [](const Array& emb, std::size_t anchor, std::size_t counterpart,
         const std::vector<std::size_t>& vm, const std::vector<double>& w_pos,
         const std::vector<std::size_t>& vn, const std::vector<double>& w_neg, double tau) {
        const LossResult r =
            enhanced_loss(to_matrix(emb), anchor, counterpart, vm, w_pos, vn, w_neg, tau);
        return py::make_tuple(r.value, to_array(r.grad));
      },
      py::arg("emb"), py::arg("anchor"), py::arg("counterpart"), py::arg("vm"), py::arg("w_pos"),
      py::arg("vn"), py::arg("w_neg"), py::arg("tau") = 0.5);

  m.def(
      "gen_sbm",
      [](const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
         std::size_t feature_dim, double mean_norm, double noise, std::uint64_t seed) {
        SbmSpec spec;
        spec.block_sizes = block_sizes;
        spec.p_in = p_in;
        spec.p_out = p_out;
        spec.feature_dim = feature_dim;
        spec.mean_norm = mean_norm;
        spec.noise = noise;
        spec.seed = seed;
        const Dataset d = gen_sbm(spec);
        return py::make_tuple(edges_of(d.graph), to_array(d.features), d.labels);
      },
      py::arg("block_sizes"), py::arg("p_in") = 0.1, py::arg("p_out") = 0.01,
      py::arg("feature_dim") = 16, py::arg("mean_norm") = 1.0, py::arg("noise") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "make_split",
      [](const std::vector<int>& labels, double train, double val, double test,
         std::uint64_t seed) {
        SplitSpec spec;
        spec.train = train;
        spec.val = val;
        spec.test = test;
        const DataSplit s = make_split(labels, spec, seed);
        return py::make_tuple(s.train, s.val, s.test);
      },
      py::arg("labels"), py::arg("train") = 0.1, py::arg("val") = 0.1, py::arg("test") = 0.8,
      py::arg("seed") = 0);

  m.def(
      "linear_probe",
      [](const Array& emb, const std::vector<int>& labels, const std::vector<std::size_t>& train,
         const std::vector<std::size_t>& val, const std::vector<std::size_t>& test) {
        const ProbeResult r =
            linear_probe(to_matrix(emb), labels, DataSplit{train, val, test}, ProbeConfig{});
        return py::make_tuple(r.test_accuracy, r.val_accuracy);
      },
      py::arg("emb"), py::arg("labels"), py::arg("train"), py::arg("val"), py::arg("test"));

  m.def(
      "train_grace",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         const Array& features, const std::vector<int>& labels, const py::object& config) {
        const Dataset d = dataset_from(edges, features, labels);
        ExperimentConfig cfg = experiment_from(config);
        cfg.model = ModelKind::kGrace;
        GraceRun run;
        {
          py::gil_scoped_release release;
          run = train_grace(d.graph, d.features, cfg, &d.labels);
        }
        return py::make_tuple(to_array(run.embeddings), report_dict(run.report));
      },
      py::arg("edges"), py::arg("features"), py::arg("labels"), py::arg("config") = py::none());

  m.def(
      "run_experiment",
      [](const py::array_t<long long, py::array::c_style | py::array::forcecast>& edges,
         const Array& features, const std::vector<int>& labels, const py::object& config) {
        const Dataset d = dataset_from(edges, features, labels);
        const ExperimentConfig cfg = experiment_from(config);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(d, cfg);
        }
        return report_dict(r);
      },
      py::arg("edges"), py::arg("features"), py::arg("labels"), py::arg("config") = py::none());

  m.def(
      "default_config",
      []() {
        return py::module_::import("json").attr("loads")(to_json(ExperimentConfig{}).dump());
      });
}
