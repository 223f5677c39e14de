// Python bindings for the main operations: dataset handling, graph
// conversion, matching, metrics and the two model families.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rgvae/distmult.hpp"
#include "rgvae/eval_lp.hpp"
#include "rgvae/experiments.hpp"
#include "rgvae/gradcheck.hpp"
#include "rgvae/graph_match.hpp"
#include "rgvae/kg_data.hpp"
#include "rgvae/rgvae.hpp"

namespace py = pybind11;
using namespace rgvae;

namespace {

std::vector<Triple> to_triples(const std::vector<std::tuple<int, int, int>>& raw) {
    std::vector<Triple> out;
    out.reserve(raw.size());
    for (const auto& [s, r, o] : raw) out.push_back({s, r, o});
    return out;
}

std::vector<std::tuple<int, int, int>> from_triples(const std::vector<Triple>& triples) {
    std::vector<std::tuple<int, int, int>> out;
    out.reserve(triples.size());
    for (const Triple& t : triples) out.emplace_back(t.s, t.r, t.o);
    return out;
}

}  // namespace

PYBIND11_MODULE(rgvae_py, m) {
    m.doc() = "Relational graph VAE toolkit";

    py::class_<TripleStore>(m, "TripleStore")
        .def_static("load", &TripleStore::load, py::arg("train"), py::arg("valid"),
                    py::arg("test"), py::arg("final_mode") = false)
        .def_property_readonly("num_entities", &TripleStore::num_entities)
        .def_property_readonly("num_relations", &TripleStore::num_relations)
        .def_property_readonly("total_triples", &TripleStore::total_triples)
        .def("train", [](const TripleStore& s) { return from_triples(s.train()); })
        .def("valid", [](const TripleStore& s) { return from_triples(s.valid()); })
        .def("test", [](const TripleStore& s) { return from_triples(s.test()); })
        .def("contains",
             [](const TripleStore& s, int a, int r, int b) {
                 return s.contains({a, r, b});
             })
        .def("triple_string", [](const TripleStore& s, int a, int r, int b) {
            return s.triple_string({a, r, b});
        });

    m.def("input_dim", &rgvae_input_dim, py::arg("n"), py::arg("d_e"), py::arg("d_r"));

    m.def("hungarian_assign",
          [](const std::vector<std::vector<double>>& cost) {
              if (cost.empty()) throw contract_error("empty cost matrix");
              size_t n = cost.size(), k = cost[0].size();
              std::vector<double> flat;
              flat.reserve(n * k);
              for (const auto& row : cost) {
                  if (row.size() != k) throw shape_error("ragged cost matrix");
                  flat.insert(flat.end(), row.begin(), row.end());
              }
              return hungarian_assign(flat, n, k);
          },
          "Minimum-cost row-to-column assignment");

    m.def("lp_metrics",
          [](const std::vector<double>& head_ranks, const std::vector<double>& tail_ranks) {
              if (head_ranks.size() != tail_ranks.size() || head_ranks.empty())
                  throw contract_error("rank lists must be non-empty and equal length");
              double mrr = 0, h1 = 0, h3 = 0, h10 = 0;
              for (size_t i = 0; i < head_ranks.size(); ++i) {
                  mrr += 1.0 / head_ranks[i] + 1.0 / tail_ranks[i];
                  h1 += (head_ranks[i] <= 1) + (tail_ranks[i] <= 1);
                  h3 += (head_ranks[i] <= 3) + (tail_ranks[i] <= 3);
                  h10 += (head_ranks[i] <= 10) + (tail_ranks[i] <= 10);
              }
              double d = 2.0 * static_cast<double>(head_ranks.size());
              py::dict out;
              out["mrr"] = mrr / d;
              out["hits1"] = h1 / d;
              out["hits3"] = h3 / d;
              out["hits10"] = h10 / d;
              return out;
          },
          "MRR and Hits@k from per-triple head/tail ranks");

    m.def("triples_to_graphs",
          [](const std::vector<std::tuple<int, int, int>>& triples, size_t n, size_t d_e,
             size_t d_r) {
              auto graphs = triples_to_graphs(to_triples(triples), n, d_e, d_r);
              py::list out;
              for (const auto& g : graphs) {
                  py::dict d;
                  d["adj"] = std::vector<int>(g.adj.begin(), g.adj.end());
                  d["edge_rel"] = g.edge_rel;
                  d["node_ent"] = g.node_ent;
                  out.append(d);
              }
              return out;
          });

    m.def("round_trip_triples",
          [](const std::vector<std::tuple<int, int, int>>& triples, size_t n, size_t d_e,
             size_t d_r) {
              return from_triples(
                  graphs_to_triples(triples_to_graphs(to_triples(triples), n, d_e, d_r)));
          },
          "triples -> graphs -> triples");

    py::class_<Rgvae>(m, "Rgvae")
        .def(py::init([](size_t d_e, size_t d_r, size_t d_z, size_t d_h, double beta,
                         double delta, bool perminv, const std::string& encoder,
                         uint64_t seed) {
                 RgvaeConfig cfg;
                 cfg.d_e = d_e;
                 cfg.d_r = d_r;
                 cfg.d_z = d_z;
                 cfg.d_h = d_h;
                 cfg.beta = beta;
                 cfg.delta = delta;
                 cfg.perminv = perminv;
                 cfg.encoder = encoder == "gcn" ? EncoderKind::gcn : EncoderKind::mlp;
                 return Rgvae(cfg, seed);
             }),
             py::arg("d_e"), py::arg("d_r"), py::arg("d_z") = 16, py::arg("d_h") = 64,
             py::arg("beta") = 1.0, py::arg("delta") = 0.0, py::arg("perminv") = true,
             py::arg("encoder") = "mlp", py::arg("seed") = 0)
        .def("fit",
             [](Rgvae& model, const std::vector<std::tuple<int, int, int>>& triples,
                int epochs, int batch_size, double lr, uint64_t seed) {
                 OptimizerConfig oc;
                 oc.learning_rate = lr;
                 Ranger opt(oc);
                 Rng shuffle(seed);
                 std::vector<Triple> pool = to_triples(triples);
                 const RgvaeConfig& cfg = model.config();
                 double last = 0.0;
                 for (int e = 0; e < epochs; ++e) {
                     for (size_t i = pool.size(); i > 1; --i)
                         std::swap(pool[i - 1], pool[shuffle.index(i)]);
                     for (size_t off = 0; off < pool.size();
                          off += static_cast<size_t>(batch_size)) {
                         size_t end = std::min(off + static_cast<size_t>(batch_size),
                                               pool.size());
                         std::vector<Triple> chunk(pool.begin() + off, pool.begin() + end);
                         auto graphs = triples_to_graphs(chunk, cfg.n, cfg.d_e, cfg.d_r);
                         last = model.train_step(graphs, opt).total;
                     }
                 }
                 return last;
             },
             py::arg("triples"), py::arg("epochs") = 10, py::arg("batch_size") = 32,
             py::arg("lr") = 1e-3, py::arg("seed") = 0)
        .def("score",
             [](Rgvae& model, int s, int r, int o) {
                 return model.score_triples({{s, r, o}})[0];
             })
        .def("sample",
             [](Rgvae& model, size_t count, double sigma, uint64_t seed) {
                 Rng rng(seed);
                 const RgvaeConfig& cfg = model.config();
                 autograd::NoGradGuard ng;
                 std::vector<double> z(count * cfg.d_z);
                 for (double& v : z) v = sigma * rng.normal();
                 DecodedLogits logits =
                     model.decode(Tensor::from({count, cfg.d_z}, std::move(z)), false);
                 return from_triples(graphs_to_triples(sample_discrete(logits, rng)));
             },
             py::arg("count") = 16, py::arg("sigma") = 1.0, py::arg("seed") = 0)
        .def("save", &Rgvae::save)
        .def_static("load", &Rgvae::load);

    py::class_<DistMult>(m, "DistMult")
        .def(py::init([](size_t d_e, size_t d_r, size_t d_emb, bool variational,
                         uint64_t seed) {
                 DistMultConfig cfg;
                 cfg.d_e = d_e;
                 cfg.d_r = d_r;
                 cfg.d_emb = d_emb;
                 cfg.variational = variational;
                 return DistMult(cfg, seed);
             }),
             py::arg("d_e"), py::arg("d_r"), py::arg("d_emb") = 32,
             py::arg("variational") = false, py::arg("seed") = 0)
        .def("score",
             [](DistMult& model, int s, int r, int o) { return model.score({s, r, o}); })
        .def("fit",
             [](DistMult& model, const std::vector<std::tuple<int, int, int>>& triples,
                int epochs, int batch_size, int negatives, double lr, uint64_t seed) {
                 OptimizerConfig oc;
                 oc.learning_rate = lr;
                 Ranger opt(oc);
                 Rng rng(seed);
                 std::vector<Triple> pool = to_triples(triples);
                 double last = 0.0;
                 for (int e = 0; e < epochs; ++e) {
                     for (size_t i = pool.size(); i > 1; --i)
                         std::swap(pool[i - 1], pool[rng.index(i)]);
                     for (size_t off = 0; off < pool.size();
                          off += static_cast<size_t>(batch_size)) {
                         size_t end = std::min(off + static_cast<size_t>(batch_size),
                                               pool.size());
                         std::vector<Triple> chunk(pool.begin() + off, pool.begin() + end);
                         last = model.train_step(chunk, negatives, DmLossKind::bce, opt, rng);
                     }
                 }
                 return last;
             },
             py::arg("triples"), py::arg("epochs") = 10, py::arg("batch_size") = 64,
             py::arg("negatives") = 10, py::arg("lr") = 0.05, py::arg("seed") = 0);

    m.def("gradcheck", []() {
        auto results = run_gradcheck_suite();
        py::dict out;
        for (const auto& r : results) out[py::str(r.name)] = r.max_rel_error;
        return out;
    });
}
