// Finite-difference scenarios covering every supported op kind, shared by
// the unit suite and the acceptance gate. HPD-consuming ops are driven
// through the B^H B + I construction so every perturbed evaluation stays in
// their documented domain.

#include "test_support.hpp"

namespace lbtest {

using lb::ComplexMatrix;
using lb::Graph;
using lb::VarId;

namespace {
std::size_t rdim(lb::CounterRng& rng) { return 1 + rng.next_u64() % 6; }
}  // namespace

std::vector<OpFdCase> op_fd_cases() {
  using Leaves = std::vector<ComplexMatrix>;
  using Flags = std::vector<bool>;
  std::vector<OpFdCase> cases;

  cases.push_back({"add", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto m = rdim(rng), n = rdim(rng);
                     lv = {random_complex(rng, m, n), random_complex(rng, m, n)};
                     fl = {false, false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.add(ids[0], ids[1]));
                     };
                   }});

  cases.push_back({"subtract", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto m = rdim(rng), n = rdim(rng);
                     lv = {random_complex(rng, m, n), random_complex(rng, m, n)};
                     fl = {false, false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.subtract(ids[0], ids[1]));
                     };
                   }});

  cases.push_back(
      {"scalar-scale(const)", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
         lv = {random_complex(rng, rdim(rng), rdim(rng))};
         fl = {false};
         b = [](Graph& g, const std::vector<VarId>& ids) {
           return g.frobenius_norm_squared(
               g.scalar_scale(ids[0], std::complex<double>{0.7, -0.4}));
         };
       }});

  cases.push_back(
      {"scalar-scale(node)", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
         lv = {random_complex(rng, rdim(rng), rdim(rng)), random_complex(rng, 1, 1)};
         fl = {false, false};
         b = [](Graph& g, const std::vector<VarId>& ids) {
           return g.frobenius_norm_squared(g.scalar_scale(ids[0], ids[1]));
         };
       }});

  cases.push_back({"hadamard", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto m = rdim(rng), n = rdim(rng);
                     lv = {random_complex(rng, m, n), random_complex(rng, m, n)};
                     fl = {false, false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.hadamard(ids[0], ids[1]));
                     };
                   }});

  cases.push_back({"matmul", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto m = rdim(rng), k = rdim(rng), n = rdim(rng);
                     lv = {random_complex(rng, m, k), random_complex(rng, k, n)};
                     fl = {false, false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.matmul(ids[0], ids[1]));
                     };
                   }});

  cases.push_back(
      {"hermitian-transpose", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
         const auto m = rdim(rng), n = rdim(rng), p = rdim(rng);
         lv = {random_complex(rng, m, n), random_complex(rng, m, p)};
         fl = {false, false};
         b = [](Graph& g, const std::vector<VarId>& ids) {
           return g.frobenius_norm_squared(g.matmul(g.hermitian_transpose(ids[0]), ids[1]));
         };
       }});

  cases.push_back({"trace-real", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto m = rdim(rng), k = rdim(rng);
                     lv = {random_complex(rng, m, k), random_complex(rng, k, m)};
                     fl = {false, false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.trace_real(g.matmul(ids[0], ids[1]));
                     };
                   }});

  cases.push_back({"frobenius-norm-squared",
                   [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     lv = {random_complex(rng, rdim(rng), rdim(rng))};
                     fl = {false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(ids[0]);
                     };
                   }});

  cases.push_back({"inverse_hpd", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                     GraphBuilder& b) {
                     const auto n = 1 + rng.next_u64() % 4;
                     lv = {random_complex(rng, n, n)};
                     fl = {false};
                     b = [n](Graph& g, const std::vector<VarId>& ids) {
                       auto eye = g.constant(ComplexMatrix::identity(n));
                       auto hpd = g.add(g.matmul(g.hermitian_transpose(ids[0]), ids[0]), eye);
                       return g.frobenius_norm_squared(g.inverse_hpd(hpd));
                     };
                   }});

  cases.push_back({"logdet_hpd", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                    GraphBuilder& b) {
                     const auto n = 1 + rng.next_u64() % 4;
                     lv = {random_complex(rng, n, n)};
                     fl = {false};
                     b = [n](Graph& g, const std::vector<VarId>& ids) {
                       auto eye = g.constant(ComplexMatrix::identity(n));
                       auto hpd = g.add(g.matmul(g.hermitian_transpose(ids[0]), ids[0]), eye);
                       return g.logdet_hpd(hpd);
                     };
                   }});

  cases.push_back({"log2-scalar", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                     GraphBuilder& b) {
                     lv = {random_complex(rng, rdim(rng), rdim(rng))};
                     fl = {false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       auto one = g.real_constant(ComplexMatrix::real_scalar(1.0));
                       return g.log2_scalar(g.add(g.frobenius_norm_squared(ids[0]), one));
                     };
                   }});

  cases.push_back({"relu-scalar", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                     GraphBuilder& b) {
                     lv = {random_complex(rng, rdim(rng), rdim(rng))};
                     fl = {false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       auto c = g.real_constant(ComplexMatrix::real_scalar(0.5));
                       return g.relu_scalar(g.add(g.frobenius_norm_squared(ids[0]), c));
                     };
                   }});

  cases.push_back({"sigmoid-elementwise",
                   [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     lv = {random_real(rng, rdim(rng), rdim(rng))};
                     fl = {true};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.sigmoid(ids[0]));
                     };
                   }});

  cases.push_back({"tanh-elementwise",
                   [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     lv = {random_real(rng, rdim(rng), rdim(rng))};
                     fl = {true};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.tanh(ids[0]));
                     };
                   }});

  cases.push_back({"variance-of-vector",
                   [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     lv = {random_real(rng, 1, 2 + rng.next_u64() % 5)};
                     fl = {true};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.variance_of_vector(ids[0]);
                     };
                   }});

  cases.push_back({"sqrt-scalar", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                     GraphBuilder& b) {
                     lv = {random_complex(rng, rdim(rng), rdim(rng))};
                     fl = {false};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       auto one = g.real_constant(ComplexMatrix::real_scalar(1.0));
                       return g.sqrt_scalar(g.add(g.frobenius_norm_squared(ids[0]), one));
                     };
                   }});

  cases.push_back({"concat-columns", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                        GraphBuilder& b) {
                     const auto m = rdim(rng), n1 = rdim(rng), n2 = rdim(rng);
                     const auto mixer = random_complex(rng, n1 + n2, 2);
                     lv = {random_complex(rng, m, n1), random_complex(rng, m, n2)};
                     fl = {false, false};
                     b = [mixer](Graph& g, const std::vector<VarId>& ids) {
                       auto mix = g.constant(mixer);
                       return g.frobenius_norm_squared(
                           g.matmul(g.concat_columns(ids[0], ids[1]), mix));
                     };
                   }});

  cases.push_back({"split-real-imag", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                         GraphBuilder& b) {
                     const auto m = rdim(rng), n = rdim(rng);
                     const auto mixer = random_real(rng, 2 * n, 3);
                     lv = {random_complex(rng, m, n)};
                     fl = {false};
                     b = [mixer](Graph& g, const std::vector<VarId>& ids) {
                       auto mix = g.real_constant(mixer);
                       return g.frobenius_norm_squared(g.matmul(g.split_real_imag(ids[0]), mix));
                     };
                   }});

  cases.push_back({"join-real-imag", [](lb::CounterRng& rng, Leaves& lv, Flags& fl,
                                        GraphBuilder& b) {
                     const auto m = rdim(rng), n = rdim(rng);
                     const auto mixer = random_complex(rng, n, 2);
                     lv = {random_real(rng, m, 2 * n)};
                     fl = {true};
                     b = [mixer](Graph& g, const std::vector<VarId>& ids) {
                       auto mix = g.constant(mixer);
                       return g.frobenius_norm_squared(g.matmul(g.join_real_imag(ids[0]), mix));
                     };
                   }});

  cases.push_back({"affine", [](lb::CounterRng& rng, Leaves& lv, Flags& fl, GraphBuilder& b) {
                     const auto batch = rdim(rng), f = rdim(rng), d = rdim(rng);
                     lv = {random_real(rng, d, f), random_real(rng, batch, f),
                           random_real(rng, 1, d)};
                     fl = {true, true, true};
                     b = [](Graph& g, const std::vector<VarId>& ids) {
                       return g.frobenius_norm_squared(g.affine(ids[0], ids[1], ids[2]));
                     };
                   }});

  return cases;
}

}  // namespace lbtest
