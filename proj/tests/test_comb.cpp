#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <qstrat/comb.hpp>
#include <qstrat/errors.hpp>

#include "test_util.hpp"

using namespace qstrat;
using qstrat::testing::max_abs_diff;
using qstrat::testing::random_density;
using qstrat::testing::random_hermitian;

namespace {

CMatrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Channel action read off the Choi operator: Tr_A[(rho^T ⊗ I) Γ].
CMatrix apply_choi(const LabeledOperator& choi, const CMatrix& rho) {
  const auto da = static_cast<std::size_t>(rho.rows());
  const auto db = choi.dim() / da;
  const LabeledOperator lifted =
      kron(LabeledOperator({{"A1", da}}, rho.transpose()), LabeledOperator::identity({{"B1", db}}));
  const LabeledOperator prod({{"A1", da}, {"B1", db}}, lifted.matrix() * choi.matrix());
  return partial_trace(prod, {"A1"}).matrix();
}

// Link product straight from Tr_S[(I ⊗ b^{T_S})(a ⊗ I)] on explicit operators.
LabeledOperator link_by_definition(const LabeledOperator& a, const LabeledOperator& b,
                                   const std::vector<std::string>& shared) {
  SystemList b_only;
  for (const auto& s : b.systems()) {
    if (!a.has_system(s.name)) b_only.push_back(s);
  }
  SystemList all = a.systems();
  all.insert(all.end(), b_only.begin(), b_only.end());
  const auto big_a = trace_extend(a, all);
  const auto bt = partial_transpose(b, std::span<const std::string>(shared));
  const auto big_b = trace_extend(bt, all);
  const LabeledOperator prod(all, big_b.matrix() * big_a.matrix());
  return partial_trace(prod, std::span<const std::string>(shared));
}

}  // namespace

TEST(Gadc, PaperSubstitutions) {
  const auto g0 = gadc_choi({0.0, 0.37});
  EXPECT_EQ(max_abs_diff(g0.op.matrix(), real_matrix({{1, 0, 0, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 1}})), 0.0);
  const auto g10 = gadc_choi({1.0, 0.0});
  EXPECT_EQ(max_abs_diff(g10.op.matrix(), real_matrix({{1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}})), 0.0);
  const auto g11 = gadc_choi({1.0, 1.0});
  EXPECT_EQ(max_abs_diff(g11.op.matrix(), real_matrix({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}})), 0.0);
}

TEST(Gadc, TraceAndOffDiagonals) {
  for (double g : {0.0, 0.2, 0.5, 0.9}) {
    for (double n : {0.0, 0.3, 1.0}) {
      const auto c = gadc_choi({g, n});
      EXPECT_EQ(c.op.trace().real(), 2.0);
      EXPECT_EQ(c.op.matrix()(0, 3).real(), std::sqrt(1.0 - g));
      EXPECT_EQ(c.op.matrix()(3, 0).real(), std::sqrt(1.0 - g));
      const auto total = partial_trace(c.op, {"A1", "B1"});
      EXPECT_NEAR(total.matrix()(0, 0).real(), 2.0, 1e-15);
    }
  }
}

TEST(Gadc, RangeChecked) {
  EXPECT_THROW(gadc_choi({1.5, 0.3}), DomainError);
  EXPECT_THROW(gadc_choi({0.2, -0.1}), DomainError);
}

TEST(IdentityChoi, Cases) {
  EXPECT_EQ(max_abs_diff(identity_choi(2).op.matrix(), gadc_choi({0.0, 0.0}).op.matrix()), 0.0);
  const auto one = identity_choi(1);
  EXPECT_EQ(one.op.dim(), 1u);
  EXPECT_EQ(one.op.matrix()(0, 0), Complex(1.0));
  const auto t = partial_trace(identity_choi(3).op, {"B1"});
  EXPECT_EQ(max_abs_diff(t.matrix(), CMatrix::Identity(3, 3)), 0.0);
  EXPECT_NEAR(identity_choi(3).op.trace().real(), 3.0, 0.0);
  EXPECT_THROW(identity_choi(0), DomainError);
}

TEST(PreparationChoi, Cases) {
  const auto p0 = preparation_choi(basis_state(2, 0));
  EXPECT_EQ(p0.rounds.input_dim(0), 1u);
  EXPECT_EQ(max_abs_diff(p0.op.matrix(), real_matrix({{1, 0}, {0, 0}})), 0.0);
  EXPECT_EQ(max_abs_diff(preparation_choi(pi_state(2)).op.matrix(), real_matrix({{0.5, 0}, {0, 0.5}})), 0.0);
  EXPECT_EQ(max_abs_diff(preparation_choi(pi_state(4)).op.matrix(), real_matrix({{0.25, 0}, {0, 0.75}})), 0.0);
  EXPECT_THROW(preparation_choi(real_matrix({{1, 0}, {0, 1}})), DomainError);
  EXPECT_THROW(preparation_choi(real_matrix({{1.5, 0}, {0, -0.5}})), DomainError);
}

TEST(SequentialChoi, Construction) {
  const auto g = gadc_choi({0.2, 0.2});
  const auto one = n_fold_sequential_choi(g, 1);
  EXPECT_TRUE(one.op.matrix() == g.op.matrix());
  const auto two = n_fold_sequential_choi(g, 2);
  EXPECT_EQ(system_names(two.op.systems()), (std::vector<std::string>{"A1", "B1", "A2", "B2"}));
  EXPECT_TRUE(verify_comb(two, 1e-9).pass);
  const auto three = n_fold_sequential_choi(g, 3);
  EXPECT_NEAR(three.op.trace().real(), 8.0, 1e-12);
  EXPECT_THROW(n_fold_sequential_choi(g, 0), DomainError);
}

TEST(TensorPower, RegroupsSequentialComb) {
  const auto g = gadc_choi({0.3, 0.6});
  EXPECT_TRUE(tensor_power_choi(g, 1).op.matrix() == g.op.matrix());
  const auto par = tensor_power_choi(g, 2);
  EXPECT_EQ(par.rounds.n(), 1u);
  EXPECT_EQ(system_names(par.op.systems()), (std::vector<std::string>{"A1", "A2", "B1", "B2"}));
  const auto seq = n_fold_sequential_choi(g, 2);
  const std::vector<std::string> order{"A1", "B1", "A2", "B2"};
  const auto back = permute_systems(par.op, std::span<const std::string>(order));
  EXPECT_TRUE(back.matrix() == seq.op.matrix());
  const auto tb = partial_trace(par.op, {"B1", "B2"});
  EXPECT_LE(max_abs_diff(tb.matrix(), CMatrix::Identity(4, 4)), 1e-12);
  EXPECT_TRUE(verify_comb(par).pass);
}

TEST(ChannelPower, DetectsRepeatedChannel) {
  const auto g = gadc_choi({0.25, 0.4});
  const auto seq = n_fold_sequential_choi(g, 3);
  const auto base = as_channel_power(seq);
  ASSERT_TRUE(base.has_value());
  EXPECT_LE(max_abs_diff(base->op.matrix(), g.op.matrix()), 1e-14);

  const auto mixed = kron(g.op, gadc_choi({0.5, 0.4}).op.relabeled({{"A2", 2}, {"B2", 2}}));
  const StrategyChoi not_power(n_fold_sequential_choi(g, 2).rounds, mixed);
  EXPECT_FALSE(as_channel_power(not_power).has_value());
}

TEST(LinkProduct, PreparationThroughDamping) {
  const auto prep = preparation_choi(basis_state(2, 0)).op.relabeled({{"A0", 1}, {"A1", 2}});
  const auto out = link_product(prep, gadc_choi({1.0, 0.0}).op);
  EXPECT_EQ(system_names(out.systems()), (std::vector<std::string>{"A0", "B1"}));
  EXPECT_LE(max_abs_diff(out.matrix(), real_matrix({{1, 0}, {0, 0}})), 1e-15);
}

TEST(LinkProduct, IdentityIsUnit) {
  std::mt19937_64 gen(31);
  const LabeledOperator choi({{"B1", 2}, {"C", 3}}, random_hermitian(gen, 6));
  const auto out = link_product(identity_choi(2).op, choi);
  EXPECT_EQ(system_names(out.systems()), (std::vector<std::string>{"A1", "C"}));
  EXPECT_LE(max_abs_diff(out.matrix(), choi.matrix()), 1e-14);
}

TEST(LinkProduct, MatchesDefinition) {
  std::mt19937_64 gen(32);
  const LabeledOperator a({{"X", 2}, {"S", 3}, {"T", 2}}, random_hermitian(gen, 12));
  const LabeledOperator b({{"T", 2}, {"Y", 2}, {"S", 3}}, random_hermitian(gen, 12));
  const auto fast = link_product(a, b);
  const auto slow = link_by_definition(a, b, {"S", "T"});
  EXPECT_EQ(fast.systems(), slow.systems());
  EXPECT_LE(max_abs_diff(fast.matrix(), slow.matrix()), 1e-12);
}

TEST(LinkProduct, NoSharedSystemsIsKron) {
  std::mt19937_64 gen(33);
  const LabeledOperator a({{"X", 2}}, random_hermitian(gen, 2));
  const LabeledOperator b({{"Y", 3}}, random_hermitian(gen, 3));
  EXPECT_LE(max_abs_diff(link_product(a, b).matrix(), kron(a, b).matrix()), 1e-15);
}

TEST(LinkProduct, ReproducesChannelAction) {
  std::mt19937_64 gen(34);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ch = random_channel_choi(3, 2, seed);
    const CMatrix rho = random_density(gen, 3);
    const LabeledOperator prep({{"R", 1}, {"A1", 3}}, rho);
    const auto out = link_product(prep, ch.op);
    EXPECT_LE(max_abs_diff(out.matrix(), apply_choi(ch.op, rho)), 1e-12);
  }
}

TEST(LinkProduct, AssociativeOverDisjointContractions) {
  std::mt19937_64 gen(35);
  const LabeledOperator a({{"X", 2}, {"S", 2}}, random_hermitian(gen, 4));
  const LabeledOperator b({{"S", 2}, {"T", 3}}, random_hermitian(gen, 6));
  const LabeledOperator c({{"T", 3}, {"Y", 2}}, random_hermitian(gen, 6));
  const auto left = link_product(link_product(a, b), c);
  const auto right = link_product(a, link_product(b, c));
  EXPECT_LE(max_abs_diff(left.matrix(), right.matrix()), 1e-10);
}

TEST(LinkProduct, DimensionMismatch) {
  const auto a = LabeledOperator::identity({{"S", 2}});
  const auto b = LabeledOperator::identity({{"S", 3}});
  EXPECT_THROW(link_product(a, b), LabelingError);
}

TEST(LinkProduct, CombWithMeasuringCostrategyGivesProbability) {
  // A two-round co-strategy: prepare |+><+| ⊗ reference, feed B1 straight
  // back into A2, and measure B2 with projector |0><0|.
  const auto comb = n_fold_sequential_choi(gadc_choi({0.2, 0.2}), 2);
  CMatrix plus = CMatrix::Constant(2, 2, 0.5);
  const LabeledOperator prep({{"A1", 2}}, plus.transpose());
  const auto wire = identity_choi(2).op.relabeled({{"B1", 2}, {"A2", 2}});
  CMatrix proj = CMatrix::Zero(2, 2);
  proj(0, 0) = 1.0;
  const LabeledOperator meas({{"B2", 2}}, proj.transpose());
  const auto co = kron(kron(prep, wire), meas);
  const auto p = link_product(comb.op, co);
  ASSERT_EQ(p.dim(), 1u);
  EXPECT_GE(p.matrix()(0, 0).real(), -1e-12);
  EXPECT_LE(p.matrix()(0, 0).real(), 1.0 + 1e-12);
  EXPECT_LE(std::abs(p.matrix()(0, 0).imag()), 1e-14);
}

TEST(VerifyComb, SequentialGadcPasses) {
  const auto r = verify_comb(n_fold_sequential_choi(gadc_choi({0.3, 0.5}), 3), 1e-9);
  EXPECT_TRUE(r.pass);
  for (double x : r.residuals) EXPECT_LE(x, 1e-12);
}

TEST(VerifyComb, ScaledIdentityFailsNormalization) {
  auto id = identity_choi(2);
  const StrategyChoi half(id.rounds, id.op * 0.5);
  const auto r = verify_comb(half);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.residuals[0], 0.5, 1e-15);
}

TEST(VerifyComb, SignallingBackwardsFails) {
  // Round 2's input is wired to round 1's output: B1 depends on A2.
  const auto wire = identity_choi(2).op.relabeled({{"A2", 2}, {"B1", 2}});
  const auto op = kron(wire, LabeledOperator::identity({{"A1", 2}, {"B2", 1}}));
  RoundStructure r;
  r.inputs = {{{"A1", 2}}, {{"A2", 2}}};
  r.outputs = {{{"B1", 2}}, {{"B2", 1}}};
  const std::vector<std::string> order{"A1", "B1", "A2", "B2"};
  const StrategyChoi s(r, permute_systems(op, std::span<const std::string>(order)));
  const auto rep = verify_comb(s);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.residuals[1], 0.1);
}

TEST(VerifyComb, LibraryOutputsPass) {
  EXPECT_TRUE(verify_comb(tensor_power_choi(gadc_choi({0.1, 0.9}), 3)).pass);
  EXPECT_TRUE(verify_comb(preparation_choi(pi_state(8))).pass);
  EXPECT_TRUE(verify_comb(identity_choi(3)).pass);
  EXPECT_TRUE(verify_comb(random_channel_choi(2, 3, 4)).pass);
}

TEST(RandomChannel, TracePreservingPositiveDeterministic) {
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 123456789ull}) {
    const auto a = random_channel_choi(2, 3, seed);
    const auto b = random_channel_choi(2, 3, seed);
    EXPECT_TRUE(a.op.matrix() == b.op.matrix());
    const auto t = partial_trace(a.op, {"B1"});
    EXPECT_LE(max_abs_diff(t.matrix(), CMatrix::Identity(2, 2)), 1e-10);
    EXPECT_GE(min_eigenvalue(a.op), -1e-12);
  }
  EXPECT_FALSE(random_channel_choi(2, 2, 1).op.matrix() == random_channel_choi(2, 2, 2).op.matrix());
}
