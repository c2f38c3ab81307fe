#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "ecc/data/dataset.hpp"
#include "ecc/envs/domain_pair.hpp"
#include "ecc/error.hpp"
#include "test_util.hpp"

using namespace ecc;
using namespace ecc::data;

namespace {

const envs::DomainPair& lift() {
  static envs::DomainPair p = envs::make_domain_pair("linear_lift");
  return p;
}

std::string dataset_text(const Dataset& ds, const std::string& tag) {
  auto path = testutil::temp_dir(tag) / "d.jsonl";
  save_dataset(ds, path);
  return testutil::read_bytes(path);
}

}  // namespace

TEST(Collect, CountsTransitions) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 3, 7);
  EXPECT_EQ(ds.transition_count(), 3u);
  ASSERT_EQ(ds.trajectories.size(), 1u);
  Dataset big = collect_random(*lift().target, Domain::Target, 25, 200, 7);
  EXPECT_EQ(big.transition_count(), 25u * 200u);
  EXPECT_EQ(big.provenance.trajectory_count, 25);
  EXPECT_EQ(big.provenance.horizon, 200);
  EXPECT_EQ(big.provenance.seed, 7u);
  EXPECT_EQ(big.provenance.policy, "random");
}

TEST(Collect, DefaultScale) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1000, 200, 0);
  EXPECT_EQ(ds.transition_count(), 200000u);
}

TEST(Collect, TransitionsChainAndRespectBounds) {
  const auto& env = *lift().target;
  Dataset ds = collect_random(env, Domain::Target, 3, 50, 9);
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const Transition& tr = traj[t];
      EXPECT_EQ(tr.state.size(), 8);
      EXPECT_EQ(tr.action.size(), 3);
      EXPECT_TRUE((tr.action.array() >= env.spec().action_lo.array()).all());
      EXPECT_TRUE((tr.action.array() <= env.spec().action_hi.array()).all());
      if (t + 1 < traj.size()) {
        EXPECT_EQ(tr.next_state, traj[t + 1].state);
      }
      // the stored next state is what the environment produces
      EXPECT_EQ(env.step({tr.state, static_cast<int>(t)}, tr.action).next.x, tr.next_state);
    }
  }
}

TEST(Collect, DeterministicGivenSeed) {
  Dataset a = collect_random(*lift().source, Domain::Source, 4, 20, 3);
  Dataset b = collect_random(*lift().source, Domain::Source, 4, 20, 3);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(dataset_text(a, "det_a"), dataset_text(b, "det_b"));
  Dataset c = collect_random(*lift().source, Domain::Source, 4, 20, 4);
  EXPECT_FALSE(a == c);
}

TEST(Collect, PrefixesAgreeWithLargerRuns) {
  Dataset small = collect_random(*lift().source, Domain::Source, 3, 10, 5);
  Dataset large = collect_random(*lift().source, Domain::Source, 6, 10, 5);
  Dataset tail = collect_random(*lift().source, Domain::Source, 3, 10, 5, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(small.trajectories[i], large.trajectories[i]);
    EXPECT_EQ(tail.trajectories[i], large.trajectories[i + 3]);
  }
}

TEST(Collect, DomainsUseDistinctStreams) {
  EXPECT_NE(collection_seed(0, Domain::Source), collection_seed(0, Domain::Target));
  EXPECT_NE(collection_seed(0, Domain::Source), collection_seed(1, Domain::Source));
}

TEST(Collect, BadArgumentsThrow) {
  EXPECT_THROW(collect_random(*lift().source, Domain::Source, 0, 10, 0), UsageError);
  EXPECT_THROW(collect_random(*lift().source, Domain::Source, 1, 0, 0), UsageError);
}

TEST(Sample, SingleTransitionDataset) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 1, 1);
  Rng rng(0);
  auto b = sample_batch(ds, 1, rng);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0], ds.trajectories[0][0]);
}

TEST(Sample, ZeroBatchOrEmptyThrows) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 5, 1);
  Rng rng(0);
  EXPECT_THROW(sample_batch(ds, 0, rng), UsageError);
  TransitionTable empty;
  EXPECT_THROW(sample_batch(empty, 4, rng), UsageError);
}

TEST(Sample, EmpiricalMeanMatchesDataset) {
  Dataset ds = collect_random(*lift().target, Domain::Target, 20, 100, 2);
  TransitionTable table = flatten(ds);
  Eigen::RowVectorXd mu = table.states.colwise().mean();
  Eigen::RowVectorXd sd = ((table.states.rowwise() - mu).array().square().colwise().mean()).sqrt();
  const int n = 100000;
  Rng rng(12);
  Batch b = sample_batch(table, n, rng);
  Eigen::RowVectorXd emp = b.states.colwise().mean();
  for (int j = 0; j < mu.size(); ++j) EXPECT_LE(std::abs(emp[j] - mu[j]), 3.0 * sd[j] / std::sqrt(double(n))) << j;
}

TEST(Sample, IndependentStreamsAreUncorrelated) {
  Rng ra = make_rng(0, "batch_source"), rb = make_rng(0, "batch_target");
  const std::size_t size = 5000, n = 20000;
  auto ia = sample_indices(size, n, ra), ib = sample_indices(size, n, rb);
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < n; ++k) ma += ia[k], mb += ib[k];
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t k = 0; k < n; ++k) {
    cov += (ia[k] - ma) * (ib[k] - mb);
    va += (ia[k] - ma) * (ia[k] - ma);
    vb += (ib[k] - mb) * (ib[k] - mb);
  }
  EXPECT_LT(std::abs(cov / std::sqrt(va * vb)), 4.0 / std::sqrt(double(n)));
  EXPECT_NE(ia, ib);
}

TEST(Sample, NeverCrossesDomains) {
  Dataset ds = collect_random(*lift().target, Domain::Target, 2, 10, 3);
  TransitionTable table = flatten(ds);
  EXPECT_EQ(table.domain, Domain::Target);
  Rng rng(1);
  Batch b = sample_batch(table, 64, rng);
  EXPECT_EQ(b.states.cols(), 8);
  EXPECT_EQ(b.actions.cols(), 3);
}

TEST(Split, ByTrajectory) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 10, 5, 3);
  auto [train, held] = split_by_trajectory(ds, 0.9);
  EXPECT_EQ(train.trajectories.size(), 9u);
  EXPECT_EQ(held.trajectories.size(), 1u);
  EXPECT_EQ(held.trajectories[0], ds.trajectories[9]);
  EXPECT_THROW(split_by_trajectory(ds, 0.0), UsageError);
}

TEST(Persistence, RoundTripIsBitExact) {
  Dataset ds = collect_random(*lift().target, Domain::Target, 3, 40, 11);
  // values that need all 17 significant digits
  ds.trajectories[0][0].action[0] = 0.1 + 0.2;
  ds.trajectories[0][0].action[1] = std::nextafter(1.0, 0.0);
  ds.trajectories[0][0].action[2] = -4.9406564584124654e-324;
  auto dir = testutil::temp_dir("ds_roundtrip");
  save_dataset(ds, dir / "t.jsonl");
  Dataset back = load_dataset(dir / "t.jsonl");
  EXPECT_TRUE(back == ds);
  const auto& a = back.trajectories[0][0].action;
  const auto& b = ds.trajectories[0][0].action;
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * 3), 0);
  save_dataset(back, dir / "u.jsonl");
  EXPECT_EQ(testutil::read_bytes(dir / "t.jsonl"), testutil::read_bytes(dir / "u.jsonl"));
}

TEST(Persistence, RecordsCarryRequiredFields) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 2, 0);
  std::string text = dataset_text(ds, "fields");
  std::string second = text.substr(text.find('\n') + 1);
  for (const char* key : {"\"domain\"", "\"traj_id\"", "\"t\"", "\"state\"", "\"action\"", "\"next_state\""}) {
    EXPECT_NE(second.find(key), std::string::npos) << key;
  }
}

TEST(Persistence, DimensionContradictionThrows) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 2, 0);
  std::string text = dataset_text(ds, "dimbad");
  auto pos = text.find("\"state_dim\":6");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 13, "\"state_dim\":5");
  auto dir = testutil::temp_dir("dimbad2");
  testutil::write_text(dir / "bad.jsonl", text);
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Persistence, MalformedLineReportsLineNumber) {
  Dataset ds = collect_random(*lift().source, Domain::Source, 1, 4, 0);
  std::string text = dataset_text(ds, "malformed");
  std::size_t p = 0;
  for (int k = 0; k < 3; ++k) p = text.find('\n', p) + 1;  // start of line 4
  text.insert(p, "{not json");
  auto dir = testutil::temp_dir("malformed2");
  testutil::write_text(dir / "bad.jsonl", text);
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(load_dataset(dir / "absent.jsonl"), MissingInputError);
}

TEST(Persistence, EqualProvenanceMeansEqualData) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    Dataset a = collect_random(*lift().source, Domain::Source, 2, 15, seed);
    Dataset b = collect_random(*lift().source, Domain::Source, 2, 15, seed);
    ASSERT_TRUE(a.provenance == b.provenance);
    EXPECT_TRUE(a == b);
  }
}
