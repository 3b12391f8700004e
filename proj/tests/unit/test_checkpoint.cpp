#include <gtest/gtest.h>

#include <mbsf/checkpoint.hpp>
#include <mbsf_test/support.hpp>

namespace mbsf {
namespace {

void expect_same_agent(const AgentState& a, const AgentState& b) {
  ASSERT_EQ(a.num_actions(), b.num_actions());
  ASSERT_EQ(a.feature_dim(), b.feature_dim());
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.policy_kind, b.policy_kind);
  EXPECT_EQ(a.epsilon, b.epsilon);
  EXPECT_EQ(a.bonus, b.bonus);
  for (std::size_t j = 0; j < a.feature_dim(); ++j) {
    EXPECT_EQ(a.feature_map.bases[j].mu, b.feature_map.bases[j].mu);
    EXPECT_EQ(a.feature_map.bases[j].sigma, b.feature_map.bases[j].sigma);
  }
  EXPECT_EQ(a.feature_map.input_dims, b.feature_map.input_dims);
  for (std::size_t k = 0; k < a.num_actions(); ++k) {
    const auto& ma = a.reward_model.banks[k].members;
    const auto& mb = b.reward_model.banks[k].members;
    ASSERT_EQ(ma.size(), mb.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
      EXPECT_EQ(ma[i].belief.mean, mb[i].belief.mean);
      EXPECT_EQ(ma[i].belief.covariance, mb[i].belief.covariance);
    }
    EXPECT_EQ(a.transition_model.beliefs[k].mean, b.transition_model.beliefs[k].mean);
    EXPECT_EQ(a.transition_model.beliefs[k].row_cov, b.transition_model.beliefs[k].row_cov);
    EXPECT_EQ(a.q_weights[k], b.q_weights[k]);
  }
  EXPECT_EQ(a.transition_model.f_pi, b.transition_model.f_pi);
  EXPECT_EQ(a.reward_model.theta_pi, b.reward_model.theta_pi);
  EXPECT_EQ(a.v_weights, b.v_weights);
  ASSERT_EQ(a.sf_belief.has_value(), b.sf_belief.has_value());
  if (a.sf_belief) {
    EXPECT_EQ(a.sf_belief->mean, b.sf_belief->mean);
  }
}

AgentState trained_agent(const std::string& task_name, PolicyKind kind, std::uint64_t seed, int episodes) {
  const TaskSpec task = builtin_task(task_name);
  AgentState agent = make_agent(AgentConfig::defaults_for(task), task, kind);
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) run_episode(agent, task, task.episode_cap, rng);
  return agent;
}

TEST(Checkpoint, SaveLoadIsBitExact) {
  const AgentState agent = trained_agent("lock1", PolicyKind::uncertainty_aware, 3, 2);
  test::TempDir dir("ckpt");
  const std::string path = dir.str() + "/agent.ckpt";
  save_checkpoint(agent, path);
  expect_same_agent(agent, load_checkpoint(path));
}

TEST(Checkpoint, DumpParseDumpIsByteIdentical) {
  for (auto kind : {PolicyKind::uncertainty_aware, PolicyKind::epsilon_greedy, PolicyKind::ua_td_sf}) {
    for (std::uint64_t seed : {1u, 2u}) {
      const AgentState agent = trained_agent("lock1", kind, seed, 1);
      const std::string text = dump_checkpoint(agent);
      const AgentState back = parse_checkpoint(text);
      expect_same_agent(agent, back);
      EXPECT_EQ(dump_checkpoint(back), text);
    }
  }
}

TEST(Checkpoint, RandomisedStatesRoundTrip) {
  Rng rng(11);
  const TaskSpec task = builtin_task("A");
  for (int trial = 0; trial < 10; ++trial) {
    AgentState agent = make_agent(AgentConfig::defaults_for(task), task);
    const auto l = static_cast<Eigen::Index>(agent.feature_dim());
    for (auto& b : agent.feature_map.bases) {
      b.mu = test::random_vector(2, rng);
      b.sigma = test::uniform_vector(2, 1e-3, 3.0, rng);
    }
    for (auto& bank : agent.reward_model.banks) bank.members[0].belief.mean = test::random_vector(l, rng, 1e-7);
    for (auto& b : agent.transition_model.beliefs) {
      b.mean = test::random_matrix(l, l, rng, 1e5);
      b.row_cov = test::random_spd(l, rng, 1e-9);
    }
    agent.refresh_weights();
    const std::string text = dump_checkpoint(agent);
    const AgentState back = parse_checkpoint(text);
    expect_same_agent(agent, back);
    EXPECT_EQ(dump_checkpoint(back), text);
  }
}

TEST(Checkpoint, TruncatedTextIsParseError) {
  const std::string text = dump_checkpoint(trained_agent("lock1", PolicyKind::uncertainty_aware, 1, 1));
  for (double frac : {0.1, 0.5, 0.99}) {
    EXPECT_THROW(parse_checkpoint(text.substr(0, static_cast<std::size_t>(frac * text.size()))), ParseError);
  }
  EXPECT_THROW(parse_checkpoint(""), ParseError);
}

TEST(Checkpoint, WrongVersionIsConfigError) {
  std::string text = dump_checkpoint(trained_agent("lock1", PolicyKind::uncertainty_aware, 1, 1));
  const std::string key = "\"format_version\": 1";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, key.size(), "\"format_version\": 2");
  EXPECT_THROW(parse_checkpoint(text), ConfigError);
}

TEST(Checkpoint, MissingFieldIsConfigError) {
  EXPECT_THROW(parse_checkpoint("{\"format_version\": 1}"), ConfigError);
}

TEST(Checkpoint, MissingFileIsReported) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/agent.ckpt"), ConfigError);
}

TEST(TransferCompatibility, LockTasksShareLayout) {
  const AgentState agent = trained_agent("lock1", PolicyKind::uncertainty_aware, 1, 1);
  EXPECT_NO_THROW(check_transfer_compatible(agent, builtin_task("lock2")));
  EXPECT_NO_THROW(check_transfer_compatible(agent, builtin_task("lock3")));
  EXPECT_THROW(check_transfer_compatible(agent, builtin_task("lock3"), agent.feature_dim() + 1), ConfigError);
}

TEST(TransferCompatibility, NavigationIntoLockRejected) {
  const AgentState nav = trained_agent("A", PolicyKind::uncertainty_aware, 1, 1);
  EXPECT_THROW(check_transfer_compatible(nav, builtin_task("lock1")), ConfigError);
  EXPECT_NO_THROW(check_transfer_compatible(nav, builtin_task("B")));
}

}  // namespace
}  // namespace mbsf
