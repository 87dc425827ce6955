#include "criteria.hpp"
#include "oracles.hpp"

#include "iirs/bag.hpp"
#include "iirs/codecs.hpp"
#include "iirs/datalog.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace iirs;

TEST(Property, CodecInversePairs) {
  auto r = criteria::codec_properties(1000);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Property, SolveMatchesNaiveFixpoint) {
  auto r = criteria::reasoner_oracle(200);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Property, ForwardPassExactOnPolytrees) {
  auto r = criteria::bag_polytrees(50);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Property, PosteriorMonotoneAndBounded) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    auto bag = oracle::random_dag(rng, std::uniform_int_distribution<int>(3, 12)(rng));
    std::vector<int> ands;
    for (const auto& n : bag.lag.nodes)
      if (n.kind == datalog::NodeKind::AND)
        ands.push_back(n.id);
    if (ands.empty())
      continue;
    std::map<int, double> priors;
    for (const auto& n : bag.lag.nodes)
      if (n.kind == datalog::NodeKind::LEAF)
        priors[n.id] = u(rng);
    auto before = bag::prior_propagate(bag, priors);
    int target = ands[rng() % ands.size()];
    bool up = rng() & 1u;
    double lr = up ? 1.0 + 10 * u(rng) : 0.05 + 0.9 * u(rng);
    auto after = bag::posterior_update(bag, before, target, lr);
    for (int d : oracle::descendants(bag, target)) {
      if (up)
        ASSERT_GE(after.at(d), before.at(d) - 1e-15);
      else
        ASSERT_LE(after.at(d), before.at(d) + 1e-15);
    }
    for (const auto& [id, v] : after.p) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    // Non-descendants are untouched.
    auto desc = oracle::descendants(bag, target);
    for (const auto& [id, v] : before.p)
      if (!desc.contains(id))
        ASSERT_DOUBLE_EQ(after.at(id), v);
  }
}

TEST(Property, RepeatedBayesMatchesLogOdds) {
  // Folding many ratios one at a time equals the closed form on the odds scale.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  auto bag = oracle::make_bag({datalog::NodeKind::LEAF, datalog::NodeKind::AND, datalog::NodeKind::OR},
                              {{0, 1}, {1, 2}}, {{1, 0.3}});
  for (int i = 0; i < 100; ++i) {
    auto belief = bag::prior_propagate(bag);
    double q = 0.3;
    int k = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int j = 0; j < k; ++j) {
      double lr = std::exp(std::uniform_real_distribution<double>(-2, 2)(rng));
      belief = bag::posterior_update(bag, belief, 1, lr);
      q = bag::bayes_update(q, lr);
    }
    EXPECT_NEAR(belief.at(2), q, 1e-12);
  }
}

TEST(Property, DefenderScaleInvariance) {
  auto r = criteria::defender_l3();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Property, ZitmoDigestChangesWithList) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> urls;
    int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int j = 0; j < n; ++j)
      urls.push_back("http://10.0.0." + std::to_string(rng() % 250) + "/" + std::to_string(rng()));
    auto changed = urls;
    changed.back() += "x";
    EXPECT_NE(codecs::zitmo_url_digest(urls), codecs::zitmo_url_digest(changed));
  }
}

TEST(Property, EmotetCookiesAreHeaderSafe) {
  auto pub = codecs::RsaKey::from_pem_file(oracle::data_path("scenarios/keys/emotet-lab-public.pem").string());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    codecs::SessionKey k;
    for (auto& b : k)
      b = static_cast<std::uint8_t>(rng());
    std::string payload(1 + rng() % 100, 'x');
    auto c = codecs::emotet_seal(pub, k, codecs::to_bytes(payload));
    EXPECT_EQ(c.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/="),
              std::string::npos);
  }
}

TEST(Property, ScenarioReportsDeterministic) {
  auto r = criteria::determinism();
  EXPECT_TRUE(r.pass) << r.detail;
}
