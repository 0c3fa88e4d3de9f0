#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "atlas/analysis.hpp"
#include "atlas/dynamics.hpp"

using namespace atlas;

namespace {

ModelParams params(std::size_t n, double g, double v0, std::vector<double> z0) {
  ModelParams p;
  p.n = n;
  p.g = g;
  p.v0 = v0;
  p.z0 = std::move(z0);
  return p;
}

}  // namespace

TEST(SimGrid, Validation) {
  EXPECT_EQ(SimGrid::make(1e-3, 1.0).steps, 1000u);
  EXPECT_THROW(SimGrid::make(0.0, 1.0), InputError);
  EXPECT_THROW(SimGrid::make(0.1, 0.05), InputError);
  EXPECT_THROW(SimGrid::make(0.3, 1.0), InputError);
}

// One step with wide gaps: nothing collides, so every quantity has a closed
// form in terms of the Brownian increment.
TEST(GapProcess, SingleStepWithoutCollisions) {
  const double dt = 1e-3, v0 = 0.7, g = 1.3;
  const auto tr = simulate_gap_process(params(3, g, v0, {5, 5, 5}), SimGrid::make(dt, dt), 11);
  ASSERT_EQ(tr.size(), 2u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(tr.li(1, i), 0.0);
  EXPECT_NEAR(tr.v[1], v0 + g * dt, 1e-15);
  const double integral = v0 * dt + 0.5 * g * dt * dt;
  EXPECT_NEAR(tr.zi(1, 0), 5.0 + tr.bi(1, 0) - integral, 1e-14);
  EXPECT_NEAR(tr.zi(1, 1), 5.0 + tr.bi(1, 1) - tr.bi(1, 0), 1e-14);
  EXPECT_NEAR(tr.x0[1], integral, 1e-15);
}

TEST(GapProcess, DeterministicForFixedSeed) {
  const auto p = params(3, 1.0, 0.2, {0.1, 0.0, 0.3});
  const auto grid = SimGrid::make(1e-3, 20.0);
  const auto a = simulate_gap_process(p, grid, 99);
  const auto b = simulate_gap_process(p, grid, 99);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.l, b.l);
  EXPECT_EQ(a.x0, b.x0);
  const auto c = simulate_gap_process(p, grid, 100);
  EXPECT_NE(a.v, c.v);
}

TEST(GapProcess, ThinnedRecordsMatchFullRecords) {
  const auto p = params(2, 1.0, 0.0, {0.2, 0.2});
  const auto grid = SimGrid::make(1e-3, 5.0);
  SimOptions thin;
  thin.record_stride = 250;
  const auto full = simulate_gap_process(p, grid, 3);
  const auto part = simulate_gap_process(p, grid, 3, thin);
  ASSERT_EQ(part.size(), 21u);
  for (std::size_t k = 0; k < part.size(); ++k) {
    const std::size_t j = part.step[k];
    EXPECT_EQ(part.v[k], full.v[j]);
    EXPECT_EQ(part.zi(k, 1), full.zi(j, 1));
    EXPECT_EQ(part.li(k, 0), full.li(j, 0));
  }
}

TEST(GapProcess, InputErrors) {
  const auto grid = SimGrid::make(1e-3, 1.0);
  EXPECT_THROW(simulate_gap_process(params(2, -1.0, 0, {0, 0}), grid, 1), InputError);
  EXPECT_THROW(simulate_gap_process(params(2, 1.0, 0, {0}), grid, 1), InputError);
  SimOptions bad;
  bad.window = 0.0;
  EXPECT_THROW(simulate_gap_process(params(1, 1.0, 0, {0}), grid, 1, bad), InputError);
}

TEST(GapProcess, TooFewPicardIterationsFailsExplicitly) {
  SimOptions opt;
  opt.max_picard_iter = 1;
  opt.predictor = false;
  opt.window = 1.0;
  try {
    simulate_gap_process(params(3, 1.0, 0.0, {0, 0, 0}), SimGrid::make(1e-3, 5.0), 1, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 1);
  }
}

// Properties along simulated paths.

class GapInvariants : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GapInvariants, HoldAlongThePath) {
  const std::size_t n = GetParam();
  std::vector<double> z0(n, 0.05);
  z0[0] = 0.0;
  const auto p = params(n, 1.0, -0.5, z0);
  const auto grid = SimGrid::make(1e-3, 30.0);
  const auto tr = simulate_gap_process(p, grid, 1234 + n);
  const double tol = 1e-9;
  std::vector<double> comp(n, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_NEAR(tr.v[k], p.v0 + p.g * tr.t[k] - tr.li(k, 0), 1e-9);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(tr.zi(k, i), -tol);
      if (k == 0) {
        EXPECT_EQ(tr.li(k, i), 0.0);
      } else {
        EXPECT_GE(tr.li(k, i), tr.li(k - 1, i));
        comp[i] += std::abs(tr.zi(k, i)) * (tr.li(k, i) - tr.li(k - 1, i));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_LE(comp[i], 1e-10 * grid.steps) << "i=" << i;
  // Something must actually collide for the checks above to mean anything.
  EXPECT_GT(tr.li(tr.size() - 1, 0), 1.0);
}

// Ranked positions rebuilt from the Brownian drivers and local times alone:
// X_(1) = x_(1) + B_1 + L_1 - L_2/2, X_(i) = x_(i) + B_i + (L_i - L_{i+1})/2.
TEST_P(GapInvariants, PositionsAgreeWithIndependentIntegration) {
  const std::size_t n = GetParam();
  const auto p = params(n, 1.0, 0.3, std::vector<double>(n, 0.1));
  const auto tr = simulate_gap_process(p, SimGrid::make(1e-3, 30.0), 77 + n);
  for (std::size_t k = 0; k < tr.size(); k += 7) {
    double start = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      start += p.z0[i];
      const double upper = i + 1 < n ? tr.li(k, i + 1) : 0.0;
      const double push = i == 0 ? tr.li(k, 0) - 0.5 * upper : 0.5 * (tr.li(k, i) - upper);
      EXPECT_NEAR(tr.ranked_position(k, i + 1), start + tr.bi(k, i) + push, 1e-8)
          << "k=" << k << " i=" << i;
    }
  }
}

TEST_P(GapInvariants, LocalTimeBoundHolds) {
  const std::size_t n = GetParam();
  const auto tr = simulate_gap_process(params(n, 1.0, 0.0, std::vector<double>(n, 0.0)),
                                       SimGrid::make(1e-3, 20.0), 5 + n);
  const auto chk = local_time_upper_bound_check(tr);
  EXPECT_TRUE(chk.pass) << "worst slack " << chk.worst_slack;
}

INSTANTIATE_TEST_SUITE_P(Sizes, GapInvariants, ::testing::Values(1, 2, 3, 5));

TEST(LocalTimeBound, ThinnedRecordsStillPass) {
  SimOptions opt;
  opt.record_stride = 100;
  const auto tr = simulate_gap_process(params(3, 1.0, 0.0, {0, 0, 0}),
                                       SimGrid::make(1e-3, 50.0), 8, opt);
  EXPECT_TRUE(local_time_upper_bound_check(tr).pass);
}

TEST(LocalTimeBound, NoCollisionsGivesZeroLocalTime) {
  const auto tr = simulate_gap_process(params(1, 1.0, -1.0, {20.0}), SimGrid::make(1e-3, 1.0), 2);
  EXPECT_EQ(tr.li(tr.size() - 1, 0), 0.0);
  const auto chk = local_time_upper_bound_check(tr);
  EXPECT_TRUE(chk.pass);
  EXPECT_GE(chk.worst_slack, 0.0);
}

// A fast inert particle driving into a touching Brownian particle: the
// bound is nearly tight, so a 10% inflation of L must break it.
TEST(LocalTimeBound, InflatedLocalTimeFails) {
  auto tr = simulate_gap_process(params(1, 1.0, 1000.0, {0.0}), SimGrid::make(1e-4, 0.01), 4);
  ASSERT_TRUE(local_time_upper_bound_check(tr).pass);
  for (double& l : tr.l) l *= 1.1;
  EXPECT_FALSE(local_time_upper_bound_check(tr).pass);
}

TEST(GapProcess, SingleParticleVelocityAveragesToG) {
  const auto tr = simulate_gap_process(params(1, 1.0, 0.0, {0.0}), SimGrid::make(1e-3, 2000.0), 21);
  const std::size_t k0 = tr.size() / 10;
  double s = 0.0;
  for (std::size_t k = k0; k < tr.size(); ++k) s += tr.v[k];
  EXPECT_NEAR(s / static_cast<double>(tr.size() - k0), 1.0, 0.05);
}

TEST(GapProcess, SecondGapCollidesMoreOftenForThreeParticles) {
  SimOptions opt;
  opt.record_stride = 1000;
  const auto tr = simulate_gap_process(params(3, 1.0, 0.0, {0.1, 0.1, 0.1}),
                                       SimGrid::make(1e-3, 5000.0), 31, opt);
  const std::size_t k = tr.size() - 1;
  EXPECT_GT(tr.li(k, 1), tr.li(k, 0));
}

TEST(GapProcess, StopsAtVelocityLevel) {
  SimOptions opt;
  opt.stop_at_velocity = 0.5;
  const auto tr = simulate_gap_process(params(1, 1.0, 0.0, {50.0}), SimGrid::make(1e-3, 10.0), 1, opt);
  ASSERT_TRUE(tr.stopped_at.has_value());
  EXPECT_NEAR(*tr.stopped_at, 0.5, 1e-9);
  EXPECT_GE(tr.v.back(), 0.5);
}

TEST(TrajectoryCsv, HeaderAndPrecision) {
  const auto tr = simulate_gap_process(params(2, 1.0, 0.1, {0.5, 0.5}), SimGrid::make(0.5, 1.0), 3);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,v,x0,z1,z2,l1,l2");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0.10000000000000001,0,0.5,0.5,0,0");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 2u);
}

TEST(RankPositions, Examples) {
  const std::vector<double> a{0, 2, 1};
  const auto r = rank_positions(a);
  EXPECT_EQ(r.sorted, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(r.permutation, (std::vector<std::size_t>{0, 2, 1}));
  const std::vector<double> b{0, 1, 5};
  EXPECT_EQ(rank_positions(b).permutation, (std::vector<std::size_t>{0, 1, 2}));
  const std::vector<double> c{0, 1, 1};
  EXPECT_EQ(rank_positions(c).permutation, (std::vector<std::size_t>{0, 1, 2}));
  const std::vector<double> d{3, 1, 1, 0};
  EXPECT_EQ(rank_positions(d).permutation, (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST(Unranked, FarApartParticlesDoNotCollide) {
  const std::vector<double> x{0.0, 50.0, 60.0};
  const auto tr = simulate_unranked(params(2, 1.0, 0.4, {0, 0}), SimGrid::make(1e-3, 1.0), 3, x);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(tr.elli(k, 0), 0.0);
    EXPECT_EQ(tr.elli(k, 1), 0.0);
    EXPECT_DOUBLE_EQ(tr.v[k], 0.4 + tr.t[k]);
  }
}

TEST(Unranked, InertParticleStaysBelow) {
  const std::vector<double> x{0.0, 0.0, 0.1, 0.1};
  const auto tr = simulate_unranked(params(3, 1.0, 0.0, {0, 0, 0}), SimGrid::make(1e-3, 20.0), 6, x);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_GE(tr.lowest_gap(k), -1e-9);
    double ell = 0.0;
    for (std::size_t i = 0; i < 3; ++i) ell += tr.elli(k, i);
    EXPECT_NEAR(tr.v[k], tr.t[k] - ell, 1e-9);
  }
}

TEST(Unranked, InputErrors) {
  const auto grid = SimGrid::make(1e-3, 1.0);
  const std::vector<double> unsorted{0.0, 1.0, 0.5};
  EXPECT_THROW(simulate_unranked(params(2, 1.0, 0, {0, 0}), grid, 1, unsorted), InputError);
  const std::vector<double> short_x{0.0, 1.0};
  EXPECT_THROW(simulate_unranked(params(2, 1.0, 0, {0, 0}), grid, 1, short_x), InputError);
}

// With one Brownian particle the two simulators see the same driver, so
// their gaps agree path by path up to discretisation.
TEST(CrossSimulator, SingleParticleGapsAgree) {
  const auto p = params(1, 1.0, 0.5, {0.3});
  const std::vector<double> x{0.0, 0.3};
  std::vector<double> a, b;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto grid = SimGrid::make(1e-3, 5.0);
    const auto gt = simulate_gap_process(p, grid, replica_seed(9, r));
    const auto ut = simulate_unranked(p, grid, replica_seed(9, r), x);
    a.push_back(gt.zi(gt.size() - 1, 0));
    b.push_back(ut.lowest_gap(ut.size() - 1));
  }
  EXPECT_LE(ks_two_sample(a, b), 0.1);
}

TEST(CrossSimulator, TotalCollisionLocalTimeMatchesInLaw) {
  const auto p = params(2, 1.0, 0.25, {0.1, 0.1});
  const std::vector<double> x{0.0, 0.1, 0.2};
  std::vector<double> a, b;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto grid = SimGrid::make(1e-3, 10.0);
    SimOptions opt;
    opt.record_stride = 1000;
    const auto gt = simulate_gap_process(p, grid, replica_seed(17, r), opt);
    const auto ut = simulate_unranked(p, grid, replica_seed(17, r), x, opt);
    a.push_back(gt.li(gt.size() - 1, 0));
    b.push_back(ut.elli(ut.size() - 1, 0) + ut.elli(ut.size() - 1, 1));
  }
  EXPECT_LE(ks_two_sample(a, b), 0.1);
}

TEST(BrownianSource, RefinedIncrementsSumToCoarseOnes) {
  detail::BrownianSource coarse(8, 2, 0), fine(8, 2, 1), finer(8, 2, 2);
  std::vector<double> c, f, ff;
  coarse.increments(10, 30, 1e-3, c);
  fine.increments(20, 60, 5e-4, f);
  finer.increments(40, 120, 2.5e-4, ff);
  for (std::size_t k = 0; k < 30; ++k)
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(f[(2 * k) * 2 + i] + f[(2 * k + 1) * 2 + i], c[k * 2 + i], 1e-15);
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += ff[(4 * k + j) * 2 + i];
      EXPECT_NEAR(s, c[k * 2 + i], 1e-15);
    }
  // Odd window boundaries address the same increments.
  std::vector<double> part;
  fine.increments(21, 7, 5e-4, part);
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(part[k * 2 + 1], f[(k + 1) * 2 + 1]);
  EXPECT_THROW(detail::BrownianSource(1, 1, -1), InputError);
}

TEST(BrownianSource, RefinedIncrementsHaveTheRightVariance) {
  detail::BrownianSource fine(21, 1, 2);
  const double dt = 1e-2;
  std::vector<double> inc;
  fine.increments(0, 200000, dt, inc);
  double m2 = 0.0, lag = 0.0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    m2 += inc[k] * inc[k];
    if (k > 0) lag += inc[k] * inc[k - 1];
  }
  m2 /= static_cast<double>(inc.size());
  lag /= static_cast<double>(inc.size() - 1);
  EXPECT_NEAR(m2 / dt, 1.0, 0.02);
  EXPECT_NEAR(lag / dt, 0.0, 0.02);
}

// Halving dt with a bridge-refined driver moves the path only by the
// discretisation error.
TEST(GapProcess, RefinedGridTracksCoarseGrid) {
  const auto p = params(2, 1.0, 0.5, {0.5, 0.5});
  SimOptions coarse_opt, fine_opt;
  coarse_opt.record_stride = 100;
  fine_opt.record_stride = 200;
  fine_opt.brownian_level = 1;
  const auto a = simulate_gap_process(p, SimGrid::make(1e-3, 20.0), 6, coarse_opt);
  const auto b = simulate_gap_process(p, SimGrid::make(5e-4, 20.0), 6, fine_opt);
  ASSERT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a.bi(k, 0), b.bi(k, 0), 1e-12);
    worst = std::max(worst, std::abs(a.li(k, 0) - b.li(k, 0)));
  }
  EXPECT_LT(worst, 0.1);
  EXPECT_TRUE(local_time_upper_bound_check(b).pass);
}
