#include <doctest.h>

#include <chrono>
#include <cmath>

#include "greysvr/error.hpp"
#include "greysvr/indicators.hpp"
#include "greysvr/random.hpp"
#include "oracles.hpp"

using namespace greysvr;

namespace {

Date day(int i) {
  using namespace std::chrono;
  return year_month_day{sys_days{year{2021} / January / 4} + days{i}};
}

OhlcvBar bar(int i, double o, double h, double l, double c, double v = 1000.0) {
  OhlcvBar b;
  b.date = day(i);
  b.open = o;
  b.high = h;
  b.low = l;
  b.close = c;
  b.volume = v;
  b.amount = v * c;
  return b;
}

OhlcvSeries random_walk(std::uint64_t seed, int n) {
  SplitMix64 rng(seed);
  OhlcvSeries s;
  s.instrument_id = "RW";
  double px = 20.0;
  for (int i = 0; i < n; ++i) {
    const double o = px * std::exp(0.01 * rng.normal());
    const double c = o * std::exp(0.02 * rng.normal());
    const double h = std::max(o, c) * (1.0 + 0.01 * rng.uniform());
    const double l = std::min(o, c) * (1.0 - 0.01 * rng.uniform());
    auto b = bar(i, o, h, l, c, std::round(1e5 * (0.5 + rng.uniform())));
    b.float_shares = 1e7 * (0.9 + 0.2 * rng.uniform());
    s.rows.push_back(b);
    px = c;
  }
  return s;
}

FactorReturnsPanel factor_panel(std::uint64_t seed, int n, double noise) {
  SplitMix64 rng(seed);
  FactorReturnsPanel p;
  for (int i = 0; i < n; ++i) {
    p.dates.push_back(day(i));
    p.r_f.push_back(0.0001);
    p.r_m.push_back(0.01 * rng.normal());
    p.hml.push_back(0.005 * rng.normal());
    p.smb.push_back(0.005 * rng.normal());
    const double excess = 1.2 * (p.r_m.back() - p.r_f.back()) + 0.4 * p.hml.back() - 0.3 * p.smb.back();
    p.r_i.push_back(p.r_f.back() + excess + noise * rng.normal());
  }
  return p;
}

}  // namespace

TEST_SUITE("indicators") {

TEST_CASE("ols fixtures") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const auto fit = ols(ones, y);
  CHECK(fit.coeffs(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.residuals(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(fit.residuals(1)) < 1e-14);
  CHECK(fit.residuals(2) == doctest::Approx(1.0).epsilon(1e-14));

  SplitMix64 rng(61);
  Eigen::MatrixXd x(20, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Eigen::Vector3d beta(0.5, -2.0, 1.25);
  const auto exact = ols(x, x * beta);
  CHECK(exact.residuals.cwiseAbs().maxCoeff() < 1e-10);
  CHECK((exact.coeffs - beta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ols matches the normal equations") {
  SplitMix64 rng(62);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd x(50, 3);
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < 50; ++i) y(i) = rng.normal();
    const auto fit = ols(x, y);
    CHECK((fit.coeffs - oracle::normal_equations(x, y)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((x.transpose() * fit.residuals).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((fit.residuals - (y - x * fit.coeffs)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ols rejects rank deficiency") {
  Eigen::MatrixXd x(10, 2);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;
  }
  CHECK_THROWS_AS(ols(x, Eigen::VectorXd::Ones(10)), RankDeficiencyError);
  CHECK_THROWS_AS(ols(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)), RankDeficiencyError);
}

TEST_CASE("ivr vanishes on an exact factor model") {
  const auto p = factor_panel(63, 60, 0.0);
  const auto s = ivr(p);
  CHECK(s.name == "X32");
  CHECK(s.size() == 41);
  CHECK(s.dates.front() == p.dates[19]);
  for (double v : s.values) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("ivr equals a direct window recomputation") {
  auto p = factor_panel(64, 45, 0.0);
  // Planted residuals of size c on alternating days.
  const double c = 0.003;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i % 2 == 0) p.r_i[i] += c;
  }
  const auto s = ivr(p, 20);
  const auto s_sd = ivr(p, 20, IvrAggregate::StdDev);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t t = k + 19;
    Eigen::MatrixXd x(20, 3);
    Eigen::VectorXd y(20);
    for (int j = 0; j < 20; ++j) {
      const std::size_t i = t - 19 + static_cast<std::size_t>(j);
      y(j) = p.r_i[i] - p.r_f[i];
      x(j, 0) = p.r_m[i] - p.r_f[i];
      x(j, 1) = p.hml[i];
      x(j, 2) = p.smb[i];
    }
    const Eigen::VectorXd e = y - x * oracle::normal_equations(x, y);
    CHECK(std::abs(s.values[k] - e.cwiseAbs().mean()) < 1e-12);
    const double mu = e.mean();
    CHECK(std::abs(s_sd.values[k] - std::sqrt((e.array() - mu).square().sum() / 19.0)) < 1e-12);
    CHECK(s.values[k] > 0.0);
    CHECK(s.values[k] < c);
  }
}

TEST_CASE("ivr ignores exact factor combinations added to the excess return") {
  const auto p = factor_panel(65, 40, 0.002);
  auto q = p;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q.r_i[i] += -0.7 * (q.r_m[i] - q.r_f[i]) + 2.0 * q.hml[i] + 0.1 * q.smb[i];
  }
  const auto a = ivr(p);
  const auto b = ivr(q);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a.values[k] - b.values[k]) < 1e-8);
}

TEST_CASE("ivr preconditions") {
  CHECK_THROWS_AS(ivr(factor_panel(66, 20, 0.01), 20), DataError);
  CHECK_NOTHROW(ivr(factor_panel(66, 21, 0.01), 20));
  CHECK_THROWS_AS(ivr(factor_panel(66, 30, 0.01), 3), std::invalid_argument);
}

TEST_CASE("AR fixtures") {
  OhlcvSeries s;
  s.rows = {bar(0, 9, 10, 8, 9.5), bar(1, 10, 12, 9, 11)};
  const auto ar = ar_index(s, 2);
  REQUIRE(ar.size() == 1);
  CHECK(ar.values[0] == 1.5);
  CHECK(ar.dates[0] == day(1));

  OhlcvSeries flat_top;
  flat_top.rows = {bar(0, 10, 10, 8, 9), bar(1, 9, 9, 7, 8), bar(2, 8, 8, 7.5, 7.6)};
  for (double v : ar_index(flat_top, 2).values) CHECK(v == 0.0);

  OhlcvSeries flat_bottom;
  flat_bottom.rows = {bar(0, 8, 10, 8, 9), bar(1, 9, 11, 9, 10), bar(2, 10, 11, 10, 10.5)};
  CHECK(ar_index(flat_bottom, 2).size() == 0);

  CHECK_THROWS_AS(ar_index(flat_bottom, 26), DataError);
}

TEST_CASE("AR is invariant to price scaling") {
  const auto s = random_walk(67, 80);
  auto scaled = s;
  for (auto& b : scaled.rows) {
    b.open *= 3.7;
    b.high *= 3.7;
    b.low *= 3.7;
    b.close *= 3.7;
  }
  const auto a = ar_index(s);
  const auto b = ar_index(scaled);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == 55);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b.values[k] == doctest::Approx(a.values[k]).epsilon(1e-12));
}

TEST_CASE("ADTM branches") {
  OhlcvSeries down, up, flat;
  for (int i = 0; i < 8; ++i) {
    const double o = 20.0 - i;
    down.rows.push_back(bar(i, o, o + 0.5, o - 0.6, o - 0.2));
    const double u = 10.0 + i;
    up.rows.push_back(bar(i, u, u + 0.7, u - 0.4, u + 0.3));
    flat.rows.push_back(bar(i, 10.0, 10.5, 9.5, 10.1));
  }
  const auto a = adtm(down, 5);
  const auto b = adtm(up, 5);
  const auto c = adtm(flat, 5);
  CHECK(a.size() == 3);
  CHECK(a.dates.front() == day(5));
  for (double v : a.values) CHECK(v == -1.0);
  for (double v : b.values) CHECK(v == 1.0);
  for (double v : c.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(adtm(flat, 8), DataError);
}

TEST_CASE("ADTM stays within [-1, 1]") {
  for (std::uint64_t seed = 70; seed < 80; ++seed) {
    for (double v : adtm(random_walk(seed, 60)).values) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("OBV fixtures and step property") {
  OhlcvSeries s;
  s.rows = {bar(0, 10, 10, 10, 10, 100), bar(1, 11, 11, 11, 11, 50), bar(2, 9, 9, 9, 9, 30)};
  CHECK(obv(s).values == std::vector<double>{100, 150, 120});

  OhlcvSeries one;
  one.rows = {bar(0, 5, 6, 4, 5, 42)};
  CHECK(obv(one).values == std::vector<double>{42});

  OhlcvSeries same;
  same.rows = {bar(0, 5, 6, 4, 5.5, 1), bar(1, 5, 6, 4, 4.5, 2), bar(2, 5, 6, 4, 5.2, 3)};
  CHECK(obv(same).values == std::vector<double>{1, 3, 6});
  // Close-based variant: 4.5 < 5.5 subtracts, 5.2 > 4.5 adds.
  CHECK(obv(same, ObvPrice::Close).values == std::vector<double>{1, -1, 2});

  const auto rw = random_walk(81, 50);
  const auto o = obv(rw);
  for (std::size_t t = 1; t < o.size(); ++t) {
    const double step = o.values[t] - o.values[t - 1];
    CHECK((step == rw.rows[t].volume || step == -rw.rows[t].volume));
  }
  CHECK_THROWS_AS(obv(OhlcvSeries{}), DataError);
}

TEST_CASE("turnover rate") {
  OhlcvSeries s;
  for (int i = 0; i < 25; ++i) {
    auto b = bar(i, 10, 11, 9, 10, 5000.0);
    b.float_shares = 2e6;
    s.rows.push_back(b);
  }
  const auto t = turnover_rate(s);
  CHECK(t.size() == 6);
  for (double v : t.values) CHECK(v == doctest::Approx(5000.0 / 2e6).epsilon(1e-15));

  const auto rw = random_walk(82, 60);
  const auto r = turnover_rate(rw, 7);
  for (std::size_t k = 0; k < r.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i = k; i < k + 7; ++i) sum += rw.rows[i].volume / *rw.rows[i].float_shares;
    CHECK(std::abs(r.values[k] - sum / 7.0) <= 1e-12 * r.values[k]);
  }

  s.rows[3].float_shares.reset();
  CHECK_THROWS_AS(turnover_rate(s), DataError);
}

TEST_CASE("factor panel parsing") {
  const auto p = parse_factor_panel(
      "date,r_i,r_m,r_f,hml,smb\n2021-01-04,0.01,0.02,0.0001,0.001,-0.002\n2021-01-05,0,0,0,0,0\n");
  CHECK(p.size() == 2);
  CHECK(p.r_m[0] == 0.02);
  CHECK_THROWS_AS(parse_factor_panel("date,r_i\n2021-01-04,1\n"), DataError);
  CHECK_THROWS_AS(parse_factor_panel("date,r_i,r_m,r_f,hml,smb\n2021-01-05,0,0,0,0,0\n2021-01-04,0,0,0,0,0\n"),
                  DataError);
}

}  // TEST_SUITE
