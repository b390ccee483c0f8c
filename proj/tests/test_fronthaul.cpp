#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "cellfree/fronthaul.hpp"

using namespace cellfree;

namespace {
FronthaulParams paper_params(int l = 14) {
  FronthaulParams fp;  // defaults carry the evaluated setting
  fp.l = l;
  return fp;
}
}  // namespace

TEST_CASE("alpha1 and alpha2 at the evaluated parameters", "[fronthaul]") {
  const FronthaulParams fp = paper_params();
  // 6 * 3264 * 14 / (0.85 * 5e-4) = 645,120,000 bit/s
  CHECK(std::fabs(alpha1(fp) - 645120000.0) < 0.5);
  // 2 * 14 * 16 * 136 / (0.85 * 2e-4) = 358,400,000 bit/s
  CHECK(std::fabs(alpha2(fp) - 358400000.0) < 0.5);
}

TEST_CASE("alpha1 unit case and proportionality", "[fronthaul]") {
  FronthaulParams fp;
  fp.m_order = 2.0;
  fp.n_subcarrier = 1.0;
  fp.n_ofdm = 1.0;
  fp.ecpri_eff = 1.0;
  fp.delay_data = 1.0;
  CHECK(alpha1(fp) == Approx(1.0));

  FronthaulParams a = paper_params();
  FronthaulParams b = a;
  b.delay_data /= 2.0;
  CHECK(alpha1(b) == Approx(2.0 * alpha1(a)).epsilon(1e-12));

  FronthaulParams c = a;
  c.l = 2 * a.l;
  CHECK(alpha2(c) == Approx(2.0 * alpha2(a)).epsilon(1e-12));
}

TEST_CASE("per-AP constraint at the evaluated setting", "[fronthaul]") {
  const FronthaulParams fp = paper_params();
  CHECK(check_constraint(0, 0, fp, 0.0));
  // At FH_max = 9 Gbps: 13 users fit (8.387 Gbps), 14 do not (9.032 Gbps).
  CHECK(check_constraint(0, 13, fp, 9e9));
  CHECK_FALSE(check_constraint(0, 14, fp, 9e9));

  const MaxGroupSizes at9 = max_group_sizes(fp, 9e9, 20, 20);
  CHECK(at9.k_max_d == 13);

  // K_max^c = floor(12 / (0.64512 + 0.3584)) = 11 at FH_max = 12 Gbps.
  const MaxGroupSizes at12 = max_group_sizes(fp, 12e9, 20, 20);
  CHECK(at12.k_max_c == 11);

  CHECK(max_group_sizes(fp, 0.0, 20, 20).k_max_c == 0);
  CHECK(max_group_sizes(fp, 0.0, 20, 20).k_max_d == 0);
}

TEST_CASE("group sizes monotone in fh_max and ordered", "[fronthaul]") {
  const FronthaulParams fp = paper_params();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 2e10);
  MaxGroupSizes prev = max_group_sizes(fp, 0.0, 20, 40);
  for (double fh = 0.0; fh < 2e10; fh += 2.5e8) {
    const MaxGroupSizes cur = max_group_sizes(fp, fh, 20, 40);
    CHECK(cur.k_max_c >= prev.k_max_c);
    CHECK(cur.k_max_d >= prev.k_max_d);
    prev = cur;
  }
  // With alpha2 > 0 the uncapped distributed bound dominates.
  for (int i = 0; i < 200; ++i) {
    const double fh = unif(rng);
    CHECK(std::floor(fh / alpha1(fp) + 1e-9) >=
          std::floor(fh / (alpha1(fp) + alpha2(fp)) + 1e-9));
  }
}

TEST_CASE("serve-all K_max^c formulas", "[fronthaul]") {
  FronthaulParams fp = paper_params(21);
  fp.m_order = 32.0;
  const double a1 = alpha1(fp);
  const double a2 = alpha2(fp);
  const int k = 20;
  const double fh = 13e9;
  const int def = k_max_c_serve_all(fp, fh, k, false);
  const int swp = k_max_c_serve_all(fp, fh, k, true);
  CHECK(def == static_cast<int>(std::floor((fh - k * a1) / a2 + 1e-9)));
  CHECK(swp == static_cast<int>(std::floor((fh - k * a2) / a1 + 1e-9)));
  CHECK(k_max_c_serve_all(fp, 1e9, k, false) == -1);  // cannot serve all K
}

TEST_CASE("fronthaul parameter validation", "[fronthaul]") {
  FronthaulParams fp;
  fp.m_order = 63.0;  // not a power of two
  CHECK_THROWS_AS(fp.validate(), std::invalid_argument);
  fp = FronthaulParams{};
  fp.ecpri_eff = 1.5;
  CHECK_THROWS_AS(fp.validate(), std::invalid_argument);
  fp = FronthaulParams{};
  CHECK_NOTHROW(fp.validate());
}
