#include <doctest.h>

#include "hqs/latent_io.hpp"
#include "hqs/schedule.hpp"
#include "hqs/source.hpp"
#include "test_util.hpp"

using namespace hqs;

TEST_CASE("center subtracts the mean exactly") {
  Shape shape{1, 1, 2};
  LatentTensor y{shape, {1.5, -2.0}};
  GaussianParams p{shape, {0.5, -2.0}, {1.0, 1.0}};
  UnbiasedLatent u = center(y, p);
  CHECK(u.values[0] == 1.0);
  CHECK(u.values[1] == 0.0);
}

TEST_CASE("center with zero mean is the identity") {
  Shape shape{1, 2, 2};
  LatentTensor y{shape, {0.25, -7.5, 3.0, 1e-3}};
  GaussianParams p{shape, {0, 0, 0, 0}, {1, 1, 1, 1}};
  UnbiasedLatent u = center(y, p);
  for (std::size_t i = 0; i < y.values.size(); ++i) CHECK(u.values[i] == y.values[i]);
}

TEST_CASE("center/uncenter round-trips exactly on sampled data") {
  Rng rng(7);
  auto s = testutil::random_latent(rng, Shape{3, 8, 8}, 0.1, 10.0);
  UnbiasedLatent u = center(s.latent, s.params);
  LatentTensor back = uncenter(u, s.params);
  for (std::size_t i = 0; i < back.values.size(); ++i)
    CHECK(back.values[i] == s.latent.values[i]);
}

TEST_CASE("center rejects mismatched shapes") {
  LatentTensor y{Shape{1, 1, 2}, {0, 0}};
  GaussianParams p{Shape{1, 2, 1}, {0, 0}, {1, 1}};
  CHECK_THROWS_AS(center(y, p), StructuralError);
}

TEST_CASE("sample_source is deterministic per seed") {
  SourceConfig cfg;
  cfg.shape = Shape{2, 4, 4};
  cfg.seed = 99;
  auto a = sample_source(cfg);
  auto b = sample_source(cfg);
  CHECK(a.latent.values == b.latent.values);
  CHECK(a.params.sigma == b.params.sigma);
  cfg.seed = 100;
  auto c = sample_source(cfg);
  CHECK(a.latent.values != c.latent.values);
}

TEST_CASE("sample_source mean converges for a unit source") {
  SourceConfig cfg;
  cfg.shape = Shape{1, 1000, 1000};
  cfg.sigma_lo = cfg.sigma_hi = 1.0;
  cfg.seed = 5;
  auto s = sample_source(cfg);
  double mean = 0.0;
  for (double v : s.latent.values) mean += v;
  mean /= double(s.latent.values.size());
  CHECK(std::fabs(mean) < 0.01);
}

TEST_CASE("sample_source keeps sigma inside the configured range") {
  SourceConfig cfg;
  cfg.shape = Shape{2, 16, 16};
  cfg.sigma_lo = 0.1;
  cfg.sigma_hi = 10.0;
  cfg.sigma_mode = SourceConfig::SigmaMode::Iid;
  cfg.seed = 11;
  auto s = sample_source(cfg);
  for (double v : s.params.sigma) {
    CHECK(v >= 0.1);
    CHECK(v <= 10.0);
  }
}

TEST_CASE("validate_schedule accepts the handcrafted trit ladder") {
  StepSchedule s = trit_schedule(5, 1, 1.0);
  CHECK(s.step_at(1, 0) == 81.0);
  CHECK(s.step_at(5, 0) == 1.0);
  CHECK_NOTHROW(validate_schedule(s));
}

TEST_CASE("validate_schedule reports the first violating coordinate") {
  StepSchedule s = trit_schedule(3, 2, 1.0);
  s.step_at(2, 0) = s.step_at(1, 0) * 2.0;
  try {
    validate_schedule(s);
    FAIL("expected a violation");
  } catch (const StructuralError& e) {
    CHECK(std::string(e.what()).find("(2,0)") != std::string::npos);
  }
  StepSchedule z = trit_schedule(3, 2, 1.0);
  z.step_at(3, 1) = 0.0;
  CHECK_THROWS_AS(validate_schedule(z), StructuralError);
}

TEST_CASE("schedule text round-trips") {
  StepSchedule s = trit_schedule(4, 3, 0.5);
  s.gamma = {2.0, 1.0, 0.5, 0.25};
  s.inv_step_at(2, 1) *= 1.25;
  ParsedSchedule back = schedule_from_text(schedule_to_text(s, 0.3));
  CHECK(back.adjust_threshold == doctest::Approx(0.3));
  CHECK(back.schedule.layers == 4);
  CHECK(back.schedule.channels == 3);
  for (int l = 1; l <= 4; ++l)
    for (int c = 0; c < 3; ++c) {
      CHECK(back.schedule.step_at(l, c) == doctest::Approx(s.step_at(l, c)));
      CHECK(back.schedule.inv_step_at(l, c) == doctest::Approx(s.inv_step_at(l, c)));
    }
  CHECK_THROWS_AS(schedule_from_text("layers = 2\n"), ParseError);
}

TEST_CASE("latent files round-trip bitwise") {
  Rng rng(3);
  auto s = testutil::random_latent(rng, Shape{2, 5, 7}, 0.2, 4.0);
  LatentFile f{s.latent, s.params, std::nullopt};
  auto bytes = store_latent(f);
  LatentFile g = load_latent(bytes);
  CHECK(g.latent.values == f.latent.values);
  CHECK(g.params.mu == f.params.mu);
  CHECK(g.params.sigma == f.params.sigma);
  CHECK(!g.importance);

  f.importance.emplace(s.latent.values.size(), 0.5);
  auto bytes2 = store_latent(f);
  LatentFile h = load_latent(bytes2);
  REQUIRE(h.importance.has_value());
  CHECK(*h.importance == *f.importance);
}

TEST_CASE("truncated latent files are rejected without a partial tensor") {
  Rng rng(4);
  auto s = testutil::random_latent(rng, Shape{1, 4, 4}, 0.5, 2.0);
  auto bytes = store_latent(LatentFile{s.latent, s.params, std::nullopt});
  bytes.resize(bytes.size() - 5);
  CHECK_THROWS_AS(load_latent(bytes), ParseError);
  std::vector<std::uint8_t> garbage{'H', 'Q', 'X', '1', 1};
  CHECK_THROWS_AS(load_latent(garbage), ParseError);
}

TEST_CASE("latent files with non-positive sigma are rejected") {
  Rng rng(5);
  auto s = testutil::random_latent(rng, Shape{1, 2, 2}, 0.5, 2.0);
  auto bytes = store_latent(LatentFile{s.latent, s.params, std::nullopt});
  // sigma plane is the third plane; zero out its first value.
  std::size_t off = 4 + 1 + 12 + 4 * 2 * s.latent.values.size();
  bytes[off] = bytes[off + 1] = bytes[off + 2] = bytes[off + 3] = 0;
  CHECK_THROWS_AS(load_latent(bytes), StructuralError);
}
