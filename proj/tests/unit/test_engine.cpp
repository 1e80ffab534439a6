#include "topogs/engine.hpp"
#include "topogs/errors.hpp"
#include "topogs/ingest.hpp"
#include "topogs/metrics.hpp"
#include "topogs/parallel.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace topogs;
namespace tt = topogs::testing;

namespace {

double max_pair_distance_error(const MatrixXd& a, const MatrixXd& b, double scale) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.rows(); ++j)
      worst = std::max(worst, std::abs(std::sqrt(tt::dist(a, i, j)) * scale - std::sqrt(tt::dist(b, i, j))));
  return worst;
}

void check_state_invariants(const GaussianSet& s, double clamp) {
  CHECK(s.log_scales.maxCoeff() <= clamp);
  CHECK(s.log_scales.minCoeff() >= kLogScaleFloor);
  CHECK((s.quaternions.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(s.means.allFinite());
}

}  // namespace

TEST_CASE("pca3 init of 3D data is a rigid motion up to scale") {
  std::mt19937_64 rng(1);
  Dataset d;
  d.points = tt::random_matrix(100, 3, rng) * Vector3d(3, 2, 1).asDiagonal();
  const MatrixX3d init = init_means(d, InitStrategy::Pca3);
  CHECK(std::abs(init.rowwise().norm().mean() - 1.0) < 1e-12);
  MatrixXd centered = d.points.rowwise() - d.points.colwise().mean();
  const double scale = 1.0 / centered.rowwise().norm().mean();
  CHECK(max_pair_distance_error(centered, init, scale) < 1e-8);
}

TEST_CASE("pca3 sign convention makes the largest loading positive") {
  std::mt19937_64 rng(2);
  Dataset d;
  d.points = tt::random_matrix(200, 5, rng) * Eigen::VectorXd::LinSpaced(5, 5.0, 1.0).asDiagonal();
  const MatrixX3d a = init_means(d, InitStrategy::Pca3);
  Dataset flipped = d;
  flipped.points.col(0) *= -1.0;
  const MatrixX3d b = init_means(flipped, InitStrategy::Pca3);
  // flipping an input axis is absorbed by the loading sign, so distances agree
  CHECK(max_pair_distance_error(a, b, 1.0) < 1e-8);
  CHECK(a == init_means(d, InitStrategy::Pca3));
}

TEST_CASE("pca3 zero-pads data with fewer than three dimensions") {
  Dataset d;
  d.points.resize(4, 2);
  d.points << 0, 0, 2, 0, 0, 1, 2, 1;
  const MatrixX3d init = init_means(d, InitStrategy::Pca3);
  CHECK(init.col(2).norm() == 0.0);
}

TEST_CASE("external init") {
  const auto dir = tt::temp_dir("engine_init");
  tt::write_text(dir / "ok.csv", "a,b,c\n1,0,0\n0,2,0\n0,0,3\n");
  tt::write_text(dir / "short.csv", "a,b,c\n1,0,0\n0,2,0\n");
  Dataset d;
  d.points = MatrixXd::Random(3, 5);
  const MatrixX3d m = init_means(d, InitStrategy::External, dir / "ok.csv");
  CHECK(std::abs(m.rowwise().norm().mean() - 1.0) < 1e-12);
  CHECK(m(1, 1) / m(0, 0) == doctest::Approx(2.0));
  const MatrixX3d big = init_means(d, InitStrategy::External, dir / "ok.csv", 10.0);
  CHECK((big - 10.0 * m).norm() < 1e-12);
  CHECK_THROWS_AS(init_means(d, InitStrategy::External, dir / "short.csv"), DataError);
}

TEST_CASE("rigidity targets live at the embedding scale") {
  // 3D data under pca3 init is already isometric to its targets
  std::mt19937_64 rng(5);
  Dataset d;
  d.points = tt::random_matrix(120, 3, rng) * Vector3d(3, 2, 1).asDiagonal();
  d = standardize(d);
  for (const double scale : {1.0, 8.0}) {
    FitConfig cfg;
    cfg.embedding_scale = scale;
    cfg.epochs = 1;
    cfg.lr_means = cfg.lr_scales = cfg.lr_quats = 0.0;
    const FitResult r = fit(d, cfg);
    CHECK(std::abs(r.init_means.rowwise().norm().mean() - scale) < 1e-9);
    CHECK(r.history.front().l_r < 1e-18);
  }
  // raw coordinates keep init and targets in the same units
  Dataset raw = d;
  raw.points *= 37.0;
  FitConfig cfg;
  cfg.epochs = 1;
  const FitResult r = fit(raw, cfg);
  CHECK(r.init_means.rowwise().norm().mean() == doctest::Approx(37.0 * cfg.embedding_scale));
  CHECK(r.history.front().l_r < 1e-12);
}

TEST_CASE("swiss roll pca3 init is trustworthy") {
  const Dataset d = generate_swiss_roll(2000, 0.05, 7);
  const MatrixX3d init = init_means(d, InitStrategy::Pca3);
  CHECK(trustworthiness(d.points, init, 15) >= 0.95);
}

TEST_CASE("init_state") {
  FitConfig cfg;
  const GaussianSet s = init_state(MatrixX3d::Zero(7, 3), cfg);
  for (Index i = 0; i < 7; ++i) {
    CHECK(s.quaternions.row(i) == Eigen::RowVector4d(1, 0, 0, 0));
    const Matrix3d sigma = build_covariance(s.quaternions.row(i).transpose(), s.log_scales.row(i).transpose());
    CHECK((sigma - std::exp(-4.0) * Matrix3d::Identity()).norm() < 1e-15);
  }
  CHECK(s.opacities.size() == 0);
}

TEST_CASE("clamp_scales") {
  GaussianSet s;
  s.log_scales.resize(1, 3);
  s.log_scales << 0.3, -9.0, 1.5;
  const auto surf = clamp_scales(s, Regime::Surface2D).log_scales;
  CHECK(surf(0, 0) == -0.5);
  CHECK(surf(0, 1) == -8.0);
  const auto traj = clamp_scales(s, Regime::Trajectory1D).log_scales;
  CHECK(traj(0, 0) == 0.3);
  CHECK(traj(0, 2) == 1.0);
}

TEST_CASE("adam step matches the textbook update") {
  MatrixXd p(1, 2);
  p << 1.0, -2.0;
  MatrixXd g(1, 2);
  g << 0.5, -4.0;
  AdamState adam(1, 2);
  adam.step(p, g, 0.1, 0.9, 0.999, 1e-8);
  // first bias-corrected step moves each coordinate by lr * sign(g)
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p(0, 1) == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(adam.steps() == 1);
}

TEST_CASE("zero epochs returns the initial state") {
  const Dataset d = standardize(generate_swiss_roll(300, 0.05, 3));
  FitConfig cfg;
  cfg.epochs = 0;
  const FitResult r = fit(d, cfg);
  CHECK(r.history.empty());
  CHECK(r.gaussians.means == r.init_means);
  CHECK(r.gaussians.quaternions == init_state(r.init_means, cfg).quaternions);
  CHECK((r.gaussians.log_scales.array() == cfg.s_init).all());
}

TEST_CASE("target schedule and freeze") {
  const Dataset d = standardize(generate_swiss_roll(300, 0.05, 3));
  FitConfig cfg;  // tau 15, 200 epochs, freeze 100
  std::vector<int> updates;
  std::map<int, std::uint64_t> hashes;
  int last = 0;
  FitOptions opts;
  opts.on_epoch = [&](const EpochView& v) {
    if (v.targets.last_update_step != last) {
      last = v.targets.last_update_step;
      updates.push_back(last);
    }
    hashes[v.step] = v_ideal_checksum(v.targets);
    check_state_invariants(v.state, cfg.resolved_scale_clamp());
    CHECK(v.targets.frozen == (v.step > 100));
  };
  const FitResult r = fit(d, cfg, opts);
  CHECK(updates == std::vector<int>{1, 15, 30, 45, 60, 75, 90});
  for (int s = 101; s <= 200; ++s) CHECK(hashes[s] == hashes[100]);
  CHECK(r.history.size() == 200);
}

TEST_CASE("freezing at step 0 keeps the initial targets") {
  const Dataset d = standardize(generate_swiss_roll(200, 0.05, 4));
  FitConfig cfg;
  cfg.epochs = 40;
  cfg.freeze_epoch = 0;
  std::uint64_t first = 0;
  FitOptions opts;
  opts.on_epoch = [&](const EpochView& v) {
    if (v.step == 1) first = v_ideal_checksum(v.targets);
    CHECK(v.targets.frozen);
    CHECK(v_ideal_checksum(v.targets) == first);
  };
  const FitResult r = fit(d, cfg, opts);
  CHECK(r.targets.last_update_step == 1);
}

TEST_CASE("fit is deterministic across runs and thread counts") {
  const Dataset d = standardize(generate_trajectory(400, 10, 3.0, 0.01, 5));
  FitConfig cfg;
  cfg.regime = Regime::Trajectory1D;
  cfg.epochs = 40;
  set_num_threads(1);
  const FitResult a = fit(d, cfg);
  set_num_threads(4);
  const FitResult b = fit(d, cfg);
  const FitResult c = fit(d, cfg);
  set_num_threads(0);
  CHECK(a.gaussians.means == b.gaussians.means);
  CHECK(a.gaussians.log_scales == b.gaussians.log_scales);
  CHECK(a.gaussians.quaternions == b.gaussians.quaternions);
  CHECK(b.gaussians.quaternions == c.gaussians.quaternions);
  for (std::size_t s = 0; s < a.history.size(); ++s) CHECK(a.history[s].l_total == b.history[s].l_total);
}

TEST_CASE("swiss roll default fit reduces the loss") {
  const Dataset d = standardize(generate_swiss_roll(2000, 0.05, 7));
  FitConfig cfg;
  bool finite = true;
  FitOptions opts;
  opts.on_epoch = [&](const EpochView& v) {
    finite = finite && v.state.means.allFinite() && v.state.log_scales.allFinite() && v.state.quaternions.allFinite();
    check_state_invariants(v.state, -0.5);
  };
  const FitResult r = fit(d, cfg, opts);
  CHECK(finite);
  CHECK(r.history.back().l_total < r.history.front().l_total);
  CHECK(r.history.back().l_c <= 0.5 * r.history.front().l_c);
}

TEST_CASE("non-finite input surfaces as an error") {
  Dataset d = standardize(generate_swiss_roll(100, 0.05, 3));
  FitConfig cfg;
  cfg.epochs = 5;
  MatrixX3d bad = init_means(d, InitStrategy::Pca3);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  auto g = compute_weights(build_knn(d, cfg.k), cfg.kernel_sigma);
  CHECK_THROWS_AS(fit(d, g, bad, cfg), NumericalError);
}

TEST_CASE("training log has one row per step") {
  const Dataset d = standardize(generate_swiss_roll(200, 0.05, 3));
  FitConfig cfg;
  cfg.epochs = 12;
  const FitResult r = fit(d, cfg);
  const auto dir = tt::temp_dir("engine_log");
  write_training_log(r.history, dir / "log.jsonl");
  const std::string text = tt::read_bytes(dir / "log.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 12);
  CHECK(text.find("\"step\":1,") != std::string::npos);
  CHECK(text.find("\"l_total\"") != std::string::npos);
}
