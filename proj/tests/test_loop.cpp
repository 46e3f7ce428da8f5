#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

#include "deco/loop.hpp"
#include "deco/rational.hpp"
#include "deco/tasks.hpp"

using deco::LoopOptions;
using deco::Rational;
using deco::TrainingLoop;
using Eigen::VectorXd;
using RationalVec = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;

namespace {

// Straight-line restatement of the update rules with its own sort-based
// Top-k; shares no code with TrainingLoop.
class ReferenceLoop {
 public:
  ReferenceLoop(int n, int d, double gamma, double delta, int tau, VectorXd x0)
      : n_(n), d_(d), gamma_(gamma), delta_(delta), tau_(tau),
        x_(std::move(x0)), e_(static_cast<std::size_t>(n), VectorXd::Zero(d)) {}

  template <class GradFn>
  void step(std::uint64_t t, const GradFn& grad) {
    VectorXd agg = VectorXd::Zero(d_);
    for (int i = 0; i < n_; ++i) {
      const VectorXd g = grad(i, t, x_);
      const VectorXd acc = e_[static_cast<std::size_t>(i)] + g;
      const VectorXd compressed = sort_top_k(acc);
      e_[static_cast<std::size_t>(i)] = acc - compressed;
      agg += compressed;
    }
    queue_.push_back(agg);
    if (static_cast<int>(queue_.size()) > tau_) {
      x_ -= (gamma_ / n_) * queue_.front();
      queue_.pop_front();
    }
  }

  const VectorXd& x() const { return x_; }

 private:
  VectorXd sort_top_k(const VectorXd& v) const {
    const int k = std::max<int>(
        1, std::min<int>(d_, static_cast<int>(std::ceil(delta_ * d_ - 1e-9))));
    std::vector<int> idx(static_cast<std::size_t>(d_));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (std::abs(v(a)) != std::abs(v(b)))
        return std::abs(v(a)) > std::abs(v(b));
      return a < b;
    });
    VectorXd out = VectorXd::Zero(d_);
    for (int j = 0; j < k; ++j) out(idx[static_cast<std::size_t>(j)]) = v(idx[static_cast<std::size_t>(j)]);
    return out;
  }

  int n_, d_;
  double gamma_, delta_;
  int tau_;
  VectorXd x_;
  std::vector<VectorXd> e_;
  std::deque<VectorXd> queue_;
};

deco::TaskSpec small_task(double sigma = 0.1) {
  deco::TaskSpec s;
  s.kind = deco::TaskKind::kQuadratic;
  s.dim = 12;
  s.workers = 3;
  s.zeta_knob = 0.6;
  s.sigma = sigma;
  s.seed = 2024;
  return s;
}

TrainingLoop<double> make_loop(const deco::SyntheticTask& task, double gamma,
                               double delta, int tau, bool compression,
                               bool delay, bool probe = false) {
  LoopOptions<double> o;
  o.workers = task.workers();
  o.dim = task.dim();
  o.gamma = gamma;
  o.use_compression = compression;
  o.use_delay = delay;
  o.probe = probe;
  TrainingLoop<double> loop(o, VectorXd::Zero(task.dim()));
  loop.set_plan(tau, delta);
  return loop;
}

}  // namespace

TEST_CASE("single plain step is hand-computable") {
  LoopOptions<double> o;
  o.workers = 1;
  o.dim = 1;
  o.gamma = 0.5;
  TrainingLoop<double> loop(o, VectorXd::Constant(1, 1.0));
  // f(x) = x^2/2: gradient at x0 = 1 is 1
  loop.step([](int, std::uint64_t, const VectorXd& x) { return x; });
  CHECK(loop.parameters()(0) == 0.5);
}

TEST_CASE("warm-up applies zero updates") {
  auto task = deco::make_task(small_task(0.0));
  auto loop = make_loop(*task, 0.05, 0.5, 2, true, true);
  const auto grad = [&](int i, std::uint64_t t, const VectorXd& x) {
    return task->stochastic_gradient(i, t, x);
  };
  loop.step(grad);
  CHECK(loop.parameters().isZero(0.0));
  loop.step(grad);
  CHECK(loop.parameters().isZero(0.0));
  loop.step(grad);
  CHECK_FALSE(loop.parameters().isZero(0.0));
}

TEST_CASE("matches the straight-line reference, bit for bit") {
  auto task = deco::make_task(small_task(0.2));
  const auto grad = [&](int i, std::uint64_t t, const VectorXd& x) {
    return task->stochastic_gradient(i, t, x);
  };
  for (const auto& [delta, tau] : std::vector<std::pair<double, int>>{
           {1.0, 0}, {0.5, 0}, {1.0, 3}, {0.25, 2}, {0.4, 5}}) {
    auto loop = make_loop(*task, 0.03, delta, tau, true, true);
    ReferenceLoop ref(task->workers(), task->dim(), 0.03, delta, tau,
                      VectorXd::Zero(task->dim()));
    for (std::uint64_t t = 0; t < 40; ++t) {
      loop.step(grad);
      ref.step(t, grad);
      REQUIRE(loop.parameters() == ref.x());
    }
  }
}

TEST_CASE("degradation equivalences are exact") {
  auto task = deco::make_task(small_task(0.15));
  const auto grad = [&](int i, std::uint64_t t, const VectorXd& x) {
    return task->stochastic_gradient(i, t, x);
  };
  const double gamma = 0.02;

  SUBCASE("no compression: delayed-compressed equals delayed") {
    auto full = make_loop(*task, gamma, 1.0, 3, true, true);
    auto plain = make_loop(*task, gamma, 1.0, 3, false, true);
    for (int t = 0; t < 60; ++t) {
      full.step(grad);
      plain.step(grad);
      REQUIRE(full.parameters() == plain.parameters());
    }
  }
  SUBCASE("no delay: delayed-compressed equals compressed") {
    auto full = make_loop(*task, gamma, 0.3, 0, true, true);
    auto serial = make_loop(*task, gamma, 0.3, 0, true, false);
    for (int t = 0; t < 60; ++t) {
      full.step(grad);
      serial.step(grad);
      REQUIRE(full.parameters() == serial.parameters());
    }
  }
  SUBCASE("both degradations give plain averaging") {
    auto full = make_loop(*task, gamma, 1.0, 0, true, true);
    auto plain = make_loop(*task, gamma, 1.0, 0, false, false);
    for (int t = 0; t < 60; ++t) {
      full.step(grad);
      plain.step(grad);
      REQUIRE(full.parameters() == plain.parameters());
    }
  }
}

TEST_CASE("plan changes keep every in-flight update") {
  LoopOptions<double> o;
  o.workers = 1;
  o.dim = 2;
  o.gamma = 1.0;
  o.use_delay = true;
  TrainingLoop<double> loop(o, VectorXd::Zero(2));
  loop.set_plan(3, 1.0);
  VectorXd c(2);
  c << 1.0, -2.0;
  const auto grad = [&](int, std::uint64_t, const VectorXd&) { return c; };
  for (int t = 0; t < 5; ++t) loop.step(grad);
  loop.set_plan(1, 1.0);  // shrinking tau doubles up some arrival slots
  for (int t = 0; t < 6; ++t) loop.step(grad);
  const auto applied = 11 - static_cast<int>(loop.in_flight());
  CHECK(loop.parameters() == (-double(applied) * c).eval());
}

TEST_CASE("virtual sequences decouple the loop exactly in rationals") {
  LoopOptions<Rational> o;
  o.workers = 2;
  o.dim = 2;
  o.gamma = Rational(1, 10);
  o.use_compression = true;
  o.use_delay = true;
  o.probe = true;
  TrainingLoop<Rational> loop(o, RationalVec::Zero(2));
  loop.set_plan(2, 0.5);

  Eigen::Matrix<Rational, 2, 2> a0, a1;
  a0 << Rational(2), Rational(0), Rational(0), Rational(1);
  a1 << Rational(1), Rational(1, 2), Rational(1, 2), Rational(3);
  RationalVec c0(2), c1(2);
  c0 << Rational(1, 2), Rational(-1, 2);
  c1 << Rational(-1, 3), Rational(2, 3);
  const auto grad = [&](int i, std::uint64_t, const RationalVec& x) {
    return i == 0 ? (a0 * (x - c0)).eval() : (a1 * (x - c1)).eval();
  };

  for (int t = 0; t < 20; ++t) loop.step(grad);
  for (std::uint64_t t = 0; t + 1 < 20; ++t) {
    const RationalVec dev = loop.nvs_deviation(t);
    CHECK(dev(0) == Rational(0));
    CHECK(dev(1) == Rational(0));
  }
  // warm-up left the parameters untouched for tau steps
  CHECK(loop.parameters() != RationalVec::Zero(2));
}

TEST_CASE("virtual-sequence residual stays tiny in float64") {
  auto task = deco::make_task(small_task(0.1));
  const auto grad = [&](int i, std::uint64_t t, const VectorXd& x) {
    return task->stochastic_gradient(i, t, x);
  };
  for (const auto& [delta, tau] : std::vector<std::pair<double, int>>{
           {0.25, 4}, {0.5, 1}, {0.75, 7}, {1.0, 0}}) {
    auto loop = make_loop(*task, 0.02, delta, tau, true, true, true);
    for (int t = 0; t < 200; ++t) loop.step(grad);
    for (std::uint64_t t = 0; t + 1 < 200; ++t)
      CHECK(loop.nvs_residual(t) < 1e-10);
  }
}

TEST_CASE("degenerate virtual sequences vanish") {
  auto task = deco::make_task(small_task(0.0));
  auto loop = make_loop(*task, 0.02, 1.0, 0, true, true, true);
  const auto grad = [&](int i, std::uint64_t t, const VectorXd& x) {
    return task->stochastic_gradient(i, t, x);
  };
  for (int t = 0; t < 10; ++t) loop.step(grad);
  for (std::uint64_t t = 0; t < 10; ++t) {
    CHECK(loop.probe_noise_b(t).isZero(0.0));
    CHECK(loop.probe_noise_b_tilde(t).isZero(0.0));
    if (t + 1 < 10) CHECK(loop.nvs_residual(t) == 0.0);
  }
}

TEST_CASE("probe calls require probe mode") {
  auto task = deco::make_task(small_task(0.0));
  auto loop = make_loop(*task, 0.02, 0.5, 1, true, true, false);
  CHECK_THROWS_AS(loop.probe_noise_b(0), std::logic_error);
  CHECK_THROWS_AS(loop.nvs_deviation(0), std::logic_error);
}

TEST_CASE("bad configuration and inputs are rejected") {
  LoopOptions<double> o;
  o.workers = 0;
  o.dim = 2;
  o.gamma = 0.1;
  CHECK_THROWS_AS(TrainingLoop<double>(o, VectorXd::Zero(2)),
                  std::invalid_argument);
  o.workers = 1;
  CHECK_THROWS_AS(TrainingLoop<double>(o, VectorXd::Zero(3)),
                  std::invalid_argument);
  TrainingLoop<double> loop(o, VectorXd::Zero(2));
  CHECK_THROWS_AS(loop.set_plan(-1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(loop.set_plan(0, 0.0), std::invalid_argument);
  const auto nan_grad = [](int, std::uint64_t, const VectorXd&) {
    return VectorXd::Constant(2, std::numeric_limits<double>::quiet_NaN())
        .eval();
  };
  CHECK_THROWS_AS(loop.step(nan_grad), std::domain_error);
}
