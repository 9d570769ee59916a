#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace dephase::quad {

struct Options {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  std::size_t max_panels = 100000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kronrod_nodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kronrod_weights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600276467553, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> gauss_weights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class F>
Panel gauss_kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kronrod_weights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> fsum{};
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kronrod_nodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fsum[j] = f1 + f2;
    kronrod += kronrod_weights[j] * fsum[j];
    abs_sum += kronrod_weights[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * fsum[j];
  }
  const double mean = 0.5 * kronrod;
  double asc = kronrod_weights[10] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 10; ++j) {
    asc += kronrod_weights[j] * std::abs(fsum[j] - 2.0 * mean);
  }
  Panel p{a, b, kronrod * half, 0.0};
  asc *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0) {
    err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  }
  const double round = 50.0 * std::numeric_limits<double>::epsilon() *
                       abs_sum * std::abs(half);
  p.error = std::max(err, round);
  return p;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration over consecutive panels
// [breaks[i], breaks[i+1]]. The panel with the largest error estimate is
// bisected until the total error meets max(abs_tol, rel_tol * |I|).
// When `partition` is non-null it receives the final panel edges.
template <class F>
Result integrate(F&& f, std::span<const double> breaks, const Options& opt,
                 std::vector<double>* partition = nullptr) {
  auto by_error = [](const Panel& x, const Panel& y) {
    return x.error < y.error;
  };
  std::priority_queue<Panel, std::vector<Panel>, decltype(by_error)> heap(
      by_error);
  Result r;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    Panel p = detail::gauss_kronrod21(f, breaks[i], breaks[i + 1]);
    r.evaluations += 21;
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  std::vector<Panel> finished;
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (!heap.empty() && total_err > target() &&
         heap.size() + finished.size() < opt.max_panels) {
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      finished.push_back(worst);  // cannot split further
      continue;
    }
    Panel left = detail::gauss_kronrod21(f, worst.a, mid);
    Panel right = detail::gauss_kronrod21(f, mid, worst.b);
    r.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  while (!heap.empty()) {
    finished.push_back(heap.top());
    heap.pop();
  }
  std::sort(finished.begin(), finished.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  // resum in panel order so the result does not depend on heap history
  double sum = 0.0, comp = 0.0, err = 0.0;
  for (const auto& p : finished) {
    const double y = p.value - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    err += p.error;
  }
  r.value = sum;
  r.error = err;
  r.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(sum));
  if (partition) {
    partition->clear();
    for (const auto& p : finished) partition->push_back(p.a);
    if (!finished.empty()) partition->push_back(finished.back().b);
  }
  return r;
}

// Non-adaptive 21-point Kronrod sum over fixed panels. Smooth in any
// parameter the integrand depends on smoothly.
template <class F>
double integrate_fixed(F&& f, std::span<const double> breaks) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    sum += detail::gauss_kronrod21(f, breaks[i], breaks[i + 1]).value;
  }
  return sum;
}

}  // namespace dephase::quad
