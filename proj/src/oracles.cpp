#include "h2rbox/oracles.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <thread>

#include "h2rbox/constraint_lab.hpp"

namespace h2rbox {

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double angle_gap(double a, double b) {
  const double d = std::abs(angle_normalize(a - b));
  return std::min(d, kPi - d);
}

/// Runs body(i) for i in [0, n) over `threads` workers, strided.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) body(i);
    });
  }
}

RBox random_box(Rng& rng, double lo, double hi) {
  return {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0), rng.uniform(lo, hi),
          rng.uniform(lo, hi), rng.uniform(-0.5 * kPi, 0.5 * kPi)};
}

}  // namespace

bool rbox_contains(const RBox& b, Point p) {
  const double dx = p.x - b.cx;
  const double dy = p.y - b.cy;
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return std::abs(u) <= 0.5 * b.w && std::abs(v) <= 0.5 * b.h;
}

double monte_carlo_iou(const RBox& a, const RBox& b, std::size_t samples, Rng& rng) {
  const HBox ha = circumscribed_hbox(a);
  const HBox hb = circumscribed_hbox(b);
  const double x1 = std::min(ha.x1(), hb.x1());
  const double y1 = std::min(ha.y1(), hb.y1());
  const double x2 = std::max(ha.x2(), hb.x2());
  const double y2 = std::max(ha.y2(), hb.y2());
  std::size_t in_a = 0;
  std::size_t in_b = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Point p{rng.uniform(x1, x2), rng.uniform(y1, y2)};
    const bool ia = rbox_contains(a, p);
    const bool ib = rbox_contains(b, p);
    in_a += ia;
    in_b += ib;
    both += ia && ib;
  }
  const std::size_t uni = in_a + in_b - both;
  return uni == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(uni);
}

SuiteResult run_iou_suite(const IouSuiteOptions& opts) {
  SuiteResult out;
  out.name = "iou";
  out.tolerance = opts.tol;
  out.cases = opts.pairs;
  std::vector<double> errors(opts.pairs, 0.0);
  std::vector<std::string> notes(opts.pairs);
  parallel_for(opts.pairs, opts.threads, [&](std::size_t i) {
    Rng rng(opts.seed, i);
    RBox a = random_box(rng, 4.0, 40.0);
    RBox b = random_box(rng, 4.0, 40.0);
    // Every fourth pair shares a center so that nested and near-equal shapes
    // are covered.
    if (i % 4 == 0) {
      b.cx = a.cx;
      b.cy = a.cy;
    }
    const double got = opts.inject_bug
                           ? hbox_iou(circumscribed_hbox(a), circumscribed_hbox(b))
                           : rbox_iou(a, b);
    Rng mc(mix_seed(opts.seed, 0x10000 + i));
    const double want = monte_carlo_iou(a, b, opts.samples, mc);
    errors[i] = std::abs(got - want);
    notes[i] = format("pair %zu: iou %.6f monte-carlo %.6f", i, got, want);
  });
  for (std::size_t i = 0; i < opts.pairs; ++i) {
    out.worst = std::max(out.worst, errors[i]);
    if (!(errors[i] <= opts.tol)) {
      ++out.failures;
      out.messages.push_back(notes[i]);
    }
  }
  return out;
}

double kink_distance(const RBox& ws, const RBox& ss, const PairTerms& terms,
                     const LossWeights& weights, double length_scale) {
  double d = std::numeric_limits<double>::infinity();
  const auto length = [&](double v) { d = std::min(d, std::abs(v) / length_scale); };
  const auto plain = [&](double v) { d = std::min(d, std::abs(v)); };

  const auto hbox_terms = [&](const RBox& pred, const HBox& gt) {
    const HBox h = circumscribed_hbox(pred);
    plain(std::sin(pred.theta));
    plain(std::cos(pred.theta));
    length(h.x1() - gt.x1());
    length(h.x2() - gt.x2());
    length(h.y1() - gt.y1());
    length(h.y2() - gt.y2());
    length(std::min(h.x2(), gt.x2()) - std::max(h.x1(), gt.x1()));
    length(std::min(h.y2(), gt.y2()) - std::max(h.y1(), gt.y1()));
    plain(hbox_iou(h, gt) - kIouFloor);
  };
  hbox_terms(ws, terms.view1_hbox);
  if (terms.view2_hbox) hbox_terms(ss, *terms.view2_hbox);

  if (terms.ss_active) {
    const RBox target = rotate_rbox(ws, terms.rotation);
    const double t = ws.theta + terms.rotation.delta_theta();
    length(target.cx - ss.cx);
    length(target.cy - ss.cy);
    plain(std::sin(t - ss.theta));
    plain(std::cos(t - ss.theta));
    length(target.w - ss.w);
    length(target.h - ss.h);
    length(target.w - ss.h);
    length(target.h - ss.w);
    const kernels::Box<double> tb{target.cx, target.cy, target.w, target.h, t};
    const kernels::Box<double> sb{ss.cx, ss.cy, ss.w, ss.h, ss.theta};
    const double same = kernels::iou_loss(kernels::centered_iou(tb.w, tb.h, sb.w, sb.h),
                                          terms.iou_kind) +
                        std::abs(std::sin(t - ss.theta));
    const double swapped = kernels::iou_loss(kernels::centered_iou(tb.w, tb.h, sb.h, sb.w),
                                             terms.iou_kind) +
                           std::abs(std::cos(t - ss.theta));
    plain(weights.gamma2 * (same - swapped));
  }
  return d;
}

SuiteResult run_gradient_suite(const GradientSuiteOptions& opts) {
  SuiteResult out;
  out.name = "gradient";
  out.tolerance = opts.tol;
  constexpr double kMargin = 2e-3;
  const Point center{500.0, 500.0};
  Rng rng(opts.seed, 0x6772);
  std::size_t attempts = 0;
  while (out.cases < opts.configs && attempts < 50 * opts.configs) {
    ++attempts;
    const double side = rng.uniform(20.0, 100.0);
    const RBox ws{rng.uniform(100.0, 900.0), rng.uniform(100.0, 900.0), side,
                  side * rng.uniform(0.3, 1.0), rng.uniform(-0.5 * kPi, 0.5 * kPi)};
    const ViewRotation v(rng.uniform(-kPi, kPi), center);
    RBox ss = rotate_rbox(ws, v);
    ss.cx += rng.uniform(-5.0, 5.0);
    ss.cy += rng.uniform(-5.0, 5.0);
    ss.w *= rng.uniform(0.8, 1.25);
    ss.h *= rng.uniform(0.8, 1.25);
    ss.theta += rng.uniform(-0.5, 0.5);
    if (rng.bernoulli(0.5)) ss = swap_representation(ss);

    const auto jitter = [&](HBox h) {
      h.cx += rng.uniform(-4.0, 4.0);
      h.cy += rng.uniform(-4.0, 4.0);
      h.w *= rng.uniform(0.8, 1.25);
      h.h *= rng.uniform(0.8, 1.25);
      return h;
    };
    PairTerms terms;
    terms.view1_hbox = jitter(circumscribed_hbox(ws));
    if (rng.bernoulli(0.75)) terms.view2_hbox = jitter(circumscribed_hbox(rotate_rbox(ws, v)));
    terms.rotation = v;
    terms.ss_active = rng.bernoulli(0.9);
    terms.stop_grad_target = rng.bernoulli(0.5);
    terms.iou_kind = rng.bernoulli(0.5) ? IouLossKind::kNegLog : IouLossKind::kOneMinus;

    if (kink_distance(ws, ss, terms, opts.weights, side) < kMargin) {
      ++out.rejected;
      continue;
    }

    const PairGradient ad = pair_total_loss_gradient(ws, ss, terms, opts.weights);
    const std::array<double, 10> x{ws.cx, ws.cy, ws.w, ws.h, ws.theta,
                                   ss.cx, ss.cy, ss.w, ss.h, ss.theta};
    const kernels::Box<double> source{ws.cx, ws.cy, ws.w, ws.h, ws.theta};
    const auto f = [&](const std::array<double, 10>& p) {
      const kernels::Box<double> a{p[0], p[1], p[2], p[3], p[4]};
      const kernels::Box<double> b{p[5], p[6], p[7], p[8], p[9]};
      return pair_total_loss(a, b, terms.stop_grad_target ? source : a, terms, opts.weights);
    };
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double h = opts.rel_step * std::max(1.0, std::abs(x[k]));
      auto hi = x;
      auto lo = x;
      hi[k] += h;
      lo[k] -= h;
      const double fd = (f(hi) - f(lo)) / (hi[k] - lo[k]);
      err = std::max(err, std::abs(fd - ad.grad[k]));
      scale = std::max(scale, std::abs(fd));
    }
    const double rel = err / std::max(scale, 1e-8);
    ++out.cases;
    out.worst = std::max(out.worst, rel);
    if (!(rel <= opts.tol)) {
      ++out.failures;
      if (out.messages.size() < 10) {
        out.messages.push_back(format("config %zu: relative error %.3g", out.cases - 1, rel));
      }
    }
  }
  return out;
}

SuiteResult run_constraint_suite(const ConstraintSuiteOptions& opts) {
  SuiteResult out;
  out.name = "constraints";
  out.tolerance = rad_to_deg(opts.angle_tol);
  Rng rng(opts.seed, 0x6373);
  const auto sizes_match = [&](const Candidate& a, const Candidate& b) {
    return std::abs(a.w - b.w) <= opts.size_tol * b.w &&
           std::abs(a.h - b.h) <= opts.size_tol * b.h;
  };
  const auto fail = [&](std::size_t i, const std::string& what) {
    ++out.failures;
    if (out.messages.size() < 10) out.messages.push_back(format("problem %zu: ", i) + what);
  };

  for (std::size_t i = 0; i < opts.problems; ++i) {
    const double h = rng.uniform(10.0, 50.0);
    const double w = h * rng.uniform(1.2, 4.0);
    double theta = 0.0;
    do {
      theta = rng.uniform(deg_to_rad(5.0), deg_to_rad(85.0));
    } while (std::abs(theta - 0.25 * kPi) < deg_to_rad(3.0));
    if (rng.bernoulli(0.5)) theta = -theta;
    double dt = rng.uniform(deg_to_rad(10.0), deg_to_rad(80.0));
    if (rng.bernoulli(0.5)) dt = -dt;
    const ConstraintProblem p = ConstraintProblem::from_ground_truth(w, h, theta, dt);
    const Candidate gt{w, h, theta, 0.0};
    const Candidate mirror{w, h, -theta, 0.0};
    ++out.cases;

    const SolutionSet hcrc = enumerate_feasible(p, {false, false});
    if (hcrc.classification != Classification::kInfiniteFamily) {
      fail(i, "hcrc gave " + std::string(to_string(hcrc.classification)));
    }

    const TwoSolutions analytic = analytic_two_solutions(p);
    if (analytic.status != AnalyticStatus::kOk) {
      fail(i, "closed form found no pair");
      continue;
    }
    const double ga = angle_gap(analytic.coincident.theta, theta);
    const double gm = angle_gap(analytic.symmetric.theta, -theta);
    out.worst = std::max({out.worst, rad_to_deg(ga), rad_to_deg(gm)});
    if (ga > opts.angle_tol || gm > opts.angle_tol || !sizes_match(analytic.coincident, gt) ||
        !sizes_match(analytic.symmetric, mirror)) {
      fail(i, "closed form off the ground truth pair");
    }

    const SolutionSet sc = enumerate_feasible(p, {true, false});
    if (sc.classification != Classification::kTwoFold) {
      fail(i, "hcrc+sc gave " + std::string(to_string(sc.classification)));
    } else {
      for (const Candidate* want : {&analytic.coincident, &analytic.symmetric}) {
        double best = kPi;
        const Candidate* hit = nullptr;
        for (const Candidate& c : sc.solutions) {
          const double g = angle_gap(c.theta, want->theta);
          if (g < best) {
            best = g;
            hit = &c;
          }
        }
        out.worst = std::max(out.worst, rad_to_deg(best));
        if (best > opts.angle_tol || !sizes_match(*hit, *want)) {
          fail(i, "hcrc+sc cluster disagrees with the closed form");
        }
      }
    }

    const SolutionSet ac = enumerate_feasible(p, {true, true});
    if (ac.classification != Classification::kUnique) {
      fail(i, "hcrc+sc+ac gave " + std::string(to_string(ac.classification)));
    } else {
      const double g = angle_gap(ac.solutions[0].theta, analytic.coincident.theta);
      out.worst = std::max(out.worst, rad_to_deg(g));
      if (g > opts.angle_tol || !sizes_match(ac.solutions[0], analytic.coincident)) {
        fail(i, "hcrc+sc+ac solution disagrees with the closed form");
      }
    }
  }
  return out;
}

}  // namespace h2rbox
