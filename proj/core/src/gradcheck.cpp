// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clusterar {
namespace {

double evaluate(const LossFn& loss) {
  Tape<double> t;
  const Var l = loss(t);
  const auto& v = t.value(l);
  if (v.rows != 1 || v.cols != 1) throw std::invalid_argument("grad_check: loss must be 1x1");
  return v(0, 0);
}

}  // namespace

GradCheckReport grad_check(ParamStore<double>& store, const LossFn& loss, double eps, double tol, double floor) {
  GradCheckReport report;
  report.tolerance = tol;
  store.zero_grad();
  {
    Tape<double> t;
    t.backward(loss(t));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    GradCheckEntry e;
    e.name = p.name;
    e.elements = p.value.data.size();
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      const double saved = p.value.data[j];
      p.value.data[j] = saved + eps;
      const double up = evaluate(loss);
      p.value.data[j] = saved - eps;
      const double down = evaluate(loss);
      p.value.data[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad.data[j];
      e.max_abs_analytic = std::max(e.max_abs_analytic, std::abs(analytic));
      e.max_abs_numeric = std::max(e.max_abs_numeric, std::abs(numeric));
      e.max_abs_diff = std::max(e.max_abs_diff, std::abs(analytic - numeric));
    }
    e.rel_error = e.max_abs_diff / std::max({e.max_abs_analytic, e.max_abs_numeric, floor});
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(std::move(e));
  }
  report.pass = report.max_rel_error < tol;
  return report;
}

}  // namespace clusterar
