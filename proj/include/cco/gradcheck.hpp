#pragma once

// Central finite-difference check of layer_backward. Only the forward pass is
// used to build the numeric side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cco/attention.hpp"

namespace cco {

struct GradCheckEntry {
  std::string tensor;
  std::size_t elements = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_err() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
  }
};

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor for the relative error, so pairs that are both
  // (numerically) zero compare as equal.
  double rel_floor = 1e-6;
  double ln_eps = 1e-5;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheckReport grad_check(const Matrix<double>& x,
                                  const EncoderLayerParams<double>& params,
                                  const BoolMatrix& mask,
                                  const Matrix<double>& upstream,
                                  const GradCheckOptions& opt = {}) {
  const LayerGradients<double> grads =
      layer_backward(x, params, mask, upstream, opt.ln_eps);

  auto loss = [&](const Matrix<double>& xx, const EncoderLayerParams<double>& pp) {
    const Matrix<double> y = encoder_layer_forward(xx, pp, mask, opt.ln_eps);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * upstream.data()[i];
    return s;
  };

  auto check = [&](const std::string& name, Matrix<double>& target,
                   const Matrix<double>& analytic, auto&& eval) {
    GradCheckEntry e{name, target.size()};
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double orig = target.data()[i];
      target.data()[i] = orig + opt.step;
      const double up = eval();
      target.data()[i] = orig - opt.step;
      const double down = eval();
      target.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic.data()[i];
      e.max_abs_err = std::max(e.max_abs_err, std::abs(a - numeric));
      e.max_rel_err = std::max(e.max_rel_err, relative_error(a, numeric, opt.rel_floor));
    }
    return e;
  };

  GradCheckReport rep;
  Matrix<double> xx = x;
  rep.entries.push_back(
      check("x", xx, grads.grad_x, [&] { return loss(xx, params); }));

  EncoderLayerParams<double> pp = params;
  std::vector<const Matrix<double>*> analytic;
  EncoderLayerParams<double>::for_each_tensor(
      grads.grad_params,
      [&](const char*, const Matrix<double>& m) { analytic.push_back(&m); });
  std::size_t idx = 0;
  EncoderLayerParams<double>::for_each_tensor(
      pp, [&](const char* name, Matrix<double>& m) {
        rep.entries.push_back(
            check(name, m, *analytic[idx++], [&] { return loss(x, pp); }));
      });
  return rep;
}

}  // namespace cco
