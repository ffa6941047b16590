#include "courtformer/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace courtformer::nn {

template <typename Real>
GradCheckReport grad_check(const LossBuilder<Real>& loss, const std::vector<Parameter<Real>*>& params,
                           const GradCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<Real> tape;
    tape.backward(loss(tape));
  }

  struct Coord {
    Parameter<Real>* param;
    std::size_t index;
  };
  std::vector<Coord> coords;
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) coords.push_back({p, i});
  }
  std::mt19937_64 rng(options.seed);
  if (coords.size() > options.coordinates) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.coordinates);
  }

  auto evaluate = [&]() {
    Tape<Real> tape(false);
    return static_cast<double>(loss(tape).value()[0]);
  };

  GradCheckReport report;
  for (const auto& c : coords) {
    Real& slot = c.param->value[c.index];
    const Real original = slot;
    const double analytic = static_cast<double>(c.param->grad[c.index]);
    double abs_err = 0.0, rel = 0.0;
    for (const double step : {options.step, options.second_step}) {
      if (!(step > 0)) continue;
      slot = static_cast<Real>(original + step);
      const double up = evaluate();
      slot = static_cast<Real>(original - step);
      const double down = evaluate();
      slot = original;
      const double numeric = (up - down) / (2.0 * step);
      const double e = std::abs(numeric - analytic);
      const double r = e / std::max({std::abs(numeric), std::abs(analytic), options.magnitude_floor});
      if (step == options.step || r < rel) {
        abs_err = e;
        rel = r;
      }
    }
    report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
    if (rel > report.max_relative_error || report.coordinates_checked == 0) {
      report.max_relative_error = std::max(report.max_relative_error, rel);
      report.worst_coordinate = c.param->name + "[" + std::to_string(c.index) + "]";
    }
    ++report.coordinates_checked;
  }
  return report;
}

template GradCheckReport grad_check(const LossBuilder<float>&, const std::vector<Parameter<float>*>&,
                                    const GradCheckOptions&);
template GradCheckReport grad_check(const LossBuilder<double>&, const std::vector<Parameter<double>*>&,
                                    const GradCheckOptions&);

}  // namespace courtformer::nn
