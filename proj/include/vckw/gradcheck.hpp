#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vckw/errors.hpp"
#include "vckw/losses.hpp"
#include "vckw/rng.hpp"

namespace vckw {

using LossFn = std::function<LossReport(const BatchInputs&)>;

struct BlockCheck {
  std::string block;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  int coords_checked = 0;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;

  double max_rel_err() const {
    double m = 0.0;
    for (const BlockCheck& b : blocks) m = std::max(m, b.max_rel_err);
    return m;
  }
  bool passed(double tol) const { return max_rel_err() <= tol; }
};

namespace detail {

struct Coord {
  int sample;
  int row;
  int col;
};

// Central difference at one coordinate of one parameter block.
inline double central_difference(const LossFn& f, BatchInputs inputs, bool text_block,
                                 const Coord& c, double h) {
  Matrix& m = text_block ? inputs.samples[c.sample].weighted_text
                         : inputs.samples[c.sample].clip_features;
  const double base = m(c.row, c.col);
  m(c.row, c.col) = base + h;
  const double up = f(inputs).value;
  m(c.row, c.col) = base - h;
  const double down = f(inputs).value;
  if (!std::isfinite(up) || !std::isfinite(down))
    throw numeric_error("grad_check: non-finite loss under perturbation");
  return (up - down) / (2.0 * h);
}

inline BlockCheck check_block(const LossFn& f, const BatchInputs& inputs,
                              const LossReport& base, bool text_block, double h,
                              int max_coords, std::mt19937_64& gen) {
  std::vector<Coord> coords;
  for (size_t s = 0; s < inputs.samples.size(); ++s) {
    const Matrix& m = text_block ? inputs.samples[s].weighted_text
                                 : inputs.samples[s].clip_features;
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        coords.push_back({static_cast<int>(s), r, c});
  }
  std::vector<int> picked =
      sample_indices(gen, static_cast<int>(coords.size()),
                     std::min<int>(max_coords, static_cast<int>(coords.size())));

  BlockCheck out;
  out.block = text_block ? "weighted_text" : "clip_features";
  double sum = 0.0;
  for (int idx : picked) {
    const Coord& c = coords[idx];
    const Matrix& g = text_block ? base.gradients[c.sample].weighted_text
                                 : base.gradients[c.sample].clip_features;
    const double analytic = g(c.row, c.col);
    const double numeric = central_difference(f, inputs, text_block, c, h);
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    out.max_rel_err = std::max(out.max_rel_err, rel);
    sum += rel;
    ++out.coords_checked;
  }
  if (out.coords_checked > 0) out.mean_rel_err = sum / out.coords_checked;
  return out;
}

}  // namespace detail

// Compares analytic gradients of f against seeded central differences on a
// random subset of coordinates in each parameter block.
inline GradCheckReport grad_check(const LossFn& f, const BatchInputs& inputs,
                                  double h = 1e-5, int coords_per_block = 50,
                                  std::uint64_t seed = 0) {
  if (h <= 0.0) throw validation_error("grad_check: step must be positive");
  if (coords_per_block < 1) throw validation_error("grad_check: need at least one coordinate");
  inputs.validate();
  const LossReport base = f(inputs);
  if (!std::isfinite(base.value)) throw numeric_error("grad_check: non-finite base loss");

  std::mt19937_64 gen(seed);
  GradCheckReport rep;
  rep.blocks.push_back(detail::check_block(f, inputs, base, false, h, coords_per_block, gen));
  rep.blocks.push_back(detail::check_block(f, inputs, base, true, h, coords_per_block, gen));
  return rep;
}

}  // namespace vckw
