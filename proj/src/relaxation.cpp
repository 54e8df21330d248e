#include "geocert/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace geocert {

namespace {

std::vector<double> slope_slice(const AffineBoundPair& bounds, BoundSide side,
                                int dim) {
  const std::vector<double>& a =
      side == BoundSide::Lower ? bounds.a_low : bounds.a_up;
  return {a.begin() + dim * bounds.pixels, a.begin() + (dim + 1) * bounds.pixels};
}

// Shared mesh engine for both correction flavours. Returns the raw
// certificate min over cells of (midpoint residual - sum_d L_d * halfwidth_d)
// per pixel; callers clamp per side.
std::vector<double> mesh_certificate(const Image& img, const TransformSpec& spec,
                                     const AffineBoundPair& bounds,
                                     const ParamBox& box, int N, BoundSide side,
                                     bool per_cell_lipschitz,
                                     std::int64_t cell_budget) {
  if (N < 1) throw InvalidInput("subdivision count must be at least 1");
  const std::size_t npix = img.shape().size();
  if (bounds.pixels != npix)
    throw InvalidInput("correction: bounds do not match the image");
  check_box(spec, box);
  const int d = box.dims();

  std::vector<int> cells(d);
  std::int64_t total = 1;
  for (int k = 0; k < d; ++k) {
    cells[k] = box.width(k) > 0.0 ? N : 1;
    total *= cells[k];
    if (total > cell_budget)
      throw ResourceLimit("mesh cell count exceeds the configured budget");
  }

  // Whole-box Lipschitz constants, reused for every cell unless the
  // per-cell refinement is requested.
  std::vector<std::vector<double>> l_box(d);
  if (!per_cell_lipschitz)
    for (int k = 0; k < d; ++k)
      l_box[k] = residual_lipschitz(img, spec, slope_slice(bounds, side, k), box, k);

  std::vector<double> cert(npix, std::numeric_limits<double>::infinity());
  std::vector<int> idx(d, 0);
  std::vector<double> clo(d), chi(d);
  while (true) {
    for (int k = 0; k < d; ++k) {
      clo[k] = box.lo[k] + box.width(k) * idx[k] / cells[k];
      chi[k] = box.lo[k] + box.width(k) * (idx[k] + 1) / cells[k];
    }
    const ParamBox cell(clo, chi);
    const ParamVector mid = cell.midpoint();
    const Image g = transform_image(img, spec, mid);
    std::vector<double> r = residual(g, mid, bounds, side);
    for (int k = 0; k < d; ++k) {
      if (cell.width(k) == 0.0) continue;
      const std::vector<double> l =
          per_cell_lipschitz
              ? residual_lipschitz(img, spec, slope_slice(bounds, side, k), cell, k)
              : l_box[k];
      const double halfwidth = 0.5 * cell.width(k);
      for (std::size_t pix = 0; pix < npix; ++pix) r[pix] -= l[pix] * halfwidth;
    }
    for (std::size_t pix = 0; pix < npix; ++pix)
      cert[pix] = std::min(cert[pix], r[pix]);

    int k = d - 1;
    while (k >= 0 && ++idx[k] == cells[k]) idx[k--] = 0;
    if (k < 0) break;
  }
  return cert;
}

std::vector<double> clamp_correction(std::vector<double> cert, BoundSide side) {
  if (side == BoundSide::Lower) {
    for (double& v : cert) v = std::min(0.0, v);
  } else {
    for (double& v : cert) v = std::max(0.0, -v);
  }
  return cert;
}

}  // namespace

Interval LinearRelaxation::concretize(std::size_t pix) const {
  double lo = bounds.b_low[pix] + delta_low[pix];
  double hi = bounds.b_up[pix] + delta_up[pix];
  const std::size_t npix = bounds.pixels;
  for (int d = 0; d < bounds.dims; ++d) {
    const double al = bounds.a_low[d * npix + pix];
    const double au = bounds.a_up[d * npix + pix];
    lo += std::min(al * box.lo[d], al * box.hi[d]);
    hi += std::max(au * box.lo[d], au * box.hi[d]);
  }
  return {lo, hi};
}

int choose_subdivisions(double l_max, double width, double epsilon) {
  if (!(l_max >= 0.0) || !std::isfinite(l_max))
    throw InvalidInput("Lipschitz constant must be a nonnegative real");
  if (!(width > 0.0)) throw InvalidInput("interval width must be positive");
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  const double n = std::ceil(l_max * width / (2.0 * epsilon));
  if (n > 1e9) throw ResourceLimit("subdivision count out of range");
  return std::max(1, static_cast<int>(n));
}

std::vector<double> correction_1d(const Image& img, const TransformSpec& spec,
                                  const AffineBoundPair& bounds,
                                  const ParamBox& box, int N, BoundSide side,
                                  bool per_cell_lipschitz) {
  if (box.dims() != 1) throw InvalidInput("correction_1d requires d=1");
  return clamp_correction(
      mesh_certificate(img, spec, bounds, box, N, side, per_cell_lipschitz,
                       std::numeric_limits<std::int64_t>::max()),
      side);
}

std::vector<double> correction_multid(const Image& img, const TransformSpec& spec,
                                      const AffineBoundPair& bounds,
                                      const ParamBox& box, int N, BoundSide side,
                                      bool per_cell_lipschitz,
                                      std::int64_t cell_budget) {
  return clamp_correction(mesh_certificate(img, spec, bounds, box, N, side,
                                           per_cell_lipschitz, cell_budget),
                          side);
}

LinearRelaxation build_relaxation(const Image& img, const TransformSpec& spec,
                                  const ParamBox& box,
                                  const RelaxationOptions& opt) {
  if (spec.rows != img.rows() || spec.cols != img.cols())
    throw InvalidInput("transform size does not match image");
  if (box.dims() != spec.dims())
    throw InvalidInput("parameter box dimension does not match transform");
  check_box(spec, box);

  LinearRelaxation out;
  out.spec = spec;
  out.box = box;
  out.shape = img.shape();
  out.per_cell_lipschitz = opt.per_cell_lipschitz;
  const std::size_t npix = img.shape().size();

  if (box.is_point()) {
    // Exact collapse: the transformed image at the single parameter.
    const Image g = transform_image(img, spec, box.lo);
    out.bounds = AffineBoundPair(box.dims(), npix);
    out.bounds.b_low = g.data();
    out.bounds.b_up = g.data();
    out.delta_low.assign(npix, 0.0);
    out.delta_up.assign(npix, 0.0);
    out.samples = 1;
    out.subdivisions = 1;
    return out;
  }

  const SampleSet samples = make_samples(img, spec, box, opt.samples);
  out.samples = samples.count();
  if (opt.interval_domain) {
    // IBP special case: zero slopes, intercepts at the sample extremes.
    out.bounds = AffineBoundPair(box.dims(), npix);
    for (std::size_t pix = 0; pix < npix; ++pix) {
      double lo = samples.pixel(0, pix), hi = lo;
      for (int p = 1; p < samples.count(); ++p) {
        lo = std::min(lo, samples.pixel(p, pix));
        hi = std::max(hi, samples.pixel(p, pix));
      }
      out.bounds.b_low[pix] = lo;
      out.bounds.b_up[pix] = hi;
    }
  } else {
    out.bounds = bound_multid(samples);
  }

  int N = opt.subdivisions;
  if (N <= 0) {
    if (!(opt.epsilon > 0.0))
      throw InvalidInput("either subdivisions or epsilon must be set");
    // Conservative Eq.-(17) conversion from the whole-box constants.
    N = 1;
    for (int k = 0; k < box.dims(); ++k) {
      if (box.width(k) <= 0.0) continue;
      double l_max = 0.0;
      for (BoundSide side : {BoundSide::Lower, BoundSide::Upper}) {
        const std::vector<double> l =
            residual_lipschitz(img, spec, slope_slice(out.bounds, side, k), box, k);
        for (double v : l) l_max = std::max(l_max, v);
      }
      N = std::max(N, choose_subdivisions(l_max, box.width(k), opt.epsilon));
    }
  }
  out.subdivisions = N;
  out.delta_low = clamp_correction(
      mesh_certificate(img, spec, out.bounds, box, N, BoundSide::Lower,
                       opt.per_cell_lipschitz, opt.cell_budget),
      BoundSide::Lower);
  out.delta_up = clamp_correction(
      mesh_certificate(img, spec, out.bounds, box, N, BoundSide::Upper,
                       opt.per_cell_lipschitz, opt.cell_budget),
      BoundSide::Upper);
  return out;
}

SoundnessReport check_soundness(const LinearRelaxation& relax, const Image& img,
                                std::int64_t samples, double tolerance) {
  if (samples < 1) throw InvalidInput("check_soundness needs at least 1 sample");
  if (img.shape() != relax.shape)
    throw InvalidInput("check_soundness: image does not match relaxation");
  const int d = relax.dims();
  const ParamBox& box = relax.box;

  // Corners and center first, then a fixed-seed uniform stream; the fixed
  // seed keeps reports reproducible run to run.
  std::vector<ParamVector> probes;
  const int corner_count = 1 << d;
  for (int mask = 0; mask < corner_count &&
                     static_cast<std::int64_t>(probes.size()) < samples;
       ++mask) {
    ParamVector k(d);
    for (int i = 0; i < d; ++i) k[i] = (mask >> i) & 1 ? box.hi[i] : box.lo[i];
    probes.push_back(std::move(k));
  }
  if (static_cast<std::int64_t>(probes.size()) < samples)
    probes.push_back(box.midpoint());
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<std::int64_t>(probes.size()) < samples) {
    ParamVector k(d);
    for (int i = 0; i < d; ++i) k[i] = box.lo[i] + unit(rng) * box.width(i);
    probes.push_back(std::move(k));
  }

  SoundnessReport report;
  report.samples = samples;
  const Shape& shape = relax.shape;
  for (const ParamVector& k : probes) {
    for (int i = 1; i <= shape.rows; ++i) {
      for (int j = 1; j <= shape.cols; ++j) {
        const Coord src = inverse_map(relax.spec, k, i, j);
        for (int c = 0; c < shape.channels; ++c) {
          const double g = bilinear_interpolate(img, c, src);
          const std::size_t pix = shape.index(c, i, j);
          const double low_gap = relax.lower_at(k, pix) - g;
          const double up_gap = g - relax.upper_at(k, pix);
          const double gap = std::max(low_gap, up_gap);
          if (gap > tolerance) {
            ++report.violations;
            if (gap > report.worst) {
              report.worst = gap;
              report.worst_pixel = pix;
              report.worst_param = k;
            }
          }
        }
      }
    }
  }
  return report;
}

}  // namespace geocert
