#include "mmms/click_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmms/errors.hpp"

namespace mmms {
namespace {

constexpr double kFar = 1e20;

// 1D squared distance transform of a sampled function (lower envelope of
// parabolas). `f` and `d` have length n; v and z are scratch.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const auto meet = [f](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
           (2.0 * q - 2.0 * p);
  };
  std::size_t k = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = meet(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = meet(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = static_cast<double>(q - p) * (q - p) + f[p];
  }
}

}  // namespace

double DistanceMap::at(int row, int col) const {
  return std::sqrt(static_cast<double>(
      squared[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
              static_cast<std::size_t>(col)]));
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  const auto bits = mask.bits();
  std::vector<std::uint8_t> seen(bits.size(), 0);
  std::vector<Component> out;
  std::vector<std::uint32_t> stack;
  for (std::size_t start = 0; start < bits.size(); ++start) {
    if (!bits[start] || seen[start]) continue;
    Component comp;
    seen[start] = 1;
    stack.push_back(static_cast<std::uint32_t>(start));
    while (!stack.empty()) {
      const std::uint32_t idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const int r = static_cast<int>(idx / static_cast<std::uint32_t>(w));
      const int c = static_cast<int>(idx % static_cast<std::uint32_t>(w));
      const auto visit = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) return;
        const std::size_t n = static_cast<std::size_t>(rr) * static_cast<std::size_t>(w) +
                              static_cast<std::size_t>(cc);
        if (bits[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(static_cast<std::uint32_t>(n));
        }
      };
      visit(r - 1, c);
      visit(r + 1, c);
      visit(r, c - 1);
      visit(r, c + 1);
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

DistanceMap distance_to_complement(const Component& component, int height, int width) {
  DistanceMap out{height, width,
                  std::vector<std::int64_t>(static_cast<std::size_t>(height) *
                                                static_cast<std::size_t>(width),
                                            0)};
  if (component.pixels.empty()) return out;

  int r0 = height, r1 = -1, c0 = width, c1 = -1;
  for (std::uint32_t idx : component.pixels) {
    const int r = static_cast<int>(idx / static_cast<std::uint32_t>(width));
    const int c = static_cast<int>(idx % static_cast<std::uint32_t>(width));
    r0 = std::min(r0, r);
    r1 = std::max(r1, r);
    c0 = std::min(c0, c);
    c1 = std::max(c1, c);
  }
  // Bounding box plus a one-pixel ring of complement: the nearest outside
  // pixel of any region pixel always lies inside this padded box.
  const int ph = r1 - r0 + 3;
  const int pw = c1 - c0 + 3;
  std::vector<double> grid(static_cast<std::size_t>(ph) * static_cast<std::size_t>(pw), 0.0);
  for (std::uint32_t idx : component.pixels) {
    const int r = static_cast<int>(idx / static_cast<std::uint32_t>(width)) - r0 + 1;
    const int c = static_cast<int>(idx % static_cast<std::uint32_t>(width)) - c0 + 1;
    grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(c)] =
        kFar;
  }

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> f(static_cast<std::size_t>(std::max(ph, pw)));
  std::vector<double> d(f.size());
  for (int c = 0; c < pw; ++c) {
    for (int r = 0; r < ph; ++r) f[static_cast<std::size_t>(r)] = grid[static_cast<std::size_t>(r * pw + c)];
    edt_1d(f.data(), d.data(), ph, v, z);
    for (int r = 0; r < ph; ++r) grid[static_cast<std::size_t>(r * pw + c)] = d[static_cast<std::size_t>(r)];
  }
  for (int r = 0; r < ph; ++r) {
    double* row = grid.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(pw);
    std::copy(row, row + pw, f.begin());
    edt_1d(f.data(), row, pw, v, z);
  }

  for (std::uint32_t idx : component.pixels) {
    const int r = static_cast<int>(idx / static_cast<std::uint32_t>(width)) - r0 + 1;
    const int c = static_cast<int>(idx % static_cast<std::uint32_t>(width)) - c0 + 1;
    out.squared[idx] = static_cast<std::int64_t>(
        std::llround(grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(pw) +
                          static_cast<std::size_t>(c)]));
  }
  return out;
}

DistanceMap distance_to_complement(const BinaryMask& region) {
  Component all;
  const auto bits = region.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) all.pixels.push_back(static_cast<std::uint32_t>(i));
  }
  return distance_to_complement(all, region.height(), region.width());
}

ErrorAnalysis analyze_errors(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "analyze_errors");
  BinaryMask fn(gt.height(), gt.width());
  BinaryMask fp(gt.height(), gt.width());
  const auto p = pred.bits();
  const auto g = gt.bits();
  auto fnb = fn.bits();
  auto fpb = fp.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    fnb[i] = g[i] & static_cast<std::uint8_t>(p[i] ^ 1);
    fpb[i] = p[i] & static_cast<std::uint8_t>(g[i] ^ 1);
  }
  return {connected_components(fn), connected_components(fp)};
}

std::optional<Click> next_click(const BinaryMask& pred, const BinaryMask& gt) {
  const ErrorAnalysis errors = analyze_errors(pred, gt);
  const Component* best = nullptr;
  bool best_is_fn = false;
  const auto consider = [&](const std::vector<Component>& regions, bool is_fn) {
    for (const Component& comp : regions) {
      if (best == nullptr || comp.area() > best->area() ||
          (comp.area() == best->area() && comp.pixels.front() < best->pixels.front())) {
        best = &comp;
        best_is_fn = is_fn;
      }
    }
  };
  consider(errors.false_negative_regions, true);
  consider(errors.false_positive_regions, false);
  if (best == nullptr) return std::nullopt;

  const DistanceMap dist = distance_to_complement(*best, gt.height(), gt.width());
  std::uint32_t arg = best->pixels.front();
  std::int64_t top = -1;
  for (std::uint32_t idx : best->pixels) {  // ascending, so strict > keeps the first maximum
    if (dist.squared[idx] > top) {
      top = dist.squared[idx];
      arg = idx;
    }
  }
  const auto w = static_cast<std::uint32_t>(gt.width());
  return Click{static_cast<int>(arg / w), static_cast<int>(arg % w),
               best_is_fn ? Polarity::positive : Polarity::negative};
}

}  // namespace mmms
