#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <cstddef>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "dsg/detail/linalg.hpp"
#include "dsg/error.hpp"

namespace dsg::detail {

/// Tensor grid over an axis-aligned box. Points are visited in lexicographic
/// order of their index tuple, which is also lexicographic in coordinates.
struct Grid {
  std::vector<Vector> axes;

  std::size_t dimension() const { return axes.size(); }

  /// Number of points, saturated at SIZE_MAX.
  std::size_t size() const {
    std::size_t total = 1;
    for (const auto& a : axes) {
      if (a.size() != 0 && total > std::numeric_limits<std::size_t>::max() / a.size())
        return std::numeric_limits<std::size_t>::max();
      total *= a.size();
    }
    return total;
  }

  /// Diagonal length of one grid cell (degenerate axes contribute zero).
  double cell_diagonal() const {
    double s = 0.0;
    for (const auto& a : axes) {
      if (a.size() > 1) {
        const double h = a[1] - a[0];
        s += h * h;
      }
    }
    return std::sqrt(s);
  }
};

inline Vector make_axis(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw Error(ErrorCode::InvalidArgument, "grid step must be positive and finite");
  const double width = hi - lo;
  if (width <= 0.0) return {lo};
  const double cells = std::max(1.0, std::round(width / step));
  if (cells > 1e9) throw Error(ErrorCode::GridTooLarge, "axis has more than 1e9 cells");
  const auto n = static_cast<std::size_t>(cells);
  Vector axis(n + 1);
  for (std::size_t i = 0; i < n; ++i) axis[i] = lo + (width * static_cast<double>(i)) / cells;
  axis[n] = hi;
  return axis;
}

inline Grid make_grid(std::span<const double> lower, std::span<const double> upper, double step) {
  Grid g;
  g.axes.reserve(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i) g.axes.push_back(make_axis(lower[i], upper[i], step));
  return g;
}

/// Visits every grid point whose first index lies in [first_begin, first_end).
template <class Fn>
void for_each_point(const Grid& grid, std::size_t first_begin, std::size_t first_end, Fn&& fn) {
  const std::size_t n = grid.dimension();
  if (n == 0 || first_begin >= first_end) return;
  std::vector<std::size_t> idx(n, 0);
  Vector x(n);
  idx[0] = first_begin;
  for (std::size_t d = 0; d < n; ++d) x[d] = grid.axes[d][idx[d]];
  while (true) {
    fn(std::span<const double>(x));
    std::size_t d = n;
    while (d > 0) {
      --d;
      if (++idx[d] < grid.axes[d].size()) {
        x[d] = grid.axes[d][idx[d]];
        break;
      }
      if (d == 0) return;
      idx[d] = 0;
      x[d] = grid.axes[d][0];
    }
    if (idx[0] >= first_end) return;
  }
}

struct GridMin {
  double value = std::numeric_limits<double>::infinity();
  Vector x;
  std::size_t evaluations = 0;
};

/// Exhaustive minimum over the grid. `make_eval` builds one evaluator per
/// worker; each evaluator maps a point to a value. Ties keep the
/// lexicographically smallest point regardless of the worker count.
template <class MakeEval>
GridMin grid_argmin(const Grid& grid, MakeEval&& make_eval, unsigned threads = 1) {
  const std::size_t first = grid.axes.empty() ? 0 : grid.axes[0].size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, first));
  std::vector<GridMin> partial(workers);
  std::vector<std::exception_ptr> failures(workers);
  auto work = [&](std::size_t w) noexcept {
    try {
      const std::size_t begin = first * w / workers;
      const std::size_t end = first * (w + 1) / workers;
      auto eval = make_eval();
      GridMin& best = partial[w];
      for_each_point(grid, begin, end, [&](std::span<const double> x) {
        const double v = eval(x);
        ++best.evaluations;
        if (v < best.value) {
          best.value = v;
          best.x.assign(x.begin(), x.end());
        }
      });
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  GridMin result;
  for (auto& p : partial) {
    result.evaluations += p.evaluations;
    if (p.value < result.value) {
      result.value = p.value;
      result.x = std::move(p.x);
    }
  }
  return result;
}

}  // namespace dsg::detail
