#include "ulsa/actions.hpp"

#include <algorithm>
#include <set>

#include "ulsa/errors.hpp"

namespace ulsa {

Mask::Mask(Tensor values) : values_(std::move(values)) {
  for (double v : values_.values()) {
    ULSA_REQUIRE(v == 0.0 || v == 1.0, "mask: values must be 0 or 1");
  }
}

Mask Mask::zeros(const Shape& shape) { return Mask(Tensor(shape, 0.0)); }
Mask Mask::ones(const Shape& shape) { return Mask(Tensor(shape, 1.0)); }

Mask Mask::stack(const std::vector<Mask>& slices) {
  std::vector<Tensor> parts;
  parts.reserve(slices.size());
  for (const auto& m : slices) parts.push_back(m.values());
  return Mask(ulsa::stack(parts));
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(sum(values_));
}

Mask mask_union(const Mask& a, const Mask& b) {
  require_same_shape(a.values(), b.values(), "mask_union");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::max(a.values()[i], b.values()[i]);
  }
  return Mask(std::move(out));
}

ActionSet::ActionSet(std::vector<std::size_t> lines) : lines_(std::move(lines)) {
  std::set<std::size_t> seen(lines_.begin(), lines_.end());
  ULSA_REQUIRE(seen.size() == lines_.size(), "action set: duplicate line index");
}

bool ActionSet::contains(std::size_t line) const {
  return std::find(lines_.begin(), lines_.end(), line) != lines_.end();
}

std::vector<std::size_t> ActionSet::sorted() const {
  auto out = lines_;
  std::sort(out.begin(), out.end());
  return out;
}

LineActionSpace make_line_action_space(const Grid& grid) {
  grid.validate();
  LineActionSpace space;
  space.grid_ = grid;
  const std::size_t L = grid.line_count();
  space.lines_.assign(L, {});
  // Row-major frame: 2D [ax, lat], 3D [ax, el, lat].
  for (std::size_t ax = 0; ax < grid.n_ax; ++ax) {
    for (std::size_t el = 0; el < grid.n_el; ++el) {
      for (std::size_t lat = 0; lat < grid.n_lat; ++lat) {
        const std::size_t idx = (ax * grid.n_el + el) * grid.n_lat + lat;
        space.lines_[grid.is_3d() ? el : lat].push_back(idx);
      }
    }
  }
  return space;
}

Mask mask_from_actions(const ActionSet& actions, const LineActionSpace& space) {
  Tensor m(space.grid().frame_shape(), 0.0);
  for (std::size_t l : actions.lines()) {
    ULSA_REQUIRE(l < space.size(), "mask_from_actions: line index " +
                                       std::to_string(l) + " out of range [0, " +
                                       std::to_string(space.size()) + ")");
    for (std::size_t idx : space.line(l)) m[idx] = 1.0;
  }
  return Mask(std::move(m));
}

Tensor apply_mask(const Tensor& x, const Mask& m) {
  // Selection rather than multiplication so unmeasured entries are +0.0.
  if (x.shape() == m.shape()) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = m.values()[i] != 0.0 ? x[i] : 0.0;
    }
    return out;
  }
  if (x.rank() >= 1 && x.slice_shape() == m.shape()) {
    Tensor out(x.shape());
    const std::size_t n = m.values().size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = m.values()[i % n] != 0.0 ? x[i] : 0.0;
    }
    return out;
  }
  throw InvalidInput("apply_mask: mask shape " + shape_string(m.shape()) +
                     " incompatible with " + shape_string(x.shape()));
}

}  // namespace ulsa
