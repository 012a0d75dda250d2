#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "helmproof/error.hpp"

namespace helmproof {

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

/// Dense real matrix, row-major. A 1x1 MatVal doubles as a scalar.
struct MatVal {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> data{0.0};

  static MatVal scalar(double x) { return MatVal{1, 1, {x}}; }
  static MatVal row(std::initializer_list<double> xs);
  static MatVal zeros(Shape s);

  Shape shape() const noexcept { return {rows, cols}; }
  /// 0-based element access.
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  /// Throws ShapeMismatch unless 1x1.
  double as_scalar() const;

  bool operator==(const MatVal&) const = default;
};

struct Mode {
  std::string symbol;
  bool operator==(const Mode&) const = default;
};

using Point = std::array<double, 2>;
/// Finite set of planar points (obstacle register). Kept sorted and unique.
using PointSet = std::vector<Point>;
PointSet make_point_set(std::vector<Point> pts);

/// Closed sum of values a lens can address: real matrices (continuous or
/// discrete), mode symbols, and finite point sets.
using Value = std::variant<MatVal, Mode, PointSet>;

std::string to_string(const Value& v);

enum class LensKind { Continuous, Discrete };
enum class Sort { Real, Mode, Set };

/// Named accessor into a hybrid state. Continuous lenses address a contiguous
/// coordinate range of the continuous vector; discrete lenses address one
/// slot of the discrete store. Element lenses (from mat_lens) address one
/// coordinate of a continuous matrix lens.
struct Lens {
  std::string name;
  LensKind kind = LensKind::Continuous;
  Sort sort = Sort::Real;
  Shape shape;
  std::size_t offset = 0;  // coordinate offset (continuous) or slot (discrete)
  std::string parent;      // set for element lenses
  std::size_t elem_row = 0, elem_col = 0;  // 1-based position inside parent
  bool angle = false;
  std::vector<std::string> modes;  // admissible symbols for Sort::Mode

  bool is_element() const noexcept { return !parent.empty(); }
  bool is_continuous() const noexcept { return kind == LensKind::Continuous; }
  /// Name of the whole variable this lens writes to.
  const std::string& root() const noexcept { return parent.empty() ? name : parent; }
  bool operator==(const Lens& o) const {
    return name == o.name && kind == o.kind && offset == o.offset && shape == o.shape;
  }
};

struct LensDecl {
  std::string name;
  LensKind kind = LensKind::Continuous;
  Sort sort = Sort::Real;
  Shape shape;
  bool angle = false;
  std::vector<std::string> modes;
};

class StateSpace;
using SpacePtr = std::shared_ptr<const StateSpace>;

/// Registered variables of a hybrid system. Continuous coordinates are laid
/// out in registration order, row-major within each matrix lens.
class StateSpace {
 public:
  const std::vector<Lens>& lenses() const noexcept { return lenses_; }
  std::size_t cont_dim() const noexcept { return cont_dim_; }
  std::size_t disc_count() const noexcept { return disc_count_; }

  /// Whole-variable lens or element lens written "p[i,j]". Throws UnknownLens.
  const Lens& lens(std::string_view name) const;
  const Lens* find(std::string_view name) const;
  bool contains(const Lens& l) const;

  /// Lens addressing element (i, j), 1-based, of a continuous lens.
  Lens element(const Lens& parent, std::size_t i, std::size_t j) const;

  /// Display name of continuous coordinate k, e.g. "p[1,2]" or "t".
  std::string coord_name(std::size_t k) const;

  /// New space with extra (discrete) declarations appended; offsets of the
  /// existing lenses are unchanged so states and lenses stay compatible.
  SpacePtr extended(const std::vector<LensDecl>& extra) const;

  const std::vector<LensDecl>& decls() const noexcept { return decls_; }

 private:
  friend SpacePtr register_space(const std::vector<LensDecl>& decls);
  std::vector<LensDecl> decls_;
  std::vector<Lens> lenses_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t cont_dim_ = 0;
  std::size_t disc_count_ = 0;
};

/// Errors: DuplicateName, ZeroDimension.
SpacePtr register_space(const std::vector<LensDecl>& decls);

/// Immutable hybrid state: Euclidean continuous part plus discrete store.
class HybridState {
 public:
  /// Zero continuous part; discrete reals zero, modes at their first symbol,
  /// sets empty.
  explicit HybridState(SpacePtr space);

  const SpacePtr& space() const noexcept { return space_; }
  std::span<const double> cont() const noexcept { return cont_; }
  const std::vector<Value>& disc() const noexcept { return disc_; }

  Value get(const Lens& l) const;
  HybridState put(const Lens& l, const Value& v) const;
  HybridState with_cont(std::vector<double> cont) const;

  /// Continuous lens value as a matrix, or a real discrete slot.
  MatVal get_real(const Lens& l) const;
  /// Reinterpret under an extended space (new slots default-initialised).
  HybridState rebased(SpacePtr wider) const;

  bool operator==(const HybridState& o) const { return cont_ == o.cont_ && disc_ == o.disc_; }

 private:
  void check(const Lens& l) const;
  SpacePtr space_;
  std::vector<double> cont_;
  std::vector<Value> disc_;
};

Value lens_get(const Lens& l, const HybridState& st);
HybridState lens_put(const Lens& l, const HybridState& st, const Value& v);
/// Element lens (i, j), 1-based, of a continuous whole-variable lens.
/// Errors: IndexOutOfRange.
Lens element_of(const Lens& parent, std::size_t i, std::size_t j);
/// Errors: IndexOutOfRange, UnknownLens.
Lens mat_lens(const StateSpace& space, const Lens& parent, std::size_t i, std::size_t j);

Value default_value(const Lens& l);

}  // namespace helmproof
