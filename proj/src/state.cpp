#include "helmproof/state.hpp"

#include <algorithm>
#include <cstdio>

namespace helmproof {

std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

MatVal MatVal::row(std::initializer_list<double> xs) {
  MatVal m;
  m.rows = 1;
  m.cols = xs.size();
  m.data.assign(xs.begin(), xs.end());
  return m;
}

MatVal MatVal::zeros(Shape s) {
  MatVal m;
  m.rows = s.rows;
  m.cols = s.cols;
  m.data.assign(s.size(), 0.0);
  return m;
}

double MatVal::as_scalar() const {
  if (rows != 1 || cols != 1)
    throw Error(ErrorKind::ShapeMismatch, "expected scalar, got " + to_string(shape()));
  return data[0];
}

PointSet make_point_set(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

static std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string to_string(const Value& v) {
  if (const auto* m = std::get_if<MatVal>(&v)) {
    if (m->rows == 1 && m->cols == 1) return num(m->data[0]);
    std::string out = "[";
    for (std::size_t i = 0; i < m->rows; ++i) {
      if (m->rows > 1) out += i ? ", [" : "[";
      for (std::size_t j = 0; j < m->cols; ++j) {
        if (j) out += ", ";
        out += num(m->at(i, j));
      }
      if (m->rows > 1) out += "]";
    }
    return out + "]";
  }
  if (const auto* md = std::get_if<Mode>(&v)) return md->symbol;
  const auto& set = std::get<PointSet>(v);
  std::string out = "{";
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (k) out += ", ";
    out += "[" + num(set[k][0]) + ", " + num(set[k][1]) + "]";
  }
  return out + "}";
}

Value default_value(const Lens& l) {
  switch (l.sort) {
    case Sort::Real: return MatVal::zeros(l.shape);
    case Sort::Mode: return Mode{l.modes.empty() ? std::string() : l.modes.front()};
    case Sort::Set: return PointSet{};
  }
  return MatVal{};
}

// ---------------------------------------------------------------------------
// StateSpace

SpacePtr register_space(const std::vector<LensDecl>& decls) {
  auto sp = std::make_shared<StateSpace>();
  for (const auto& d : decls) {
    if (sp->index_.count(d.name))
      throw Error(ErrorKind::DuplicateName, "variable '" + d.name + "' declared twice");
    if (d.sort == Sort::Real && d.shape.size() == 0)
      throw Error(ErrorKind::ZeroDimension, "variable '" + d.name + "' has an empty shape");
    if (d.kind == LensKind::Continuous && d.sort != Sort::Real)
      throw Error(ErrorKind::ShapeMismatch, "continuous variable '" + d.name + "' must be real");
    Lens l;
    l.name = d.name;
    l.kind = d.kind;
    l.sort = d.sort;
    l.shape = d.sort == Sort::Real ? d.shape : Shape{1, 1};
    l.angle = d.angle;
    l.modes = d.modes;
    if (d.kind == LensKind::Continuous) {
      l.offset = sp->cont_dim_;
      sp->cont_dim_ += l.shape.size();
    } else {
      l.offset = sp->disc_count_++;
    }
    sp->index_.emplace(l.name, sp->lenses_.size());
    sp->lenses_.push_back(std::move(l));
    sp->decls_.push_back(d);
  }
  return sp;
}

const Lens* StateSpace::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &lenses_[it->second];
}

const Lens& StateSpace::lens(std::string_view name) const {
  if (const Lens* l = find(name)) return *l;
  throw Error(ErrorKind::UnknownLens, "unknown variable '" + std::string(name) + "'");
}

bool StateSpace::contains(const Lens& l) const {
  const Lens* base = find(l.root());
  if (!base) return false;
  if (!l.is_element()) return base->kind == l.kind && base->offset == l.offset && base->shape == l.shape;
  return base->kind == LensKind::Continuous && l.elem_row >= 1 && l.elem_row <= base->shape.rows &&
         l.elem_col >= 1 && l.elem_col <= base->shape.cols &&
         l.offset == base->offset + (l.elem_row - 1) * base->shape.cols + (l.elem_col - 1);
}

Lens StateSpace::element(const Lens& parent, std::size_t i, std::size_t j) const {
  return mat_lens(*this, parent, i, j);
}

std::string StateSpace::coord_name(std::size_t k) const {
  for (const auto& l : lenses_) {
    if (l.kind != LensKind::Continuous) continue;
    if (k >= l.offset && k < l.offset + l.shape.size()) {
      if (l.shape.is_scalar()) return l.name;
      std::size_t r = (k - l.offset) / l.shape.cols, c = (k - l.offset) % l.shape.cols;
      return l.name + "[" + std::to_string(r + 1) + "," + std::to_string(c + 1) + "]";
    }
  }
  return "x" + std::to_string(k);
}

SpacePtr StateSpace::extended(const std::vector<LensDecl>& extra) const {
  std::vector<LensDecl> all = decls_;
  for (const auto& d : extra) {
    if (d.kind == LensKind::Continuous)
      throw Error(ErrorKind::ShapeMismatch, "only discrete variables can be added to an existing space");
    all.push_back(d);
  }
  // Discrete extras go last in both orders, so offsets are preserved.
  return register_space(all);
}

Lens element_of(const Lens& parent, std::size_t i, std::size_t j) {
  if (parent.kind != LensKind::Continuous || parent.is_element())
    throw Error(ErrorKind::IndexOutOfRange, "element lens needs a continuous matrix variable, got '" +
                                                parent.name + "'");
  if (i < 1 || j < 1 || i > parent.shape.rows || j > parent.shape.cols)
    throw Error(ErrorKind::IndexOutOfRange, "(" + std::to_string(i) + "," + std::to_string(j) +
                                                ") outside " + parent.name + " : " +
                                                to_string(parent.shape));
  Lens l;
  l.name = parent.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
  l.kind = LensKind::Continuous;
  l.sort = Sort::Real;
  l.shape = {1, 1};
  l.offset = parent.offset + (i - 1) * parent.shape.cols + (j - 1);
  l.parent = parent.name;
  l.elem_row = i;
  l.elem_col = j;
  l.angle = parent.angle;
  return l;
}

Lens mat_lens(const StateSpace& space, const Lens& parent, std::size_t i, std::size_t j) {
  if (!space.contains(parent))
    throw Error(ErrorKind::UnknownLens, "unknown variable '" + parent.name + "'");
  return element_of(parent, i, j);
}

// ---------------------------------------------------------------------------
// HybridState

HybridState::HybridState(SpacePtr space) : space_(std::move(space)) {
  cont_.assign(space_->cont_dim(), 0.0);
  disc_.resize(space_->disc_count());
  for (const auto& l : space_->lenses())
    if (l.kind == LensKind::Discrete) disc_[l.offset] = default_value(l);
}

void HybridState::check(const Lens& l) const {
  if (!space_->contains(l))
    throw Error(ErrorKind::UnknownLens, "variable '" + l.name + "' is not part of this state");
}

Value HybridState::get(const Lens& l) const {
  check(l);
  if (l.kind == LensKind::Discrete) return disc_[l.offset];
  MatVal m = MatVal::zeros(l.shape);
  std::copy_n(cont_.begin() + static_cast<std::ptrdiff_t>(l.offset), l.shape.size(), m.data.begin());
  return m;
}

MatVal HybridState::get_real(const Lens& l) const {
  Value v = get(l);
  if (auto* m = std::get_if<MatVal>(&v)) return std::move(*m);
  throw Error(ErrorKind::ShapeMismatch, "variable '" + l.name + "' is not real-valued");
}

HybridState HybridState::put(const Lens& l, const Value& v) const {
  check(l);
  HybridState out = *this;
  if (l.kind == LensKind::Continuous) {
    const auto* m = std::get_if<MatVal>(&v);
    if (!m || m->shape() != l.shape)
      throw Error(ErrorKind::ShapeMismatch, "cannot store " + to_string(v) + " in '" + l.name +
                                                "' : " + to_string(l.shape));
    std::copy(m->data.begin(), m->data.end(), out.cont_.begin() + static_cast<std::ptrdiff_t>(l.offset));
    return out;
  }
  bool ok = false;
  switch (l.sort) {
    case Sort::Real: {
      const auto* m = std::get_if<MatVal>(&v);
      ok = m && m->shape() == l.shape;
      break;
    }
    case Sort::Mode: {
      const auto* md = std::get_if<Mode>(&v);
      ok = md && (l.modes.empty() ||
                  std::find(l.modes.begin(), l.modes.end(), md->symbol) != l.modes.end());
      break;
    }
    case Sort::Set: ok = std::holds_alternative<PointSet>(v); break;
  }
  if (!ok)
    throw Error(ErrorKind::ShapeMismatch, "cannot store " + to_string(v) + " in '" + l.name + "'");
  if (l.sort == Sort::Set)
    out.disc_[l.offset] = make_point_set(std::get<PointSet>(v));
  else
    out.disc_[l.offset] = v;
  return out;
}

HybridState HybridState::with_cont(std::vector<double> cont) const {
  if (cont.size() != cont_.size())
    throw Error(ErrorKind::ShapeMismatch, "continuous vector has wrong dimension");
  HybridState out = *this;
  out.cont_ = std::move(cont);
  return out;
}

HybridState HybridState::rebased(SpacePtr wider) const {
  HybridState out(wider);
  if (wider->cont_dim() < cont_.size() || wider->disc_count() < disc_.size())
    throw Error(ErrorKind::ShapeMismatch, "rebased space is narrower than the state");
  std::copy(cont_.begin(), cont_.end(), out.cont_.begin());
  std::copy(disc_.begin(), disc_.end(), out.disc_.begin());
  return out;
}

Value lens_get(const Lens& l, const HybridState& st) { return st.get(l); }
HybridState lens_put(const Lens& l, const HybridState& st, const Value& v) { return st.put(l, v); }

}  // namespace helmproof
