#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "locos/error.hpp"
#include "locos/random.hpp"
#include "locos/support.hpp"

namespace locos {

using AtomId = std::size_t;
inline constexpr AtomId kNoAtom = std::numeric_limits<AtomId>::max();

// How an atom is divided: at a coordinate, or by naming one part explicitly.
struct Cut {
  enum class Kind { at, set };
  Kind kind = Kind::at;
  double x = 0.0;
  Support part;

  static Cut at(double x) { return {Kind::at, x, {}}; }
  static Cut subset(Support s) { return {Kind::set, 0.0, std::move(s)}; }

  // at:x | set:a,b;c,d | pts:i,j,k
  std::string to_string() const {
    if (kind == Kind::at) return "at:" + format_double(x);
    std::string s;
    if (part.is_discrete()) {
      s = "pts:";
      const auto& p = part.point_indices();
      for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
      return s;
    }
    s = "set:";
    const auto& g = part.segments();
    for (std::size_t i = 0; i < g.size(); ++i)
      s += (i ? ";" : "") + format_double(g[i].lo) + "," + format_double(g[i].hi);
    return s;
  }

  static Cut parse(std::string_view spec) {
    spec = text::trim(spec);
    auto colon = spec.find(':');
    require(colon != std::string_view::npos, "cut spec needs a kind prefix: '" + std::string(spec) + "'");
    auto kind = spec.substr(0, colon);
    auto body = spec.substr(colon + 1);
    if (kind == "at") return at(text::to_double(body));
    if (kind == "pts") {
      std::vector<std::size_t> idx;
      for (auto f : text::split(body, ',')) {
        auto v = text::to_int(f);
        require(v >= 0, "negative point index in cut");
        idx.push_back(static_cast<std::size_t>(v));
      }
      return subset(Support::points(std::move(idx)));
    }
    if (kind == "set") {
      std::vector<Interval> iv;
      for (auto piece : text::split(body, ';')) {
        auto ab = text::split(piece, ',');
        require(ab.size() == 2, "set cut segment needs two endpoints");
        iv.push_back({text::to_double(ab[0]), text::to_double(ab[1])});
      }
      return subset(Support::intervals(std::move(iv)));
    }
    throw Error("unknown cut kind '" + std::string(kind) + "'");
  }
};

struct Atom {
  AtomId id = 0;
  Support support;
  double measure = 1.0;
  int depth = 0;       // number of ancestors
  int born = 0;        // level at which the atom appears
  int split_at = -1;   // level at which it is divided, -1 while a leaf
  AtomId parent = kNoAtom;
  AtomId small_child = kNoAtom;  // A'
  AtomId large_child = kNoAtom;  // A''
};

struct SplitRecord {
  int n = 0;
  AtomId atom = 0;
  AtomId small = 0;
  AtomId large = 0;
  Cut cut;
};

// Finite binary filtration: step n divides exactly one atom into A'_n, A''_n with |A'_n| <= |A''_n|.
// Atom ids: Omega = 0, step n creates 2n-1 (A') and 2n (A'').
class BinaryFiltration {
 public:
  BinaryFiltration() = default;
  explicit BinaryFiltration(ProbabilitySpace space) : space_(std::move(space)) {
    Atom root;
    root.id = 0;
    root.support = space_.omega();
    root.measure = space_.measure(root.support);
    atoms_.push_back(std::move(root));
  }

  const ProbabilitySpace& space() const { return space_; }
  int depth() const { return static_cast<int>(splits_.size()); }
  const Atom& atom(AtomId id) const { return atoms_.at(id); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<SplitRecord>& splits() const { return splits_; }
  const SplitRecord& split_record(int n) const { return splits_.at(static_cast<std::size_t>(n - 1)); }
  bool is_leaf(AtomId id) const { return atom(id).split_at < 0; }

  std::pair<AtomId, AtomId> split(AtomId id, const Cut& cut) {
    require(id < atoms_.size(), "no atom with id " + std::to_string(id));
    require(is_leaf(id), "atom " + std::to_string(id) + " is not a leaf");
    const Support& s = atoms_[id].support;
    Support p, q;
    if (cut.kind == Cut::Kind::at) {
      std::tie(p, q) = space_.cut_at(s, cut.x);
    } else {
      require(cut.part.is_discrete() == space_.is_discrete(), "cut kind does not match the space backing");
      p = s.intersect(cut.part);
      q = s.minus(cut.part);
    }
    require(!p.empty() && !q.empty(), "cut of atom " + std::to_string(id) + " yields an empty or full part");
    double mp = space_.measure(p), mq = space_.measure(q);
    require(mp > 0.0 && mq > 0.0, "cut of atom " + std::to_string(id) + " yields a null part");
    bool p_first = mp < mq;
    if (std::abs(mp - mq) <= 1e-14 * atoms_[id].measure) p_first = leftmost(p) <= leftmost(q);
    if (!p_first) {
      std::swap(p, q);
      std::swap(mp, mq);
    }
    int n = depth() + 1;
    Atom a, b;
    a.id = atoms_.size();
    b.id = a.id + 1;
    a.support = std::move(p);
    b.support = std::move(q);
    a.measure = mp;
    b.measure = mq;
    a.depth = b.depth = atoms_[id].depth + 1;
    a.born = b.born = n;
    a.parent = b.parent = id;
    atoms_[id].split_at = n;
    atoms_[id].small_child = a.id;
    atoms_[id].large_child = b.id;
    splits_.push_back({n, id, a.id, b.id, cut});
    atoms_.push_back(std::move(a));
    atoms_.push_back(std::move(b));
    check_split(n);
    return {atoms_[atoms_.size() - 2].id, atoms_.back().id};
  }

  // atoms of level n in depth-first order, A' before A''
  std::vector<AtomId> atoms_at(int n) const {
    require(n >= 0 && n <= depth(), "level " + std::to_string(n) + " out of range");
    std::vector<AtomId> out;
    std::vector<AtomId> stack{0};
    while (!stack.empty()) {
      AtomId x = stack.back();
      stack.pop_back();
      const Atom& a = atoms_[x];
      if (a.split_at >= 0 && a.split_at <= n) {
        stack.push_back(a.large_child);
        stack.push_back(a.small_child);
      } else {
        out.push_back(x);
      }
    }
    return out;
  }

  std::vector<AtomId> leaves() const { return atoms_at(depth()); }

  // the atom of level n containing atom id (id must be born at or before its own level)
  AtomId ancestor_at(AtomId id, int n) const {
    AtomId x = id;
    while (atoms_[x].born > n) x = atoms_[x].parent;
    return x;
  }

  bool is_ancestor_or_self(AtomId anc, AtomId x) const {
    while (x != kNoAtom) {
      if (x == anc) return true;
      x = atoms_[x].parent;
    }
    return false;
  }

  // leaf atom containing coordinate x
  AtomId locate(double x) const {
    AtomId cur = 0;
    require(space_.contains_point(atoms_[0].support, x), "point " + format_double(x) + " is outside the space");
    while (!is_leaf(cur)) {
      const Atom& a = atoms_[cur];
      cur = space_.contains_point(atoms_[a.small_child].support, x) ? a.small_child : a.large_child;
    }
    return cur;
  }

  // "space <descriptor>" header, then one "n atom_id cut" line per split
  std::string to_text() const {
    std::ostringstream os;
    os << "# binary filtration\n";
    os << "space " << space_.descriptor() << "\n";
    for (const auto& s : splits_) os << s.n << " " << s.atom << " " << s.cut.to_string() << "\n";
    return os.str();
  }

  static BinaryFiltration from_text(const std::string& txt) {
    std::istringstream is(txt);
    std::string line;
    int lineno = 0;
    BinaryFiltration f;
    bool have_space = false;
    while (std::getline(is, line)) {
      ++lineno;
      auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto where = " (line " + std::to_string(lineno) + ")";
      try {
        if (!have_space) {
          require(t.substr(0, 6) == "space ", "expected 'space <descriptor>'");
          f = BinaryFiltration(ProbabilitySpace::parse(t.substr(6)));
          have_space = true;
          continue;
        }
        auto fields = fields_of(t);
        require(fields.size() == 3, "expected 'n atom_id cut'");
        auto n = text::to_int(fields[0]);
        require(n == f.depth() + 1, "split index " + std::to_string(n) + " out of sequence");
        auto id = text::to_int(fields[1]);
        require(id >= 0, "negative atom id");
        f.split(static_cast<AtomId>(id), Cut::parse(fields[2]));
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + where);
      }
    }
    require(have_space, "filtration text has no space header");
    return f;
  }

  // measure conservation, ordering and partition checks over every split
  void check_invariants() const {
    for (int n = 1; n <= depth(); ++n) check_split(n);
    ensure(atoms_at(depth()).size() == static_cast<std::size_t>(depth()) + 1, "leaf count mismatch");
  }

 private:
  static std::vector<std::string_view> fields_of(std::string_view t) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < t.size()) {
      while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < t.size() && t[j] != ' ' && t[j] != '\t') ++j;
      if (j > i) out.push_back(t.substr(i, j - i));
      i = j;
    }
    return out;
  }

  double leftmost(const Support& s) const {
    if (s.is_discrete()) return static_cast<double>(s.point_indices().front());
    return s.segments().front().lo;
  }

  void check_split(int n) const {
    const auto& r = splits_.at(static_cast<std::size_t>(n - 1));
    const Atom& p = atoms_[r.atom];
    const Atom& a = atoms_[r.small];
    const Atom& b = atoms_[r.large];
    ensure(a.measure > 0.0 && b.measure > 0.0, "split " + std::to_string(n) + " produced a null atom");
    ensure(a.measure <= b.measure + 1e-14 * p.measure, "split " + std::to_string(n) + " violates |A'| <= |A''|");
    ensure(std::abs(a.measure + b.measure - p.measure) <= 1e-12,
           "split " + std::to_string(n) + " does not conserve measure");
    ensure(a.support.intersect(b.support).empty() && a.support.unite(b.support) == p.support,
           "split " + std::to_string(n) + " children do not partition the parent");
  }

  ProbabilitySpace space_;
  std::vector<Atom> atoms_;
  std::vector<SplitRecord> splits_;
};

// Binary filtration generators used by experiments and tests.
namespace gen {

// a random proper subset of a discrete leaf, or a random quantile cut of a continuous one
inline Cut random_cut(const BinaryFiltration& f, AtomId id, Rng& rng, double lo = 0.02, double hi = 0.98) {
  const auto& sp = f.space();
  const auto& s = f.atom(id).support;
  if (sp.is_discrete()) {
    const auto& pts = s.point_indices();
    for (;;) {
      std::vector<std::size_t> pick;
      for (auto i : pts)
        if (rng.bits() & 1) pick.push_back(i);
      if (!pick.empty() && pick.size() < pts.size()) return Cut::subset(Support::points(std::move(pick)));
    }
  }
  return Cut::at(sp.quantile(s, rng.uniform(lo, hi)));
}

inline bool splittable(const BinaryFiltration& f, AtomId id) {
  return !f.space().is_discrete() || f.atom(id).support.point_indices().size() >= 2;
}

inline BinaryFiltration random(const ProbabilitySpace& space, int depth, Rng& rng) {
  BinaryFiltration f(space);
  for (int n = 0; n < depth; ++n) {
    std::vector<AtomId> cand;
    for (auto id : f.leaves())
      if (splittable(f, id)) cand.push_back(id);
    if (cand.empty()) break;
    AtomId id = cand[rng.index(cand.size())];
    f.split(id, random_cut(f, id, rng));
  }
  return f;
}

inline Cut midpoint_cut(const BinaryFiltration& f, AtomId id) {
  const auto& sp = f.space();
  const auto& s = f.atom(id).support;
  if (sp.is_discrete()) {
    const auto& pts = s.point_indices();
    return Cut::subset(Support::points({pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(pts.size() / 2)}));
  }
  return Cut::at(sp.quantile(s, 0.5));
}

// every atom of every generation halved: `levels` generations, 2^levels - 1 splits
inline BinaryFiltration dyadic(const ProbabilitySpace& space, int levels) {
  BinaryFiltration f(space);
  for (int L = 0; L < levels; ++L) {
    auto gen = f.leaves();
    for (auto id : gen)
      if (splittable(f, id)) f.split(id, midpoint_cut(f, id));
  }
  return f;
}

// Omega halved, then the newest small atom halved, `depth` times
inline BinaryFiltration chain(const ProbabilitySpace& space, int depth) {
  BinaryFiltration f(space);
  AtomId cur = 0;
  for (int n = 0; n < depth && splittable(f, cur); ++n) cur = f.split(cur, midpoint_cut(f, cur)).first;
  return f;
}

}  // namespace gen

}  // namespace locos
