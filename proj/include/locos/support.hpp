#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "locos/error.hpp"

namespace locos {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace text {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline double to_double(std::string_view s) {
  std::string tmp(trim(s));
  if (tmp.empty()) throw Error("expected a number, got an empty field");
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) throw Error("not a number: '" + tmp + "'");
  return v;
}

inline long long to_int(std::string_view s) {
  std::string tmp(trim(s));
  if (tmp.empty()) throw Error("expected an integer, got an empty field");
  char* end = nullptr;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end != tmp.c_str() + tmp.size()) throw Error("not an integer: '" + tmp + "'");
  return v;
}

}  // namespace text

// half-open [lo, hi)
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Either a finite union of disjoint intervals or a finite set of point indices.
class Support {
 public:
  Support() = default;

  static Support intervals(std::vector<Interval> iv) {
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    Support s;
    s.discrete_ = false;
    for (const auto& x : iv) {
      if (!(x.hi > x.lo)) continue;
      if (!s.segs_.empty() && x.lo <= s.segs_.back().hi) {
        s.segs_.back().hi = std::max(s.segs_.back().hi, x.hi);
      } else {
        s.segs_.push_back(x);
      }
    }
    return s;
  }

  static Support points(std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    Support s;
    s.discrete_ = true;
    s.pts_ = std::move(idx);
    return s;
  }

  bool is_discrete() const { return discrete_; }
  bool empty() const { return discrete_ ? pts_.empty() : segs_.empty(); }
  const std::vector<Interval>& segments() const { return segs_; }
  const std::vector<std::size_t>& point_indices() const { return pts_; }

  Support intersect(const Support& o) const {
    if (discrete_ != o.discrete_) throw Error("mixing discrete and continuous supports");
    if (discrete_) {
      std::vector<std::size_t> out;
      std::set_intersection(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(out));
      return points(std::move(out));
    }
    std::vector<Interval> out;
    for (const auto& a : segs_)
      for (const auto& b : o.segs_) {
        double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
        if (hi > lo) out.push_back({lo, hi});
      }
    return intervals(std::move(out));
  }

  Support minus(const Support& o) const {
    if (discrete_ != o.discrete_) throw Error("mixing discrete and continuous supports");
    if (discrete_) {
      std::vector<std::size_t> out;
      std::set_difference(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(out));
      return points(std::move(out));
    }
    std::vector<Interval> cur = segs_;
    for (const auto& b : o.segs_) {
      std::vector<Interval> next;
      for (const auto& a : cur) {
        if (b.hi <= a.lo || b.lo >= a.hi) {
          next.push_back(a);
          continue;
        }
        if (b.lo > a.lo) next.push_back({a.lo, b.lo});
        if (b.hi < a.hi) next.push_back({b.hi, a.hi});
      }
      cur = std::move(next);
    }
    return intervals(std::move(cur));
  }

  Support unite(const Support& o) const {
    if (discrete_ != o.discrete_) throw Error("mixing discrete and continuous supports");
    if (discrete_) {
      auto v = pts_;
      v.insert(v.end(), o.pts_.begin(), o.pts_.end());
      return points(std::move(v));
    }
    auto v = segs_;
    v.insert(v.end(), o.segs_.begin(), o.segs_.end());
    return intervals(std::move(v));
  }

  bool contains(const Support& o) const { return o.minus(*this).empty(); }

  friend bool operator==(const Support&, const Support&) = default;

 private:
  bool discrete_ = false;
  std::vector<Interval> segs_;
  std::vector<std::size_t> pts_;
};

enum class Backing { continuous, discrete };

// Segments of the line with normalized Lebesgue measure, or finitely many weighted points.
class ProbabilitySpace {
 public:
  ProbabilitySpace() = default;

  static ProbabilitySpace from_segments(std::vector<Interval> segs, std::string descriptor = {}) {
    require(!segs.empty(), "space needs at least one segment");
    for (const auto& s : segs)
      require(std::isfinite(s.lo) && std::isfinite(s.hi) && s.hi > s.lo,
              "segment [" + format_double(s.lo) + "," + format_double(s.hi) + "] has non-positive length");
    ProbabilitySpace ps;
    ps.backing_ = Backing::continuous;
    auto sup = Support::intervals(segs);
    double total = 0.0;
    for (const auto& s : sup.segments()) total += s.length();
    ps.omega_ = std::move(sup);
    ps.total_length_ = total;
    if (descriptor.empty()) {
      descriptor = "segments:";
      for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i) descriptor += ';';
        descriptor += format_double(segs[i].lo) + "," + format_double(segs[i].hi);
      }
    }
    ps.descriptor_ = std::move(descriptor);
    return ps;
  }

  // masses are normalized to sum to one; coordinates default to the point index
  static ProbabilitySpace from_points(std::vector<double> masses, std::vector<double> coords = {},
                                     std::string descriptor = {}) {
    require(!masses.empty(), "space needs at least one point");
    if (coords.empty()) {
      coords.resize(masses.size());
      for (std::size_t i = 0; i < masses.size(); ++i) coords[i] = static_cast<double>(i);
    }
    require(coords.size() == masses.size(), "point coordinates and masses differ in count");
    double total = 0.0;
    for (double m : masses) {
      require(std::isfinite(m) && m > 0.0, "point mass must be positive, got " + format_double(m));
      total += m;
    }
    ProbabilitySpace ps;
    ps.backing_ = Backing::discrete;
    ps.masses_.resize(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) ps.masses_[i] = masses[i] / total;
    ps.coords_ = std::move(coords);
    std::vector<std::size_t> idx(masses.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    ps.omega_ = Support::points(std::move(idx));
    if (descriptor.empty()) {
      descriptor = "points:";
      for (std::size_t i = 0; i < masses.size(); ++i) {
        if (i) descriptor += ',';
        descriptor += format_double(ps.coords_[i]) + "@" + format_double(masses[i]);
      }
    }
    ps.descriptor_ = std::move(descriptor);
    return ps;
  }

  // interval:a,b | segments:a,b;c,d | uniform:N | points:x@m,x@m,...
  static ProbabilitySpace parse(std::string_view desc) {
    desc = text::trim(desc);
    require(!desc.empty(), "empty space descriptor");
    auto colon = desc.find(':');
    require(colon != std::string_view::npos, "space descriptor needs a kind prefix: '" + std::string(desc) + "'");
    auto kind = text::trim(desc.substr(0, colon));
    auto body = text::trim(desc.substr(colon + 1));
    std::string keep(desc);
    if (kind == "interval" || kind == "segments") {
      std::vector<Interval> segs;
      for (auto piece : text::split(body, ';')) {
        auto ab = text::split(piece, ',');
        require(ab.size() == 2, "segment needs two endpoints: '" + std::string(piece) + "'");
        segs.push_back({text::to_double(ab[0]), text::to_double(ab[1])});
      }
      require(kind == "segments" || segs.size() == 1, "interval: takes exactly one segment");
      return from_segments(std::move(segs), keep);
    }
    if (kind == "uniform") {
      auto n = text::to_int(body);
      require(n >= 1, "uniform: needs at least one point");
      return from_points(std::vector<double>(static_cast<std::size_t>(n), 1.0), {}, keep);
    }
    if (kind == "points") {
      std::vector<double> xs, ms;
      for (auto piece : text::split(body, ',')) {
        auto at = piece.find('@');
        require(at != std::string_view::npos, "point needs coordinate@mass: '" + std::string(piece) + "'");
        xs.push_back(text::to_double(piece.substr(0, at)));
        ms.push_back(text::to_double(piece.substr(at + 1)));
      }
      return from_points(std::move(ms), std::move(xs), keep);
    }
    throw Error("unknown space kind '" + std::string(kind) + "'");
  }

  const std::string& descriptor() const { return descriptor_; }
  Backing backing() const { return backing_; }
  bool is_discrete() const { return backing_ == Backing::discrete; }
  const Support& omega() const { return omega_; }
  std::size_t num_points() const { return masses_.size(); }
  double mass(std::size_t i) const { return masses_.at(i); }
  double coord(std::size_t i) const { return coords_.at(i); }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<double>& coords() const { return coords_; }
  // Lebesgue length of Omega; continuous density is 1/total_length
  double total_length() const { return total_length_; }
  double density() const { return 1.0 / total_length_; }

  double measure(const Support& s) const {
    if (s.is_discrete() != is_discrete()) throw Error("support kind does not match the space backing");
    double m = 0.0;
    if (is_discrete()) {
      for (auto i : s.point_indices()) m += masses_.at(i);
      return m;
    }
    for (const auto& iv : s.segments()) m += iv.length();
    return m / total_length_;
  }

  // points with coordinate < x, then the rest
  std::pair<Support, Support> cut_at(const Support& s, double x) const {
    if (is_discrete()) {
      std::vector<std::size_t> lo, hi;
      for (auto i : s.point_indices()) (coords_[i] < x ? lo : hi).push_back(i);
      return {Support::points(std::move(lo)), Support::points(std::move(hi))};
    }
    std::vector<Interval> lo, hi;
    for (const auto& iv : s.segments()) {
      if (iv.hi <= x) lo.push_back(iv);
      else if (iv.lo >= x) hi.push_back(iv);
      else {
        lo.push_back({iv.lo, x});
        hi.push_back({x, iv.hi});
      }
    }
    return {Support::intervals(std::move(lo)), Support::intervals(std::move(hi))};
  }

  // coordinate x such that the part of s below x carries the fraction u of its measure
  double quantile(const Support& s, double u) const {
    if (is_discrete()) {
      const auto& p = s.point_indices();
      require(!p.empty(), "quantile of an empty support");
      double total = measure(s), acc = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        acc += masses_[p[k]];
        if (acc >= u * total && k + 1 < p.size()) return 0.5 * (coords_[p[k]] + coords_[p[k + 1]]);
      }
      return coords_[p.back()];
    }
    double total = 0.0;
    for (const auto& iv : s.segments()) total += iv.length();
    double target = u * total, acc = 0.0;
    for (const auto& iv : s.segments()) {
      if (acc + iv.length() >= target) return iv.lo + (target - acc);
      acc += iv.length();
    }
    return s.segments().back().hi;
  }

  // bounding box [lo, hi] of a support in coordinates
  std::pair<double, double> hull(const Support& s) const {
    if (is_discrete()) {
      double lo = INFINITY, hi = -INFINITY;
      for (auto i : s.point_indices()) {
        lo = std::min(lo, coords_[i]);
        hi = std::max(hi, coords_[i]);
      }
      return {lo, hi};
    }
    return {s.segments().front().lo, s.segments().back().hi};
  }

  // whether coordinate x lies in s (the right end of Omega counts as inside)
  bool contains_point(const Support& s, double x) const {
    if (is_discrete()) {
      for (auto i : s.point_indices())
        if (coords_[i] == x) return true;
      return false;
    }
    double top = omega_.segments().back().hi;
    for (const auto& iv : s.segments())
      if ((iv.lo <= x && x < iv.hi) || (x == top && iv.hi == top)) return true;
    return false;
  }

 private:
  Backing backing_ = Backing::continuous;
  Support omega_;
  double total_length_ = 1.0;
  std::vector<double> masses_;
  std::vector<double> coords_;
  std::string descriptor_;
};

}  // namespace locos
