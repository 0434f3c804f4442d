#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "csipos/channel/types.hpp"
#include "csipos/error.hpp"

namespace csipos::evalkit {

namespace detail {

// Strokes on a unit box (x right, y up); '|' separates strokes.
inline std::string_view glyph_strokes(char c) {
  static constexpr std::array<std::string_view, 26> font = {
      "0,0 .5,1 1,0 | .25,.5 .75,.5",
      "0,0 0,1 .7,1 .9,.9 .9,.6 .7,.5 0,.5 | .7,.5 1,.4 1,.1 .8,0 0,0",
      "1,.9 .8,1 .2,1 0,.8 0,.2 .2,0 .8,0 1,.1",
      "0,0 0,1 .6,1 1,.7 1,.3 .6,0 0,0",
      "1,1 0,1 0,0 1,0 | 0,.5 .7,.5",
      "1,1 0,1 0,0 | 0,.5 .7,.5",
      "1,.9 .8,1 .2,1 0,.8 0,.2 .2,0 .8,0 1,.2 1,.45 .55,.45",
      "0,0 0,1 | 1,0 1,1 | 0,.5 1,.5",
      ".5,0 .5,1",
      "1,1 1,.2 .8,0 .2,0 0,.2",
      "0,0 0,1 | 1,1 0,.4 | .35,.65 1,0",
      "0,1 0,0 1,0",
      "0,0 0,1 .5,.5 1,1 1,0",
      "0,0 0,1 1,0 1,1",
      ".2,0 0,.2 0,.8 .2,1 .8,1 1,.8 1,.2 .8,0 .2,0",
      "0,0 0,1 .8,1 1,.85 1,.65 .8,.5 0,.5",
      ".2,0 0,.2 0,.8 .2,1 .8,1 1,.8 1,.2 .8,0 .2,0 | .6,.3 1,0",
      "0,0 0,1 .8,1 1,.85 1,.65 .8,.5 0,.5 | .5,.5 1,0",
      "1,.9 .8,1 .2,1 0,.85 0,.65 .2,.5 .8,.5 1,.35 1,.15 .8,0 .2,0 0,.1",
      "0,1 1,1 | .5,1 .5,0",
      "0,1 0,.2 .2,0 .8,0 1,.2 1,1",
      "0,1 .5,0 1,1",
      "0,1 .25,0 .5,.6 .75,0 1,1",
      "0,0 1,1 | 0,1 1,0",
      "0,1 .5,.5 1,1 | .5,.5 .5,0",
      "0,1 1,1 0,0 1,0",
  };
  if (c == ' ') return {};
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u < 'A' || u > 'Z') {
    throw ConfigError(std::string("letter_path: unsupported glyph '") + c + "' (supported: A-Z, a-z, space)");
  }
  return font[static_cast<std::size_t>(u - 'A')];
}

inline std::vector<std::vector<channel::Position>> parse_strokes(std::string_view s) {
  std::vector<std::vector<channel::Position>> strokes(1);
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ') {
      ++i;
    } else if (s[i] == '|') {
      strokes.emplace_back();
      ++i;
    } else {
      const std::size_t comma = s.find(',', i);
      std::size_t end = s.find(' ', comma);
      if (end == std::string_view::npos) end = s.size();
      const double x = std::stod(std::string(s.substr(i, comma - i)));
      const double y = std::stod(std::string(s.substr(comma + 1, end - comma - 1)));
      strokes.back().push_back({x, y});
      i = end;
    }
  }
  if (strokes.back().empty()) strokes.pop_back();
  return strokes;
}

// Points every <= spacing along a polyline, both ends included.
inline void sample_polyline(const std::vector<channel::Position>& pts, double spacing,
                            std::vector<channel::Position>& out) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  }
  const double L = cum.back();
  const auto m = static_cast<std::size_t>(std::ceil(L / spacing - 1e-9));
  if (m == 0) {
    out.push_back(pts.front());
    return;
  }
  std::size_t seg = 1;
  for (std::size_t j = 0; j <= m; ++j) {
    if (j == m) {
      out.push_back(pts.back());
      break;
    }
    const double s = L * static_cast<double>(j) / static_cast<double>(m);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back({pts[seg - 1].x + t * (pts[seg].x - pts[seg - 1].x), pts[seg - 1].y + t * (pts[seg].y - pts[seg - 1].y)});
  }
}

}  // namespace detail

/// Waypoints tracing `text` in a built-in stroke font, centred in `area`.
/// Glyphs are 0.6 h wide on a 0.8 h advance, with h as large as the area allows.
/// Each stroke is sampled at equal arc-length steps no longer than `spacing`.
inline std::vector<channel::Position> letter_path(std::string_view text, const channel::Area& area, double spacing) {
  if (text.empty()) throw ConfigError("letter_path: empty text");
  if (!(spacing > 0.0)) throw ConfigError("letter_path: spacing must be > 0");
  const double n = static_cast<double>(text.size());
  const double h = std::min(area.depth, area.width / (0.8 * n - 0.2));
  const double x0 = area.x_min + 0.5 * (area.width - (0.8 * n - 0.2) * h);
  const double y0 = area.y_min + 0.5 * (area.depth - h);
  std::vector<channel::Position> out;
  for (std::size_t g = 0; g < text.size(); ++g) {
    const double gx = x0 + 0.8 * h * static_cast<double>(g);
    for (auto stroke : detail::parse_strokes(detail::glyph_strokes(text[g]))) {
      for (auto& p : stroke) p = {gx + 0.6 * h * p.x, y0 + h * p.y};
      detail::sample_polyline(stroke, spacing, out);
    }
  }
  for (auto& p : out) {
    p.x = std::clamp(p.x, area.x_min, area.x_max());
    p.y = std::clamp(p.y, area.y_min, area.y_max());
  }
  return out;
}

}  // namespace csipos::evalkit
