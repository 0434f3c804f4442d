#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "csipos/channel/types.hpp"

namespace csipos::channel {

enum class TopologyKind { ura, ula, dis };

inline std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ura: return "URA";
    case TopologyKind::ula: return "ULA";
    case TopologyKind::dis: return "DIS";
  }
  return "?";
}

inline TopologyKind parse_topology_kind(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "ura") return TopologyKind::ura;
  if (s == "ula") return TopologyKind::ula;
  if (s == "dis" || s == "distributed") return TopologyKind::dis;
  throw ConfigError("unknown topology '" + s + "' (expected ura, ula or dis)");
}

/// Placement of the array and the user areas. Heights are above the floor;
/// x/y are horizontal with the origin at the middle of the URA and +y
/// pointing from the array towards the users.
struct GeometryConfig {
  double standoff_mm = 1000.0;       // array plane to nearest user-area edge
  double lowest_element_mm = 930.0;  // height of the lowest antenna row
  double spacing_mm = 70.0;          // adjacent element pitch
  double user_height_mm = 200.0;
  double area_size_mm = 1250.0;      // side of one square user area
  std::size_t n_areas = 1;           // 1, or 4 laid out 2 x 2
  double area_gap_mm = 200.0;        // gap between neighbouring areas when n_areas = 4
};

/// User areas: a single square centred on x = 0, or a 2 x 2 block of them.
inline std::vector<Area> user_areas(const GeometryConfig& geo) {
  const double s = geo.area_size_mm;
  if (geo.n_areas == 1) return {Area{-s / 2.0, geo.standoff_mm, s, s}};
  if (geo.n_areas == 4) {
    const double g = geo.area_gap_mm;
    std::vector<Area> areas;
    for (int row = 0; row < 2; ++row)
      for (int col = 0; col < 2; ++col)
        areas.push_back(Area{-s - g / 2.0 + col * (s + g), geo.standoff_mm + row * (s + g), s, s});
    return areas;
  }
  throw ConfigError("geometry: n_areas must be 1 or 4");
}

inline Area bounding_area(const std::vector<Area>& areas) {
  Area box = areas.front();
  double x1 = box.x_max(), y1 = box.y_max();
  for (const Area& a : areas) {
    box.x_min = std::min(box.x_min, a.x_min);
    box.y_min = std::min(box.y_min, a.y_min);
    x1 = std::max(x1, a.x_max());
    y1 = std::max(y1, a.y_max());
  }
  box.width = x1 - box.x_min;
  box.depth = y1 - box.y_min;
  return box;
}

struct Topology {
  TopologyKind kind = TopologyKind::ura;
  std::vector<Point3> elements;
  double element_spacing_mm = 70.0;
  std::string name;
};

/// Element coordinates for the three deployments.
///
/// URA: 8 x 8 vertical grid in the plane y = 0, element n at row n / 8
///      (height) and column n % 8 (x), centred on x = 0.
/// ULA: 64 elements on the x axis at the lowest-element height.
/// DIS: 8 horizontal sub-arrays of 8 on the corners and edge midpoints of a
///      square lying `standoff` outside the user-area bounding box, each
///      broadside towards the square's centre. Synthetic placement.
inline Topology build_topology(TopologyKind kind, const GeometryConfig& geo = {}) {
  const double p = geo.spacing_mm;
  Topology t;
  t.kind = kind;
  t.element_spacing_mm = p;
  t.name = to_string(kind);
  switch (kind) {
    case TopologyKind::ura:
      for (int row = 0; row < 8; ++row)
        for (int col = 0; col < 8; ++col)
          t.elements.push_back({(col - 3.5) * p, 0.0, geo.lowest_element_mm + row * p});
      break;
    case TopologyKind::ula:
      for (int i = 0; i < 64; ++i) t.elements.push_back({(i - 31.5) * p, 0.0, geo.lowest_element_mm});
      break;
    case TopologyKind::dis: {
      const Area box = bounding_area(user_areas(geo));
      const double x0 = box.x_min - geo.standoff_mm, x1 = box.x_max() + geo.standoff_mm;
      const double y0 = box.y_min - geo.standoff_mm, y1 = box.y_max() + geo.standoff_mm;
      const double cx = (x0 + x1) / 2.0, cy = (y0 + y1) / 2.0;
      const Point3 centres[8] = {{cx, y0, 0}, {x1, y0, 0}, {x1, cy, 0}, {x1, y1, 0},
                                 {cx, y1, 0}, {x0, y1, 0}, {x0, cy, 0}, {x0, y0, 0}};
      for (const Point3& c : centres) {
        // Line direction perpendicular to the bearing towards the centre.
        const double bx = cx - c.x, by = cy - c.y;
        const double norm = std::hypot(bx, by);
        const double ux = -by / norm, uy = bx / norm;
        for (int i = 0; i < 8; ++i) {
          const double off = (i - 3.5) * p;
          t.elements.push_back({c.x + off * ux, c.y + off * uy, geo.lowest_element_mm});
        }
      }
      break;
    }
  }
  return t;
}

/// Keeps the listed elements, in order.
inline Topology select_elements(const Topology& t, const std::vector<std::size_t>& indices) {
  Topology out = t;
  out.elements.clear();
  for (std::size_t i : indices) out.elements.push_back(t.elements.at(i));
  return out;
}

}  // namespace csipos::channel
