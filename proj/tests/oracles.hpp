#pragma once

// Naive reference implementations the library is checked against. They work
// bit by bit or cell by cell and share no code with src/.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "core/image.hpp"

namespace oracle {

using iiie::ImageBuffer;
using iiie::Mask;

inline Mask complement(const Mask& m) {
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(x, y, !m.at(x, y));
  return out;
}

inline Mask unite(const std::vector<Mask>& ms) {
  Mask out(ms.front().width(), ms.front().height());
  for (const auto& m : ms)
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y)) out.set(x, y, true);
  return out;
}

// Every output bit looks for any source bit at squared distance <= r^2.
inline Mask dilate(const Mask& m, int r) {
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool hit = false;
      for (int sy = std::max(0, y - r); sy <= std::min(m.height() - 1, y + r) && !hit; ++sy)
        for (int sx = std::max(0, x - r); sx <= std::min(m.width() - 1, x + r) && !hit; ++sx)
          hit = m.at(sx, sy) && (sx - x) * (sx - x) + (sy - y) * (sy - y) <= r * r;
      out.set(x, y, hit);
    }
  }
  return out;
}

inline Mask rasterize(int x0, int y0, int x1, int y1, int w, int h) {
  Mask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, x >= x0 && x < x1 && y >= y0 && y < y1);
  return out;
}

inline std::size_t count(const Mask& m) {
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) n += m.at(x, y) ? 1 : 0;
  return n;
}

inline Mask random_mask(std::mt19937& rng, int w, int h, double density) {
  std::bernoulli_distribution bit(density);
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  return m;
}

inline ImageBuffer random_image(std::mt19937& rng, int w, int h) {
  std::uniform_int_distribution<int> byte(0, 255);
  ImageBuffer img(w, h);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(byte(rng));
  return img;
}

// Share of positive majority votes in hundredths, rounded half-up, by long
// division.
inline std::string display(std::int64_t num, std::int64_t den) {
  std::int64_t whole = num * 100 / den;
  const std::int64_t rem = num * 100 % den;
  if (rem * 2 >= den) ++whole;
  std::string frac = std::to_string(whole % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return std::to_string(whole / 100) + "." + frac;
}

struct Rating {
  std::string method, image, metric, rater;
  int score;
};

// Cell by cell: count ones, compare against half the panel as a real number.
inline std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> brute_force(
    const std::vector<Rating>& ratings) {
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<int, int>> cells;  // ones, total
  for (const auto& r : ratings) {
    auto& c = cells[{r.method, r.image, r.metric}];
    c.first += r.score;
    c.second += 1;
  }
  std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> out;  // (method, metric)
  for (const auto& [key, c] : cells) {
    auto& o = out[{std::get<0>(key), std::get<2>(key)}];
    o.first += (c.first > c.second / 2.0) ? 1 : 0;
    o.second += 1;
  }
  return out;
}

}  // namespace oracle
