#include <algorithm>
#include <cstring>
#include <map>

#include "hopman/eval/report.hpp"

namespace hopman::eval {

namespace {

// 5x7 bitmap glyphs for chart labels (digits, upper/lower letters used by the
// condition/skill/level names, and a few symbols).
struct Glyph {
  char c;
  const char* rows[7];
};

const Glyph* find_glyph(char c);

const Glyph kGlyphs[] = {
    {'0', {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}},
    {'1', {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}},
    {'2', {"01110", "10001", "00001", "00010", "00100", "01000", "11111"}},
    {'3', {"11110", "00001", "00001", "01110", "00001", "00001", "11110"}},
    {'4', {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}},
    {'5', {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}},
    {'6', {"00110", "01000", "10000", "11110", "10001", "10001", "01110"}},
    {'7', {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}},
    {'8', {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}},
    {'9', {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}},
    {'.', {"00000", "00000", "00000", "00000", "00000", "01100", "01100"}},
    {'%', {"11001", "11010", "00010", "00100", "01000", "01011", "10011"}},
    {'+', {"00000", "00100", "00100", "11111", "00100", "00100", "00000"}},
    {'-', {"00000", "00000", "00000", "11111", "00000", "00000", "00000"}},
    {'_', {"00000", "00000", "00000", "00000", "00000", "00000", "11111"}},
    {' ', {"00000", "00000", "00000", "00000", "00000", "00000", "00000"}},
    {'A', {"01110", "10001", "10001", "11111", "10001", "10001", "10001"}},
    {'B', {"11110", "10001", "10001", "11110", "10001", "10001", "11110"}},
    {'C', {"01110", "10001", "10000", "10000", "10000", "10001", "01110"}},
    {'G', {"01110", "10001", "10000", "10111", "10001", "10001", "01111"}},
    {'H', {"10001", "10001", "10001", "11111", "10001", "10001", "10001"}},
    {'M', {"10001", "11011", "10101", "10101", "10001", "10001", "10001"}},
    {'O', {"01110", "10001", "10001", "10001", "10001", "10001", "01110"}},
    {'P', {"11110", "10001", "10001", "11110", "10000", "10000", "10000"}},
    {'S', {"01111", "10000", "10000", "01110", "00001", "00001", "11110"}},
    {'a', {"00000", "00000", "01110", "00001", "01111", "10001", "01111"}},
    {'b', {"10000", "10000", "11110", "10001", "10001", "10001", "11110"}},
    {'c', {"00000", "00000", "01110", "10001", "10000", "10001", "01110"}},
    {'e', {"00000", "00000", "01110", "10001", "11111", "10000", "01110"}},
    {'h', {"10000", "10000", "11110", "10001", "10001", "10001", "10001"}},
    {'i', {"00100", "00000", "01100", "00100", "00100", "00100", "01110"}},
    {'k', {"10000", "10000", "10010", "10100", "11000", "10100", "10010"}},
    {'l', {"01100", "00100", "00100", "00100", "00100", "00100", "01110"}},
    {'n', {"00000", "00000", "11110", "10001", "10001", "10001", "10001"}},
    {'o', {"00000", "00000", "01110", "10001", "10001", "10001", "01110"}},
    {'p', {"00000", "00000", "11110", "10001", "11110", "10000", "10000"}},
    {'s', {"00000", "00000", "01111", "10000", "01110", "00001", "11110"}},
    {'t', {"01000", "01000", "11110", "01000", "01000", "01001", "00110"}},
    {'u', {"00000", "00000", "10001", "10001", "10001", "10001", "01111"}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kGlyphs)
    if (g.c == c) return &g;
  return nullptr;
}

void draw_text(Image& img, int x, int y, const std::string& text, Rgb color) {
  for (char c : text) {
    if (const Glyph* g = find_glyph(c)) {
      for (int r = 0; r < 7; ++r)
        for (int k = 0; k < 5; ++k)
          if (g->rows[r][k] == '1' && x + k >= 0 && x + k < img.w && y + r >= 0 && y + r < img.h)
            img.set(x + k, y + r, color);
    }
    x += 6;
  }
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb color) {
  for (int y = std::max(0, y0); y <= std::min(img.h - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(img.w - 1, x1); ++x) img.set(x, y, color);
}

const Rgb kBarColors[] = {{70, 130, 220}, {230, 150, 50}, {90, 180, 90},
                          {200, 80, 80},  {150, 100, 200}, {120, 120, 120}};

}  // namespace

Image render_level_chart(const std::vector<ResultTable>& tables, Level level) {
  std::vector<const ResultTable*> with;
  std::vector<world::Skill> skills;
  for (const auto& t : tables) {
    bool any = false;
    for (const auto& [key, c] : t.cells)
      if (key.first == level) {
        any = true;
        if (std::find(skills.begin(), skills.end(), key.second) == skills.end())
          skills.push_back(key.second);
      }
    if (any) with.push_back(&t);
  }

  const int W = 640, H = 360;
  Image img(W, H);
  fill_rect(img, 0, 0, W - 1, H - 1, {250, 250, 250});
  const int left = 50, right = W - 20, top = 40, bottom = H - 60;
  // Axes and horizontal gridlines every 0.25.
  fill_rect(img, left, bottom, right, bottom, {30, 30, 30});
  fill_rect(img, left, top, left, bottom, {30, 30, 30});
  for (int i = 0; i <= 4; ++i) {
    const int y = bottom - (bottom - top) * i / 4;
    if (i > 0) fill_rect(img, left + 1, y, right, y, {225, 225, 225});
    char lab[16];
    std::snprintf(lab, sizeof(lab), "%d%%", i * 25);
    draw_text(img, 8, y - 3, lab, {60, 60, 60});
  }
  draw_text(img, left, 12, std::string("level ") + data::to_string(level), {20, 20, 20});

  if (!skills.empty() && !with.empty()) {
    const int group_w = (right - left) / int(skills.size());
    const int bar_w = std::max(4, (group_w - 16) / int(with.size()));
    for (size_t si = 0; si < skills.size(); ++si) {
      const int gx = left + int(si) * group_w + 8;
      for (size_t ci = 0; ci < with.size(); ++ci) {
        CellStats cs;
        const auto it = with[ci]->cells.find({level, skills[si]});
        if (it != with[ci]->cells.end()) cs = it->second;
        const int h = int((bottom - top) * cs.rate());
        const Rgb color = kBarColors[ci % 6];
        fill_rect(img, gx + int(ci) * bar_w, bottom - h, gx + int(ci) * bar_w + bar_w - 2,
                  bottom - 1, color);
      }
      draw_text(img, gx, bottom + 6, world::to_string(skills[si]), {20, 20, 20});
    }
    // Legend.
    int lx = left;
    const int ly = H - 28;
    for (size_t ci = 0; ci < with.size(); ++ci) {
      fill_rect(img, lx, ly, lx + 10, ly + 10, kBarColors[ci % 6]);
      draw_text(img, lx + 14, ly + 2, with[ci]->condition, {20, 20, 20});
      lx += 14 + 6 * int(with[ci]->condition.size()) + 16;
    }
  }
  return img;
}

}  // namespace hopman::eval
