#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "posterlab/design.hpp"

namespace posterlab {

// Square RGB raster with values in [0,1].
struct Raster {
    int size = 0;  // height == width
    std::vector<double> pixels;  // size*size*3, row-major, channel-last

    Raster() = default;
    explicit Raster(int n) : size(n), pixels(static_cast<size_t>(n) * n * 3, 0.0) {}

    double& at(int row, int col, int ch) { return pixels[(static_cast<size_t>(row) * size + col) * 3 + ch]; }
    double at(int row, int col, int ch) const { return pixels[(static_cast<size_t>(row) * size + col) * 3 + ch]; }
    double gray(int row, int col) const {
        return 0.299 * at(row, col, 0) + 0.587 * at(row, col, 1) + 0.114 * at(row, col, 2);
    }
    void clamp01();
};

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
};

// Exact pixel footprint of a box on an n-pixel canvas (coords are multiples
// of 1/64, so this is exact whenever 64 divides n).
PixelRect box_to_pixels(const Box& box, int canvas);

// --- 5x7 bitmap font -------------------------------------------------------

constexpr int kGlyphCols = 5;
constexpr int kGlyphRows = 7;
constexpr int kGlyphAdvance = 6;  // 5 columns + 1 spacing column

// Row-major 35-cell bitmask for a toy-alphabet character.
const std::array<uint64_t, kAlphabetSize>& font_table();
uint64_t glyph_bits(char c);
// Cell lookup: row r, col c of the glyph.
bool glyph_cell(uint64_t bits, int r, int c);

// Integer cell scale for a text of n chars in a w x h pixel box; 0 if it
// does not fit at one pixel per cell.
int glyph_scale_for(int n_chars, int box_w, int box_h);

// --- rendering ops ---------------------------------------------------------

// White-on-black glyph mask raster: one string per text box, centered,
// integer-scaled with preserved aspect. Pixels are exactly 0 or 1.
Raster render_glyph_image(const std::vector<std::string>& selected_texts, const Layout& layout, int canvas);

// Product sprite resized into the product box by nearest neighbor; all other
// pixels zero.
Raster place_product(const Raster& sprite, const Layout& layout, int canvas);

// Background palette: 8 colors (4 dark, 4 light) and 4 texture patterns
// (0 = flat). The glyph ink color contrasts with the background color.
std::array<double, 3> background_color(int color_id);
bool background_is_dark(int color_id);
std::array<double, 3> glyph_ink_color(int color_id);
Raster render_background(const Background& bg, int canvas, uint64_t seed);

struct SyntheticExample {
    Raster target;
    Raster glyph;
    Raster product;
};

// Ground-truth triple: background fill, product composited into its box,
// glyph pixels painted in the contrasting ink color (composite order:
// background, product, text).
SyntheticExample synthesize_example(const Design& d, const std::vector<std::string>& selected_texts,
                                    const Raster& sprite, uint64_t seed);

// --- toy OCR ----------------------------------------------------------------

// Recognizes the text in each text box by downscaling to the 5x7 cell grid,
// thresholding at 0.5 and Hamming-matching against the font table. Character
// count is inferred by trying every n and keeping the best normalized match;
// box polarity (light-on-dark vs dark-on-light) is chosen the same way.
// Boxes too small for a single cell yield "□". Results are trimmed of
// leading/trailing spaces; an inkless box yields "".
std::vector<std::string> toy_ocr(const Raster& r, const Layout& layout);

// --- PNG I/O ----------------------------------------------------------------

void write_png(const std::string& path, const Raster& r);
Raster read_png(const std::string& path);

// Deterministic per-product sprite (colored primitive shapes, values kept
// away from pure black so placement stays visible on black).
Raster make_product_sprite(int64_t product_id, int size, uint64_t seed);

}  // namespace posterlab
