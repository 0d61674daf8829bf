#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posterlab/common.hpp"

namespace posterlab {

// ---------------------------------------------------------------------------
// Domain types: candidate texts, backgrounds, layouts, designs, and their
// canonical token serialization.
// ---------------------------------------------------------------------------

constexpr int kNumColors = 8;
constexpr int kNumTextures = 4;
constexpr int kCoordBins = 64;
constexpr int kMaxCandidates = 8;
constexpr int kMaxSelected = 3;
constexpr int kMaxTextLen = 12;

// Toy alphabet: A-Z, 0-9, space (37 symbols).
constexpr int kAlphabetSize = 37;
bool is_toy_char(char c);
int toy_char_index(char c);    // 0..36
char toy_char_at(int index);

struct CandidateTextSet {
    std::vector<std::string> texts;
    void validate() const;  // non-empty, unique, alphabet, 1..12 chars, <= 8 candidates
};

enum class BoxType { Product, Text };

struct Box {
    BoxType type = BoxType::Text;
    // Edges are multiples of 1/64 with x0 < x1, y0 < y1, all in [0,1].
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool operator==(const Box&) const = default;
};

// Quantization helpers: a box edge pair (x0, x1) is stored as bins
// (b0, b1) with x0 = b0/64 and x1 = (b1+1)/64, so b0 <= b1 in 0..63.
int coord_to_start_bin(double v);
int coord_to_end_bin(double v);
double start_bin_to_coord(int bin);
double end_bin_to_coord(int bin);
Box make_box(BoxType type, int bx0, int by0, int bx1, int by1);

struct Layout {
    std::vector<Box> boxes;

    int product_index() const;  // -1 if absent
    std::vector<Box> text_boxes() const;
    int num_text_boxes() const;
    void validate() const;  // exactly one product box, 1..3 text boxes, coords on grid
    bool operator==(const Layout&) const = default;
};

struct Background {
    int color_id = 0;    // [0, 8)
    int texture_id = 0;  // [0, 4)
    bool operator==(const Background&) const = default;
};

struct Design {
    Background background;
    std::vector<int> selected;  // indices into the candidate set, 1..3 distinct
    Layout layout;

    void validate(std::optional<int> num_candidates = std::nullopt) const;
    bool operator==(const Design&) const = default;
};

// ---------------------------------------------------------------------------
// Token vocabulary
// ---------------------------------------------------------------------------

using TokenId = int;

// Fixed vocabulary layout (stable across runs; checkpoints depend on it).
namespace vocab {
constexpr TokenId kBos = 0;
constexpr TokenId kEos = 1;
constexpr TokenId kInstr = 2;
constexpr TokenId kCandOpenBase = 3;                       // 8 tokens, one per candidate slot
constexpr TokenId kCandClose = kCandOpenBase + kMaxCandidates;  // 11
constexpr TokenId kBgMark = 12;
constexpr TokenId kTxtMark = 13;
constexpr TokenId kLayMark = 14;
constexpr TokenId kColorBase = 15;                          // 8
constexpr TokenId kTextureBase = kColorBase + kNumColors;   // 23, 4 tokens
constexpr TokenId kSelBase = kTextureBase + kNumTextures;   // 27, 8 tokens
constexpr TokenId kBoxProduct = kSelBase + kMaxCandidates;  // 35
constexpr TokenId kBoxText = 36;
constexpr TokenId kCoordBase = 37;                          // 64 tokens
constexpr TokenId kCharBase = kCoordBase + kCoordBins;      // 101, 37 tokens
constexpr int kSize = kCharBase + kAlphabetSize;            // 138

std::string token_name(TokenId id);
}  // namespace vocab

enum class SpanTag { BG, TXT, LAY, DELIM };
const char* span_tag_name(SpanTag tag);

struct SerializedDesign {
    std::vector<TokenId> tokens;
    std::vector<SpanTag> span_map;  // one tag per token
    bool operator==(const SerializedDesign&) const = default;
};

struct InstructionText {
    std::vector<TokenId> tokens;
    bool operator==(const InstructionText&) const = default;
};

// Template expansion over the candidate set: <INSTR> (<Ck> chars... </C>)*.
InstructionText format_instruction(const CandidateTextSet& texts);
// Recovers the candidate strings from an instruction token sequence.
std::vector<std::string> instruction_candidates(const InstructionText& instr);

SerializedDesign serialize_design(const Design& d);
Design parse_design(const SerializedDesign& s, std::optional<int> num_candidates = std::nullopt);
// Parse from raw tokens (span map is reconstructed, then cross-checked).
Design parse_design_tokens(const std::vector<TokenId>& tokens, std::optional<int> num_candidates = std::nullopt);

// Which element does a token position belong to, for replaced-element
// weighting: span_map already encodes it.

}  // namespace posterlab
