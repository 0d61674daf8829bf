#include "posterlab/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace posterlab {

bool is_toy_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' '; }

int toy_char_index(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= '0' && c <= '9') return 26 + (c - '0');
    if (c == ' ') return 36;
    fail(ErrorKind::InvalidInput, std::string("character outside toy alphabet: '") + c + "'");
}

char toy_char_at(int index) {
    require(index >= 0 && index < kAlphabetSize, ErrorKind::InvalidInput, "alphabet index out of range");
    if (index < 26) return static_cast<char>('A' + index);
    if (index < 36) return static_cast<char>('0' + (index - 26));
    return ' ';
}

void CandidateTextSet::validate() const {
    require(!texts.empty(), ErrorKind::InvalidInput, "candidate set is empty");
    require(texts.size() <= kMaxCandidates, ErrorKind::InvalidInput, "too many candidates (max 8)");
    std::set<std::string> seen;
    for (const auto& t : texts) {
        require(t.size() >= 1 && t.size() <= kMaxTextLen, ErrorKind::InvalidInput,
                "candidate text length must be 1..12: \"" + t + "\"");
        for (char c : t)
            require(is_toy_char(c), ErrorKind::InvalidInput, "candidate text has non-alphabet char: \"" + t + "\"");
        require(seen.insert(t).second, ErrorKind::InvalidInput, "duplicate candidate text: \"" + t + "\"");
    }
}

int coord_to_start_bin(double v) {
    require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidInput, "coordinate outside [0,1]");
    int bin = static_cast<int>(std::llround(v * kCoordBins));
    require(std::abs(v * kCoordBins - bin) < 1e-9 && bin >= 0 && bin < kCoordBins, ErrorKind::InvalidInput,
            "start coordinate not on the 64-bin grid");
    return bin;
}

int coord_to_end_bin(double v) {
    require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidInput, "coordinate outside [0,1]");
    int bin = static_cast<int>(std::llround(v * kCoordBins)) - 1;
    require(std::abs(v * kCoordBins - (bin + 1)) < 1e-9 && bin >= 0 && bin < kCoordBins, ErrorKind::InvalidInput,
            "end coordinate not on the 64-bin grid");
    return bin;
}

double start_bin_to_coord(int bin) { return static_cast<double>(bin) / kCoordBins; }
double end_bin_to_coord(int bin) { return static_cast<double>(bin + 1) / kCoordBins; }

Box make_box(BoxType type, int bx0, int by0, int bx1, int by1) {
    require(bx0 >= 0 && bx0 < kCoordBins && by0 >= 0 && by0 < kCoordBins && bx1 >= bx0 && bx1 < kCoordBins &&
                by1 >= by0 && by1 < kCoordBins,
            ErrorKind::InvalidInput, "box bins out of range");
    Box b;
    b.type = type;
    b.x0 = start_bin_to_coord(bx0);
    b.y0 = start_bin_to_coord(by0);
    b.x1 = end_bin_to_coord(bx1);
    b.y1 = end_bin_to_coord(by1);
    return b;
}

int Layout::product_index() const {
    for (size_t i = 0; i < boxes.size(); ++i)
        if (boxes[i].type == BoxType::Product) return static_cast<int>(i);
    return -1;
}

std::vector<Box> Layout::text_boxes() const {
    std::vector<Box> out;
    for (const auto& b : boxes)
        if (b.type == BoxType::Text) out.push_back(b);
    return out;
}

int Layout::num_text_boxes() const { return static_cast<int>(text_boxes().size()); }

void Layout::validate() const {
    int products = 0;
    for (const auto& b : boxes) {
        require(b.x0 >= 0 && b.x0 < b.x1 && b.x1 <= 1.0, ErrorKind::Validation, "box x range invalid");
        require(b.y0 >= 0 && b.y0 < b.y1 && b.y1 <= 1.0, ErrorKind::Validation, "box y range invalid");
        coord_to_start_bin(b.x0);
        coord_to_end_bin(b.x1);
        coord_to_start_bin(b.y0);
        coord_to_end_bin(b.y1);
        if (b.type == BoxType::Product) ++products;
    }
    require(products == 1, ErrorKind::Validation, "layout must have exactly one product box");
    int texts = num_text_boxes();
    require(texts >= 1 && texts <= kMaxSelected, ErrorKind::Validation, "layout must have 1..3 text boxes");
}

void Design::validate(std::optional<int> num_candidates) const {
    require(background.color_id >= 0 && background.color_id < kNumColors, ErrorKind::Validation,
            "background color_id out of range");
    require(background.texture_id >= 0 && background.texture_id < kNumTextures, ErrorKind::Validation,
            "background texture_id out of range");
    require(!selected.empty() && selected.size() <= kMaxSelected, ErrorKind::Validation,
            "selected must have 1..3 entries");
    std::set<int> seen;
    for (int idx : selected) {
        require(idx >= 0 && idx < kMaxCandidates, ErrorKind::Validation, "selected index out of range");
        if (num_candidates)
            require(idx < *num_candidates, ErrorKind::Validation,
                    "selected index " + std::to_string(idx) + " exceeds candidate count");
        require(seen.insert(idx).second, ErrorKind::Validation, "selected indices must be distinct");
    }
    layout.validate();
    require(static_cast<int>(selected.size()) == layout.num_text_boxes(), ErrorKind::Validation,
            "selected count must match text box count");
}

namespace vocab {

std::string token_name(TokenId id) {
    if (id == kBos) return "<BOS>";
    if (id == kEos) return "<EOS>";
    if (id == kInstr) return "<INSTR>";
    if (id >= kCandOpenBase && id < kCandOpenBase + kMaxCandidates)
        return "<C" + std::to_string(id - kCandOpenBase) + ">";
    if (id == kCandClose) return "</C>";
    if (id == kBgMark) return "<BG>";
    if (id == kTxtMark) return "<TXT>";
    if (id == kLayMark) return "<LAY>";
    if (id >= kColorBase && id < kColorBase + kNumColors) return "c" + std::to_string(id - kColorBase);
    if (id >= kTextureBase && id < kTextureBase + kNumTextures) return "t" + std::to_string(id - kTextureBase);
    if (id >= kSelBase && id < kSelBase + kMaxCandidates) return "i" + std::to_string(id - kSelBase);
    if (id == kBoxProduct) return "<PROD>";
    if (id == kBoxText) return "<TEXT>";
    if (id >= kCoordBase && id < kCoordBase + kCoordBins) return "b" + std::to_string(id - kCoordBase);
    if (id >= kCharBase && id < kCharBase + kAlphabetSize) {
        char c = toy_char_at(id - kCharBase);
        return c == ' ' ? std::string("<SP>") : std::string(1, c);
    }
    return "<UNK:" + std::to_string(id) + ">";
}

}  // namespace vocab

const char* span_tag_name(SpanTag tag) {
    switch (tag) {
        case SpanTag::BG: return "BG";
        case SpanTag::TXT: return "TXT";
        case SpanTag::LAY: return "LAY";
        case SpanTag::DELIM: return "DELIM";
    }
    return "?";
}

InstructionText format_instruction(const CandidateTextSet& texts) {
    texts.validate();
    InstructionText out;
    out.tokens.push_back(vocab::kInstr);
    for (size_t i = 0; i < texts.texts.size(); ++i) {
        out.tokens.push_back(vocab::kCandOpenBase + static_cast<TokenId>(i));
        for (char c : texts.texts[i]) out.tokens.push_back(vocab::kCharBase + toy_char_index(c));
        out.tokens.push_back(vocab::kCandClose);
    }
    return out;
}

std::vector<std::string> instruction_candidates(const InstructionText& instr) {
    std::vector<std::string> out;
    size_t i = 0;
    require(!instr.tokens.empty() && instr.tokens[0] == vocab::kInstr, ErrorKind::Parse,
            "instruction must start with <INSTR>");
    i = 1;
    while (i < instr.tokens.size()) {
        TokenId open = instr.tokens[i];
        require(open >= vocab::kCandOpenBase && open < vocab::kCandOpenBase + kMaxCandidates, ErrorKind::Parse,
                "expected candidate open token at position " + std::to_string(i));
        require(open - vocab::kCandOpenBase == static_cast<TokenId>(out.size()), ErrorKind::Parse,
                "candidate markers out of order");
        ++i;
        std::string text;
        while (i < instr.tokens.size() && instr.tokens[i] != vocab::kCandClose) {
            TokenId t = instr.tokens[i];
            require(t >= vocab::kCharBase && t < vocab::kCharBase + kAlphabetSize, ErrorKind::Parse,
                    "expected character token at position " + std::to_string(i));
            text.push_back(toy_char_at(t - vocab::kCharBase));
            ++i;
        }
        require(i < instr.tokens.size(), ErrorKind::Parse, "unterminated candidate span");
        ++i;  // skip </C>
        out.push_back(text);
    }
    return out;
}

SerializedDesign serialize_design(const Design& d) {
    d.validate();
    SerializedDesign s;
    auto push = [&s](TokenId id, SpanTag tag) {
        s.tokens.push_back(id);
        s.span_map.push_back(tag);
    };
    push(vocab::kBgMark, SpanTag::DELIM);
    push(vocab::kColorBase + d.background.color_id, SpanTag::BG);
    push(vocab::kTextureBase + d.background.texture_id, SpanTag::BG);
    push(vocab::kTxtMark, SpanTag::DELIM);
    for (int idx : d.selected) push(vocab::kSelBase + idx, SpanTag::TXT);
    push(vocab::kLayMark, SpanTag::DELIM);
    for (const auto& b : d.layout.boxes) {
        push(b.type == BoxType::Product ? vocab::kBoxProduct : vocab::kBoxText, SpanTag::LAY);
        push(vocab::kCoordBase + coord_to_start_bin(b.x0), SpanTag::LAY);
        push(vocab::kCoordBase + coord_to_start_bin(b.y0), SpanTag::LAY);
        push(vocab::kCoordBase + coord_to_end_bin(b.x1), SpanTag::LAY);
        push(vocab::kCoordBase + coord_to_end_bin(b.y1), SpanTag::LAY);
    }
    push(vocab::kEos, SpanTag::DELIM);
    return s;
}

namespace {

class TokenCursor {
public:
    explicit TokenCursor(const std::vector<TokenId>& tokens) : tokens_(tokens) {}

    bool done() const { return pos_ >= tokens_.size(); }
    size_t pos() const { return pos_; }

    TokenId peek() const {
        require(!done(), ErrorKind::Parse, "unexpected end of sequence at position " + std::to_string(pos_));
        return tokens_[pos_];
    }

    TokenId next() {
        TokenId t = peek();
        ++pos_;
        return t;
    }

    void expect(TokenId id, const std::string& what) {
        TokenId t = peek();
        require(t == id, ErrorKind::Parse,
                "expected " + what + " at position " + std::to_string(pos_) + ", got " + vocab::token_name(t));
        ++pos_;
    }

private:
    const std::vector<TokenId>& tokens_;
    size_t pos_ = 0;
};

}  // namespace

Design parse_design_tokens(const std::vector<TokenId>& tokens, std::optional<int> num_candidates) {
    TokenCursor cur(tokens);
    Design d;
    cur.expect(vocab::kBgMark, "<BG>");
    TokenId color = cur.next();
    require(color >= vocab::kColorBase && color < vocab::kColorBase + kNumColors, ErrorKind::Parse,
            "expected color token at position " + std::to_string(cur.pos() - 1));
    d.background.color_id = color - vocab::kColorBase;
    TokenId tex = cur.next();
    require(tex >= vocab::kTextureBase && tex < vocab::kTextureBase + kNumTextures, ErrorKind::Parse,
            "expected texture token at position " + std::to_string(cur.pos() - 1));
    d.background.texture_id = tex - vocab::kTextureBase;
    cur.expect(vocab::kTxtMark, "<TXT>");
    while (cur.peek() != vocab::kLayMark) {
        TokenId sel = cur.next();
        require(sel >= vocab::kSelBase && sel < vocab::kSelBase + kMaxCandidates, ErrorKind::Parse,
                "expected selection token at position " + std::to_string(cur.pos() - 1));
        d.selected.push_back(sel - vocab::kSelBase);
    }
    cur.expect(vocab::kLayMark, "<LAY>");
    while (cur.peek() != vocab::kEos) {
        TokenId type = cur.next();
        require(type == vocab::kBoxProduct || type == vocab::kBoxText, ErrorKind::Parse,
                "expected box type token at position " + std::to_string(cur.pos() - 1));
        int bins[4];
        for (int& bin : bins) {
            TokenId t = cur.next();
            require(t >= vocab::kCoordBase && t < vocab::kCoordBase + kCoordBins, ErrorKind::Parse,
                    "expected coordinate token at position " + std::to_string(cur.pos() - 1));
            bin = t - vocab::kCoordBase;
        }
        require(bins[2] >= bins[0] && bins[3] >= bins[1], ErrorKind::Validation,
                "box end bin precedes start bin near position " + std::to_string(cur.pos() - 1));
        d.layout.boxes.push_back(
            make_box(type == vocab::kBoxProduct ? BoxType::Product : BoxType::Text, bins[0], bins[1], bins[2], bins[3]));
    }
    cur.expect(vocab::kEos, "<EOS>");
    require(cur.done(), ErrorKind::Parse, "trailing tokens after <EOS> at position " + std::to_string(cur.pos()));
    d.validate(num_candidates);
    return d;
}

Design parse_design(const SerializedDesign& s, std::optional<int> num_candidates) {
    require(s.tokens.size() == s.span_map.size(), ErrorKind::InvalidInput, "span map must cover every token");
    Design d = parse_design_tokens(s.tokens, num_candidates);
    SerializedDesign canonical = serialize_design(d);
    require(canonical.span_map == s.span_map, ErrorKind::Parse, "span map inconsistent with token grammar");
    return d;
}

}  // namespace posterlab
