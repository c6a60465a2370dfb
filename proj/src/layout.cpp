#include "acqlayout/layout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "acqlayout/error.hpp"
#include "acqlayout/fingerprint.hpp"
#include "acqlayout/spatial_index.hpp"

namespace acqlayout {

namespace {

// ---------------------------------------------------------------- lexing

enum class Tok { Word, LBrace, RBrace, LBracket, RBracket, Comma, Equals, GreaterEq, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
};

bool is_word_char(char c) {
  switch (c) {
    case '{': case '}': case '[': case ']': case ',': case '=': case '#': case '>':
    case ' ': case '\t': case '\r': case '\n':
      return false;
    default:
      return true;
  }
}

[[noreturn]] void syntax_error(int line, const std::string& what) {
  throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + what);
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '>') {
      if (i + 1 >= text.size() || text[i + 1] != '=') syntax_error(line, "expected '>='");
      out.push_back({Tok::GreaterEq, ">=", line});
      i += 2;
    } else if (!is_word_char(c)) {
      static constexpr std::string_view kPunct = "{}[],=";
      static constexpr Tok kKinds[] = {Tok::LBrace, Tok::RBrace, Tok::LBracket, Tok::RBracket, Tok::Comma, Tok::Equals};
      out.push_back({kKinds[kPunct.find(c)], std::string(1, c), line});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && is_word_char(text[i])) ++i;
      out.push_back({Tok::Word, std::string(text.substr(start, i - start)), line});
    }
  }
  out.push_back({Tok::End, "end of document", line});
  return out;
}

// ---------------------------------------------------------------- numbers

std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_duration(std::string_view s, bool allow_sign) {
  if (s.size() < 2) return std::nullopt;
  const char unit = s.back();
  std::int64_t scale;
  if (unit == 'h') {
    scale = kSecondsPerHour;
  } else if (unit == 'd') {
    scale = kSecondsPerDay;
  } else {
    return std::nullopt;
  }
  const auto number = s.substr(0, s.size() - 1);
  if (!allow_sign && (number.front() == '+' || number.front() == '-')) return std::nullopt;
  const auto v = parse_real(number);
  if (!v || std::abs(*v) * double(scale) > 1e15) return std::nullopt;
  return static_cast<std::int64_t>(std::llround(*v * double(scale)));
}

// Shortest decimal text `s` for which `accept(s)` holds.
template <typename Accept>
std::string shortest_text(double v, Accept accept) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (accept(s)) return s;
  for (int precision = 1; precision <= 17; ++precision) {
    auto [p2, e2] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
    s.assign(buf, p2);
    if (accept(s)) return s;
  }
  return s;
}

std::string format_real(double v) {
  return shortest_text(v, [&](const std::string& s) { return parse_real(s) == v; });
}

std::string format_percent(double fraction) {
  return shortest_text(fraction * 100.0, [&](const std::string& s) {
    const auto p = parse_real(s);
    return p && *p / 100.0 == fraction;
  });
}

std::string format_hours(std::int64_t seconds) {
  if (seconds % kSecondsPerHour == 0) return std::to_string(seconds / kSecondsPerHour) + "h";
  const double hours = double(seconds) / double(kSecondsPerHour);
  return shortest_text(hours, [&](const std::string& s) { return parse_duration(s + "h", true) == seconds; }) + "h";
}

std::string format_offset(std::int64_t seconds) {
  if (seconds == 0) return "0d";
  const std::string sign = seconds > 0 ? "+" : "-";
  const std::int64_t mag = seconds > 0 ? seconds : -seconds;
  if (mag % kSecondsPerDay == 0) return sign + std::to_string(mag / kSecondsPerDay) + "d";
  return sign + format_hours(mag);
}

// ---------------------------------------------------------------- parsing

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  AcquisitionsLayout parse() {
    AcquisitionsLayout layout;
    expect_keyword("layout");
    layout.name = expect_word("layout name").text;
    expect(Tok::LBrace, "'{'");

    bool sized = false;
    while (peek().kind == Tok::Word && (peek().text == "item" || peek().text == "patch_size")) {
      if (peek().text == "item") {
        layout.items.push_back(parse_item());
        continue;
      }
      const int line = next().line;
      if (sized) syntax_error(line, "patch_size given twice");
      sized = true;
      expect(Tok::Equals, "'='");
      const Token& t = expect_word("patch size");
      const auto v = parse_real(t.text);
      if (!v || *v != std::floor(*v) || *v < 1 || *v > 65536) throw Error(ErrorCode::InvalidRange, "patch_size");
      layout.patch_size = static_cast<int>(*v);
    }
    if (layout.items.empty()) syntax_error(peek().line, "layout declares no item");
    expect(Tok::RBrace, "'}' or 'item'");
    if (peek().kind != Tok::End) syntax_error(peek().line, "unexpected '" + peek().text + "' after layout");
    return layout;
  }

 private:
  AcquisitionItem parse_item() {
    const int item_line = next().line;  // "item"
    AcquisitionItem item;
    item.name = expect_word("item name").text;
    expect(Tok::LBrace, "'{'");

    std::set<std::string> seen;
    bool has_when = false;
    for (;;) {
      const Token& field = expect_word("field name");
      if (!seen.insert(field.text).second) syntax_error(field.line, "field '" + field.text + "' repeated");

      if (field.text == "sar") {
        expect(Tok::Equals, "'='");
        const Token& mode = expect_word("'none' or 'within'");
        if (mode.text == "none") {
          item.needs_sar = false;
        } else if (mode.text == "within") {
          const Token& d = expect_word("duration");
          const auto gap = parse_duration(d.text, false);
          if (!gap) syntax_error(d.line, "bad duration '" + d.text + "'");
          item.needs_sar = true;
          item.max_sar_gap = *gap;
        } else {
          syntax_error(mode.line, "expected 'none' or 'within', got '" + mode.text + "'");
        }
      } else if (field.text == "clouds") {
        expect(Tok::Equals, "'='");
        double lo, hi;
        if (peek().kind == Tok::LBracket) {
          next();
          lo = expect_real("cloud percentage");
          expect(Tok::Comma, "','");
          hi = expect_real("cloud percentage");
          expect(Tok::RBracket, "']'");
        } else {
          lo = hi = expect_real("cloud percentage");
        }
        if (!(0.0 <= lo && lo <= hi && hi <= 100.0)) throw Error(ErrorCode::InvalidRange, "clouds");
        item.cloud_lo = lo / 100.0;
        item.cloud_hi = hi / 100.0;
      } else if (field.text == "when") {
        expect(Tok::Equals, "'='");
        has_when = true;
        if (peek().kind == Tok::Word && peek().text == "reference") {
          next();
          item.window.reset();
        } else {
          expect(Tok::LBracket, "'reference' or '['");
          TimeWindow w;
          w.lo = expect_offset();
          expect(Tok::Comma, "','");
          w.hi = expect_offset();
          expect(Tok::RBracket, "']'");
          if (w.lo > w.hi) throw Error(ErrorCode::InvalidRange, "when");
          item.window = w;
          if (peek().kind == Tok::Word && peek().text == "overlapping") {
            next();
            item.overlapping = true;
          }
        }
      } else if (field.text == "valid") {
        expect(Tok::GreaterEq, "'>='");
        item.min_valid_fraction = expect_real("valid fraction");
        if (!(0.0 <= item.min_valid_fraction && item.min_valid_fraction <= 1.0))
          throw Error(ErrorCode::InvalidRange, "valid");
      } else if (field.text == "role") {
        expect(Tok::Equals, "'='");
        const Token& r = expect_word("'input' or 'target'");
        if (r.text == "input") {
          item.role = ItemRole::Input;
        } else if (r.text == "target") {
          item.role = ItemRole::Target;
        } else {
          syntax_error(r.line, "expected 'input' or 'target', got '" + r.text + "'");
        }
      } else {
        syntax_error(field.line, "unknown field '" + field.text + "'");
      }

      if (peek().kind == Tok::Comma) {
        next();
        continue;
      }
      expect(Tok::RBrace, "',' or '}'");
      break;
    }
    if (!has_when) syntax_error(item_line, "item '" + item.name + "' has no 'when' field");
    return item;
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }
  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) syntax_error(peek().line, "expected " + what + ", got '" + peek().text + "'");
    return next();
  }
  const Token& expect_word(const std::string& what) { return expect(Tok::Word, what); }
  void expect_keyword(std::string_view kw) {
    const Token& t = peek();
    if (t.kind != Tok::Word || t.text != kw) syntax_error(t.line, "expected '" + std::string(kw) + "'");
    next();
  }
  double expect_real(const std::string& what) {
    const Token& t = expect_word(what);
    const auto v = parse_real(t.text);
    if (!v) syntax_error(t.line, "bad number '" + t.text + "'");
    return *v;
  }
  std::int64_t expect_offset() {
    const Token& t = expect_word("signed duration");
    const auto v = parse_duration(t.text, true);
    if (!v) syntax_error(t.line, "bad duration '" + t.text + "'");
    return *v;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

const AcquisitionItem& AcquisitionsLayout::reference() const {
  for (const auto& i : items)
    if (i.is_reference()) return i;
  throw Error(ErrorCode::NoReferenceItem, "layout '" + name + "'");
}

const AcquisitionItem& AcquisitionsLayout::target() const {
  for (const auto& i : items)
    if (i.role == ItemRole::Target) return i;
  throw Error(ErrorCode::InvalidRange, "role: layout '" + name + "' has no target item");
}

const AcquisitionItem* AcquisitionsLayout::find(std::string_view item_name) const {
  for (const auto& i : items)
    if (i.name == item_name) return &i;
  return nullptr;
}

void validate_layout(const AcquisitionsLayout& layout) {
  if (layout.name.empty()) throw Error(ErrorCode::SyntaxError, "layout has no name");
  if (layout.patch_size < 1) throw Error(ErrorCode::InvalidRange, "patch_size");
  std::set<std::string> names;
  int references = 0, targets = 0, inputs = 0;
  for (const auto& item : layout.items) {
    if (item.name.empty()) throw Error(ErrorCode::SyntaxError, "item without a name");
    if (!names.insert(item.name).second) throw Error(ErrorCode::DuplicateItemName, item.name);
    if (!(0.0 <= item.cloud_lo && item.cloud_lo <= item.cloud_hi && item.cloud_hi <= 1.0))
      throw Error(ErrorCode::InvalidRange, "clouds (item " + item.name + ")");
    if (!(0.0 <= item.min_valid_fraction && item.min_valid_fraction <= 1.0))
      throw Error(ErrorCode::InvalidRange, "valid (item " + item.name + ")");
    if (item.needs_sar && item.max_sar_gap < 0) throw Error(ErrorCode::InvalidRange, "sar (item " + item.name + ")");
    if (item.window) {
      if (item.window->lo > item.window->hi) throw Error(ErrorCode::InvalidRange, "when (item " + item.name + ")");
      if (item.window->contains(0) && !item.overlapping)
        throw Error(ErrorCode::InvalidRange,
                    "when (item " + item.name + " window contains the reference date; mark it 'overlapping')");
    } else {
      ++references;
    }
    if (item.role == ItemRole::Target) {
      ++targets;
      if (item.needs_sar) throw Error(ErrorCode::InvalidRange, "sar (target item " + item.name + " cannot pair SAR)");
    } else {
      ++inputs;
    }
  }
  if (references == 0) throw Error(ErrorCode::NoReferenceItem, "layout '" + layout.name + "'");
  if (references > 1) throw Error(ErrorCode::InvalidRange, "when (more than one reference item)");
  if (targets != 1) throw Error(ErrorCode::InvalidRange, "role (exactly one target item required)");
  if (inputs < 1) throw Error(ErrorCode::InvalidRange, "role (at least one input item required)");
}

AcquisitionsLayout parse_layout(std::string_view text) {
  AcquisitionsLayout layout = Parser(tokenize(text)).parse();
  validate_layout(layout);
  return layout;
}

AcquisitionsLayout load_layout(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::MissingFile, file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_layout(ss.str());
}

std::string print_layout(const AcquisitionsLayout& layout) {
  std::string out = "layout " + layout.name + " {\n";
  if (layout.patch_size != kDefaultPatchSize) out += "  patch_size = " + std::to_string(layout.patch_size) + "\n";
  for (const auto& item : layout.items) {
    out += "  item " + item.name + " { ";
    out += item.needs_sar ? "sar = within " + format_hours(item.max_sar_gap) : std::string("sar = none");
    out += ", clouds = ";
    if (item.cloud_lo == item.cloud_hi) {
      out += format_percent(item.cloud_lo);
    } else {
      out += "[" + format_percent(item.cloud_lo) + "," + format_percent(item.cloud_hi) + "]";
    }
    out += ", when = ";
    if (item.window) {
      out += "[" + format_offset(item.window->lo) + "," + format_offset(item.window->hi) + "]";
      if (item.overlapping) out += " overlapping";
    } else {
      out += "reference";
    }
    out += ", valid >= " + format_real(item.min_valid_fraction);
    out += item.role == ItemRole::Target ? ", role = target" : ", role = input";
    out += " }\n";
  }
  out += "}\n";
  return out;
}

std::string layout_fingerprint(const AcquisitionsLayout& layout) {
  return Fingerprint().text("acqlayout-layout").text(print_layout(layout)).hex();
}

namespace builtin {

std::string_view ssop_text() {
  return "layout ssop {\n"
         "  item t { sar = within 72h, clouds = [0,100], when = reference, valid >= 1, role = input }\n"
         "  item t' { sar = none, clouds = 0, when = [-10d,+10d] overlapping, valid >= 1, role = target }\n"
         "}\n";
}

std::string_view msop_text() {
  return "layout msop {\n"
         "  item t-1 { sar = within 72h, clouds = [0,100], when = [-18d,-10d], valid >= 1, role = input }\n"
         "  item t { sar = within 72h, clouds = [0,100], when = reference, valid >= 1, role = input }\n"
         "  item t' { sar = none, clouds = 0, when = [-10d,+10d] overlapping, valid >= 1, role = target }\n"
         "  item t+1 { sar = within 72h, clouds = [0,100], when = [+10d,+18d], valid >= 1, role = input }\n"
         "}\n";
}

std::string_view msop_cld_text() {
  return "layout msop_cld {\n"
         "  item t-1 { sar = within 72h, clouds = 0, when = [-18d,-10d], valid >= 1, role = input }\n"
         "  item t { sar = within 72h, clouds = 100, when = reference, valid >= 1, role = input }\n"
         "  item t' { sar = none, clouds = 0, when = [-5d,+5d] overlapping, valid >= 1, role = target }\n"
         "  item t+1 { sar = within 72h, clouds = 0, when = [+10d,+18d], valid >= 1, role = input }\n"
         "}\n";
}

AcquisitionsLayout ssop() { return parse_layout(ssop_text()); }
AcquisitionsLayout msop() { return parse_layout(msop_text()); }
AcquisitionsLayout msop_cld() { return parse_layout(msop_cld_text()); }
std::vector<AcquisitionsLayout> all() { return {ssop(), msop(), msop_cld()}; }

}  // namespace builtin

bool FeasibilityReport::feasible() const {
  return std::all_of(items.begin(), items.end(), [](const ItemFeasibility& i) { return i.feasible; });
}

FeasibilityReport validate_layout_against_archive(const AcquisitionsLayout& layout, const PatchIndex& index) {
  FeasibilityReport report;
  const auto locations = index.locations();
  for (const auto& item : layout.items) {
    BoxQuery box;
    box.cloud = {item.cloud_lo, item.cloud_hi};
    box.valid = {item.min_valid_fraction, 1.0};
    box.sar_gap = {0.0, item.needs_sar ? double(item.max_sar_gap) : kInfinity};
    std::size_t n = 0;
    for (const auto& loc : locations) n += index.box_query(loc, box).size();
    report.items.push_back({item.name, n, n > 0});
  }
  for (std::size_t a = 0; a < layout.items.size(); ++a) {
    for (std::size_t b = a + 1; b < layout.items.size(); ++b) {
      const TimeWindow wa = layout.items[a].window.value_or(TimeWindow{});
      const TimeWindow wb = layout.items[b].window.value_or(TimeWindow{});
      if (wa.lo <= wb.hi && wb.lo <= wa.hi) report.window_overlaps.emplace_back(layout.items[a].name, layout.items[b].name);
    }
  }
  return report;
}

}  // namespace acqlayout
