#include "steel/curation/mappers.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "steel/curation/unicode.h"
#include "steel/numerics/errors.h"

namespace steel::curation {
namespace {

bool IsAsciiAlpha(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }
bool IsAsciiDigit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool IsAsciiAlnum(char32_t c) { return IsAsciiAlpha(c) || IsAsciiDigit(c); }
bool IsHex(char32_t c) {
  return IsAsciiDigit(c) || (c >= U'a' && c <= U'f') || (c >= U'A' && c <= U'F');
}
char32_t AsciiLower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

bool StartsWithNoCase(std::u32string_view s, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (AsciiLower(s[pos + k]) != prefix[k]) return false;
  }
  return true;
}

bool StartsWithNoCase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
  }
  return true;
}

bool ContainsNoCase(std::string_view haystack, std::string_view needle) {
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (StartsWithNoCase(haystack, i, needle)) return true;
  }
  return false;
}

template <typename Pass>
std::string Fixpoint(std::string text, Pass pass) {
  while (true) {
    std::string next = pass(text);
    if (next == text) return next;
    text = std::move(next);
  }
}

// ---- email -------------------------------------------------------------

bool IsEmailChar(char32_t c) {
  return IsAsciiAlnum(c) || c == U'.' || c == U'-' || c == U'+' || c == U'_';
}

std::string CleanEmailOnce(std::string_view text, std::string_view replacement) {
  const std::u32string s = DecodeUtf8(text);
  const std::u32string repl = DecodeUtf8(replacement);
  std::u32string out;
  std::size_t copied = 0;  // s[0, copied) already emitted
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != U'@') {
      ++i;
      continue;
    }
    std::size_t left = i;
    while (left > copied && IsEmailChar(s[left - 1])) --left;
    std::size_t right = i + 1;
    while (right < s.size() && IsEmailChar(s[right])) ++right;
    // Greedy domain: last '.' (with a non-empty part before it) followed by letters.
    std::size_t end = 0;
    for (std::size_t dot = right; dot-- > i + 2;) {
      if (s[dot] == U'.' && dot + 1 < right && IsAsciiAlpha(s[dot + 1])) {
        end = dot + 1;
        while (end < right && IsAsciiAlpha(s[end])) ++end;
        break;
      }
    }
    if (left == i || end == 0) {
      ++i;
      continue;
    }
    out.append(s, copied, left - copied);
    out += repl;
    copied = end;
    i = end;
  }
  out.append(s, copied, std::u32string::npos);
  return EncodeUtf8(out);
}

// ---- links -------------------------------------------------------------

constexpr std::u32string_view kLinkPrefixes[] = {U"https://", U"http://", U"ftps://",
                                                 U"ftp://", U"file://", U"www."};

std::string CleanLinksOnce(std::string_view text, std::string_view replacement) {
  const std::u32string s = DecodeUtf8(text);
  const std::u32string repl = DecodeUtf8(replacement);
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool boundary = i == 0 || !IsAlnum(s[i - 1]);
    bool match = false;
    if (boundary) {
      for (auto prefix : kLinkPrefixes) {
        if (StartsWithNoCase(s, i, prefix) && i + prefix.size() < s.size() &&
            !IsWhitespace(s[i + prefix.size()])) {
          match = true;
          break;
        }
      }
    }
    if (!match) {
      out.push_back(s[i++]);
      continue;
    }
    while (i < s.size() && !IsWhitespace(s[i])) ++i;
    out += repl;
  }
  return EncodeUtf8(out);
}

// ---- ip ----------------------------------------------------------------

// Returns the end of a dotted-quad IPv4 address starting at `i`, or 0.
std::size_t MatchIpv4(const std::u32string& s, std::size_t i) {
  std::size_t p = i;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p >= s.size() || s[p] != U'.') return 0;
      ++p;
    }
    std::size_t start = p;
    int value = 0;
    while (p < s.size() && IsAsciiDigit(s[p]) && p - start < 3) value = value * 10 + (s[p++] - U'0');
    if (p == start || value > 255) return 0;
  }
  if (p < s.size() && IsAlnum(s[p])) return 0;
  if (p + 1 < s.size() && s[p] == U'.' && IsAsciiDigit(s[p + 1])) return 0;
  return p;
}

bool ValidIpv6(std::u32string_view run) {
  std::size_t colons = std::count(run.begin(), run.end(), U':');
  if (colons < 2 || colons > 7) return false;
  const auto dbl = run.find(U"::");
  const bool compressed = dbl != std::u32string_view::npos;
  if (compressed && run.find(U"::", dbl + 1) != std::u32string_view::npos) return false;
  if (run.find(U":::") != std::u32string_view::npos) return false;
  std::size_t groups = 0;
  std::size_t k = 0;
  while (k <= run.size()) {
    std::size_t next = run.find(U':', k);
    if (next == std::u32string_view::npos) next = run.size();
    const std::size_t len = next - k;
    if (len > 4) return false;
    if (len > 0) {
      ++groups;
    } else {
      // Empty groups only as part of "::".
      const bool at_dbl = compressed && (k == dbl || k == dbl + 1 || k == dbl + 2);
      if (!at_dbl) return false;
    }
    k = next + 1;
  }
  if (groups == 0) return false;
  return compressed ? groups < 8 : groups == 8;
}

std::size_t MatchIpv6(const std::u32string& s, std::size_t i) {
  std::size_t p = i;
  while (p < s.size() && (IsHex(s[p]) || s[p] == U':')) ++p;
  if (p < s.size() && (IsAlnum(s[p]) || s[p] == U'.')) return 0;
  return ValidIpv6(std::u32string_view(s).substr(i, p - i)) ? p : 0;
}

std::string CleanIpOnce(std::string_view text, std::string_view replacement) {
  const std::u32string s = DecodeUtf8(text);
  const std::u32string repl = DecodeUtf8(replacement);
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t prev = i == 0 ? U' ' : s[i - 1];
    std::size_t end = 0;
    if (!IsAlnum(prev) && prev != U'.' && prev != U':') {
      if (IsAsciiDigit(s[i])) end = MatchIpv4(s, i);
      if (end == 0 && (IsHex(s[i]) || s[i] == U':')) end = MatchIpv6(s, i);
    }
    if (end == 0) {
      out.push_back(s[i++]);
      continue;
    }
    out += repl;
    i = end;
  }
  return EncodeUtf8(out);
}

// ---- html --------------------------------------------------------------

std::string DecodeEntities(std::string_view s) {
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""},
      {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "}};
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool hit = false;
    if (s[i] == '&') {
      for (const auto& [from, to] : kEntities) {
        if (s.substr(i, from.size()) == from) {
          out += to;
          i += from.size();
          hit = true;
          break;
        }
      }
    }
    if (!hit) out.push_back(s[i++]);
  }
  return out;
}

std::string CleanHtmlOnce(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '<') {
      out.push_back(s[i++]);
      continue;
    }
    if (s.substr(i, 4) == "<!--") {
      const auto end = s.find("-->", i + 4);
      i = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    bool raw = false;
    for (std::string_view tag : {"script", "style"}) {
      const std::size_t after = i + 1 + tag.size();
      if (StartsWithNoCase(s, i + 1, tag) &&
          (after >= s.size() || s[after] == '>' || s[after] == '/' ||
           std::isspace(static_cast<unsigned char>(s[after])))) {
        std::string close = "</" + std::string(tag);
        std::size_t j = after;
        while (j < s.size() && !StartsWithNoCase(s, j, close)) ++j;
        if (j >= s.size()) {
          i = s.size();
        } else {
          const auto gt = s.find('>', j);
          i = gt == std::string_view::npos ? s.size() : gt + 1;
        }
        raw = true;
        break;
      }
    }
    if (raw) continue;
    const char next = i + 1 < s.size() ? s[i + 1] : '\0';
    if (std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!' || next == '?') {
      const auto gt = s.find('>', i + 1);
      if (gt != std::string_view::npos) {
        i = gt + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return DecodeEntities(out);
}

// ---- copyright ---------------------------------------------------------

bool IsLineComment(std::string_view line) {
  std::size_t k = 0;
  while (k < line.size() && (line[k] == ' ' || line[k] == '\t')) ++k;
  line.remove_prefix(k);
  if (line.starts_with("//") || line.starts_with("--")) return true;
  if (!line.starts_with("#")) return false;
  // "#include", "#define", "#!" ... are code, not comments.
  return line.size() == 1 || line[1] == ' ' || line[1] == '#' || line[1] == '\t' ||
         line[1] == '\r';
}

std::string CleanCopyrightOnce(std::string_view s) {
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  std::size_t end = start;
  if (s.substr(start, 2) == "/*") {
    const auto close = s.find("*/", start + 2);
    end = close == std::string_view::npos ? s.size() : close + 2;
  } else {
    while (end < s.size()) {
      auto nl = s.find('\n', end);
      const std::size_t line_end = nl == std::string_view::npos ? s.size() : nl;
      if (!IsLineComment(s.substr(end, line_end - end))) break;
      end = line_end;
      if (end < s.size()) ++end;  // keep consuming through the newline
    }
  }
  if (end == start || !ContainsNoCase(s.substr(start, end - start), "copyright")) {
    return std::string(s);
  }
  if (end < s.size() && s[end] == '\r') ++end;
  if (end < s.size() && s[end] == '\n') ++end;
  return std::string(s.substr(0, start)) + std::string(s.substr(end));
}

// ---- macros ------------------------------------------------------------

struct Macro {
  int nargs = 0;
  std::string body;
};

bool IsLetter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

void SkipSpaces(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

// Reads "{...}" at i with nested braces (escaped braces ignored).
bool ReadGroup(std::string_view s, std::size_t& i, std::string* content) {
  if (i >= s.size() || s[i] != '{') return false;
  int depth = 0;
  for (std::size_t j = i; j < s.size(); ++j) {
    if (s[j] == '\\') {
      ++j;
      continue;
    }
    if (s[j] == '{') ++depth;
    if (s[j] == '}' && --depth == 0) {
      if (content) *content = std::string(s.substr(i + 1, j - i - 1));
      i = j + 1;
      return true;
    }
  }
  return false;
}

bool ReadControlWord(std::string_view s, std::size_t& i, std::string* name) {
  if (i >= s.size() || s[i] != '\\' || i + 1 >= s.size() || !IsLetter(s[i + 1])) return false;
  std::size_t j = i + 1;
  while (j < s.size() && IsLetter(s[j])) ++j;
  *name = std::string(s.substr(i + 1, j - i - 1));
  i = j;
  return true;
}

// Parses a definition starting at the backslash at `i`. On success sets
// `end` past the definition.
bool ParseDefinition(std::string_view s, std::size_t i, std::size_t& end, std::string& name,
                     Macro& macro) {
  std::size_t p = i;
  std::string cmd;
  if (!ReadControlWord(s, p, &cmd)) return false;
  if (cmd == "newcommand" || cmd == "renewcommand" || cmd == "providecommand") {
    SkipSpaces(s, p);
    if (p < s.size() && s[p] == '*') ++p;
    SkipSpaces(s, p);
    if (p < s.size() && s[p] == '{') {
      ++p;
      SkipSpaces(s, p);
      if (!ReadControlWord(s, p, &name)) return false;
      SkipSpaces(s, p);
      if (p >= s.size() || s[p] != '}') return false;
      ++p;
    } else if (!ReadControlWord(s, p, &name)) {
      return false;
    }
    SkipSpaces(s, p);
    macro.nargs = 0;
    if (p < s.size() && s[p] == '[') {
      const auto close = s.find(']', p);
      if (close == std::string_view::npos) return false;
      const std::string n(s.substr(p + 1, close - p - 1));
      if (n.size() != 1 || n[0] < '0' || n[0] > '9') return false;
      macro.nargs = n[0] - '0';
      p = close + 1;
      SkipSpaces(s, p);
      if (p < s.size() && s[p] == '[') {  // optional-argument default, ignored
        const auto dclose = s.find(']', p);
        if (dclose == std::string_view::npos) return false;
        p = dclose + 1;
        SkipSpaces(s, p);
      }
    }
    if (!ReadGroup(s, p, &macro.body)) return false;
    end = p;
    return true;
  }
  if (cmd == "def") {
    SkipSpaces(s, p);
    if (!ReadControlWord(s, p, &name)) return false;
    macro.nargs = 0;
    while (p + 1 < s.size() && s[p] == '#' && s[p + 1] >= '1' && s[p + 1] <= '9') {
      if (s[p + 1] - '0' != macro.nargs + 1) return false;
      ++macro.nargs;
      p += 2;
    }
    SkipSpaces(s, p);
    if (!ReadGroup(s, p, &macro.body)) return false;
    end = p;
    return true;
  }
  return false;
}

constexpr int kMaxMacroDepth = 8;

class MacroExpander {
 public:
  explicit MacroExpander(std::unordered_map<std::string, Macro> macros) : macros_(std::move(macros)) {
    FindCycles();
  }

  std::string Expand(std::string_view s, int depth) const {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      if (s[i] != '\\') {
        out.push_back(s[i++]);
        continue;
      }
      std::size_t p = i;
      std::string name;
      if (!ReadControlWord(s, p, &name)) {
        out.push_back(s[i++]);
        if (i < s.size()) out.push_back(s[i++]);
        continue;
      }
      auto it = macros_.find(name);
      if (it == macros_.end() || cyclic_.count(name)) {
        out.append(s.substr(i, p - i));
        i = p;
        continue;
      }
      std::vector<std::string> args;
      std::size_t q = p;
      bool ok = true;
      for (int k = 0; k < it->second.nargs; ++k) {
        SkipSpaces(s, q);
        std::string arg;
        if (!ReadGroup(s, q, &arg)) {
          ok = false;
          break;
        }
        args.push_back(std::move(arg));
      }
      if (!ok) {
        out.append(s.substr(i, p - i));
        i = p;
        continue;
      }
      std::string body = Substitute(it->second.body, args);
      out += depth + 1 < kMaxMacroDepth ? Expand(body, depth + 1) : body;
      i = q;
    }
    return out;
  }

 private:
  static std::string Substitute(std::string_view body, const std::vector<std::string>& args) {
    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '#' && i + 1 < body.size() && body[i + 1] >= '1' && body[i + 1] <= '9') {
        const std::size_t k = body[i + 1] - '1';
        if (k < args.size()) {
          out += args[k];
          ++i;
          continue;
        }
      }
      out.push_back(body[i]);
    }
    return out;
  }

  void FindCycles() {
    std::unordered_map<std::string, std::vector<std::string>> uses;
    for (const auto& [name, m] : macros_) {
      std::size_t i = 0;
      while (i < m.body.size()) {
        std::string used;
        if (ReadControlWord(m.body, i, &used)) {
          if (macros_.count(used)) uses[name].push_back(used);
        } else {
          ++i;
        }
      }
    }
    for (const auto& [name, m] : macros_) {
      std::unordered_set<std::string> seen;
      std::vector<std::string> stack = uses[name];
      while (!stack.empty()) {
        std::string cur = std::move(stack.back());
        stack.pop_back();
        if (cur == name) {
          cyclic_.insert(name);
          break;
        }
        if (!seen.insert(cur).second) continue;
        for (const auto& next : uses[cur]) stack.push_back(next);
      }
    }
  }

  std::unordered_map<std::string, Macro> macros_;
  std::unordered_set<std::string> cyclic_;
};

// ---- punctuation -------------------------------------------------------

const std::unordered_map<char32_t, std::u32string_view>& PunctuationMap() {
  static const std::unordered_map<char32_t, std::u32string_view> kMap = {
      {U'，', U","},  {U'。', U"."},  {U'、', U","},   {U'„', U"\""},  {U'”', U"\""},
      {U'“', U"\""},  {U'«', U"\""},  {U'»', U"\""},   {U'」', U"\""}, {U'「', U"\""},
      {U'《', U"\""}, {U'》', U"\""}, {U'´', U"'"},    {U'∶', U":"},   {U'：', U":"},
      {U'？', U"?"},  {U'！', U"!"},  {U'（', U"("},   {U'）', U")"},  {U'；', U";"},
      {U'\u2013', U"-"},   {U'\u2014', U" - "}, {U'．', U". "},  {U'～', U"~"},  {U'’', U"'"},
      {U'‘', U"'"},   {U'…', U"..."}, {U'━', U"-"},    {U'〈', U"<"},  {U'〉', U">"},
      {U'【', U"["},  {U'】', U"]"},  {U'％', U"%"},   {U'►', U"-"},
  };
  return kMap;
}

// ---- chinese conversion sample ----------------------------------------

constexpr std::string_view kBuiltinT2S =
    "國\t国\n學\t学\n語\t语\n東\t东\n車\t车\n馬\t马\n門\t门\n開\t开\n長\t长\n說\t说\n"
    "話\t话\n書\t书\n見\t见\n電\t电\n時\t时\n間\t间\n問\t问\n題\t题\n體\t体\n們\t们\n"
    "來\t来\n個\t个\n這\t这\n會\t会\n對\t对\n發\t发\n經\t经\n現\t现\n實\t实\n與\t与\n"
    "應\t应\n歡\t欢\n愛\t爱\n為\t为\n無\t无\n從\t从\n還\t还\n後\t后\n進\t进\n過\t过\n"
    "動\t动\n業\t业\n氣\t气\n關\t关\n點\t点\n華\t华\n灣\t湾\n臺\t台\n漢\t汉\n統\t统\n"
    "計\t计\n訓\t训\n練\t练\n數\t数\n據\t据\n處\t处\n歷\t历\n氣\t气\n讀\t读\n寫\t写\n";

}  // namespace

std::string CleanEmail(std::string_view text, std::string_view replacement) {
  return Fixpoint(std::string(text), [&](const std::string& t) { return CleanEmailOnce(t, replacement); });
}

std::string CleanLinks(std::string_view text, std::string_view replacement) {
  return Fixpoint(std::string(text), [&](const std::string& t) { return CleanLinksOnce(t, replacement); });
}

std::string CleanIp(std::string_view text, std::string_view replacement) {
  return Fixpoint(std::string(text), [&](const std::string& t) { return CleanIpOnce(t, replacement); });
}

std::string CleanHtml(std::string_view text) {
  return Fixpoint(std::string(text), [](const std::string& t) { return CleanHtmlOnce(t); });
}

std::string CleanCopyright(std::string_view text) {
  return Fixpoint(std::string(text), [](const std::string& t) { return CleanCopyrightOnce(t); });
}

std::string ExpandMacro(std::string_view text) {
  std::unordered_map<std::string, Macro> macros;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t end = 0;
    std::string name;
    Macro m;
    if (text[i] == '\\' && ParseDefinition(text, i, end, name, m)) {
      macros[name] = std::move(m);
      spans.emplace_back(i, end);
      i = end;
    } else {
      i += text[i] == '\\' ? 2 : 1;
    }
  }
  if (macros.empty()) return std::string(text);
  const MacroExpander expander(std::move(macros));
  std::string out;
  std::size_t pos = 0;
  for (const auto& [begin, end] : spans) {
    out += expander.Expand(text.substr(pos, begin - pos), 0);
    out.append(text.substr(begin, end - begin));
    pos = end;
  }
  out += expander.Expand(text.substr(pos), 0);
  return out;
}

std::string FixUnicode(std::string_view text) { return NormalizeNfc(EncodeUtf8(DecodeUtf8(text))); }

std::string NormalizePunctuation(std::string_view text) {
  const auto& map = PunctuationMap();
  std::u32string out;
  for (char32_t c : DecodeUtf8(text)) {
    auto it = map.find(c);
    if (it == map.end()) {
      out.push_back(c);
    } else {
      out += it->second;
    }
  }
  return EncodeUtf8(out);
}

std::string NormalizeWhitespace(std::string_view text) {
  std::u32string s = DecodeUtf8(text);
  for (char32_t& c : s) {
    if (c == U'\n' || c == U'\t' || c == U'\r' || c == U'\v' || c == U'\f') continue;
    if (IsWhitespace(c) || c == U'​' || c == U'﻿') c = U' ';
  }
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsWhitespace(s[b])) ++b;
  while (e > b && IsWhitespace(s[e - 1])) --e;
  return EncodeUtf8(std::u32string_view(s).substr(b, e - b));
}

std::string RemoveSpecificChars(std::string_view text, std::u32string_view chars) {
  const std::set<char32_t> drop(chars.begin(), chars.end());
  std::u32string out;
  for (char32_t c : DecodeUtf8(text)) {
    if (!drop.count(c)) out.push_back(c);
  }
  return EncodeUtf8(out);
}

std::string RemoveRepeatSentences(std::string_view text, std::size_t min_length, bool lowercase,
                                  bool ignore_special) {
  static const std::u32string_view kTerminators = U"。！？.!?";
  const auto is_term = [](char32_t c) { return kTerminators.find(c) != std::u32string_view::npos; };
  const std::u32string s = DecodeUtf8(text);
  std::unordered_set<std::u32string> seen;
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && !is_term(s[j])) ++j;
    while (j < s.size() && is_term(s[j])) ++j;
    const std::u32string_view sentence = std::u32string_view(s).substr(i, j - i);
    i = j;

    std::size_t b = 0;
    std::size_t e = sentence.size();
    while (b < e && IsWhitespace(sentence[b])) ++b;
    while (e > b && IsWhitespace(sentence[e - 1])) --e;
    std::u32string key;
    for (std::size_t k = b; k < e; ++k) {
      char32_t c = sentence[k];
      if (ignore_special && !IsAlnum(c)) continue;
      key.push_back(lowercase ? ToLower(c) : c);
    }
    if (e - b < min_length || key.empty() || seen.insert(key).second) out += sentence;
  }
  return EncodeUtf8(out);
}

const ConversionTable& ConversionTable::BuiltinT2S() {
  static const ConversionTable table = Parse(kBuiltinT2S);
  return table;
}

ConversionTable ConversionTable::Parse(std::string_view contents) {
  ConversionTable table;
  std::istringstream in{std::string(contents)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::u32string from = DecodeUtf8(line.substr(0, tab == std::string::npos ? 0 : tab));
    const std::u32string to =
        tab == std::string::npos ? std::u32string() : DecodeUtf8(line.substr(tab + 1));
    if (from.size() != 1 || to.size() != 1) {
      throw ConfigError("conversion table line " + std::to_string(lineno) +
                        ": expected '<char>\\t<char>'");
    }
    if (from[0] != to[0]) table.map_[from[0]] = to[0];
  }
  table.Close();
  return table;
}

ConversionTable ConversionTable::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open conversion table: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

void ConversionTable::Close() {
  for (auto& [from, to] : map_) {
    std::size_t steps = 0;
    for (auto it = map_.find(to); it != map_.end(); it = map_.find(to)) {
      to = it->second;
      if (++steps > map_.size() || to == from) {
        throw ConfigError("conversion table contains a cycle");
      }
    }
  }
}

std::string ConversionTable::Convert(std::string_view text) const {
  std::u32string s = DecodeUtf8(text);
  for (char32_t& c : s) {
    if (auto it = map_.find(c); it != map_.end()) c = it->second;
  }
  return EncodeUtf8(s);
}

}  // namespace steel::curation
