// Minimal PDF text extraction: object scan (including object streams),
// page-tree walk, FlateDecode, and the standard text-showing operators.
// Simple-font PDFs (WinAnsi/PDFDoc, UTF-16BE strings) extract cleanly;
// CID/Type0 fonts without ToUnicode are beyond this subset and surface as
// page warnings rather than hard failures.

#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "refaudit/extract.hpp"
#include "refaudit/util.hpp"

namespace refaudit {

namespace {

struct PdfValue;
using PdfArray = std::vector<PdfValue>;
using PdfDict = std::map<std::string, PdfValue>;

struct PdfRef {
  int id = 0;
};

struct PdfStream {
  PdfDict dict;
  std::string data;  // raw, undecoded
};

struct PdfValue {
  std::variant<std::monostate, bool, double, std::string, PdfArray, PdfDict, PdfRef,
               std::shared_ptr<PdfStream>>
      v;

  bool is_dict() const { return std::holds_alternative<PdfDict>(v); }
  bool is_array() const { return std::holds_alternative<PdfArray>(v); }
  bool is_ref() const { return std::holds_alternative<PdfRef>(v); }
  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_stream() const { return std::holds_alternative<std::shared_ptr<PdfStream>>(v); }
  bool is_name_or_string() const { return std::holds_alternative<std::string>(v); }

  const PdfDict* dict() const { return std::get_if<PdfDict>(&v); }
  const PdfArray* array() const { return std::get_if<PdfArray>(&v); }
  double number() const { return std::get<double>(v); }
  const std::string* text() const { return std::get_if<std::string>(&v); }
  PdfStream* stream() const {
    auto p = std::get_if<std::shared_ptr<PdfStream>>(&v);
    return p ? p->get() : nullptr;
  }
};

bool is_pdf_ws(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\0';
}
bool is_pdf_delim(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}

class Lexer {
 public:
  Lexer(std::string_view buf, std::size_t pos) : buf_(buf), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool eof() const { return pos_ >= buf_.size(); }

  void skip_ws() {
    while (pos_ < buf_.size()) {
      char c = buf_[pos_];
      if (is_pdf_ws(c)) {
        ++pos_;
      } else if (c == '%') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n' && buf_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  char peek() const { return pos_ < buf_.size() ? buf_[pos_] : '\0'; }
  char peek2() const { return pos_ + 1 < buf_.size() ? buf_[pos_ + 1] : '\0'; }

  // Word token: operator or keyword.
  std::string word() {
    std::size_t start = pos_;
    while (pos_ < buf_.size() && !is_pdf_ws(buf_[pos_]) && !is_pdf_delim(buf_[pos_])) ++pos_;
    return std::string(buf_.substr(start, pos_ - start));
  }

  std::string name() {
    ++pos_;  // '/'
    std::string out;
    while (pos_ < buf_.size() && !is_pdf_ws(buf_[pos_]) && !is_pdf_delim(buf_[pos_])) {
      char c = buf_[pos_];
      if (c == '#' && pos_ + 2 < buf_.size()) {
        auto hex = [](char h) -> int {
          if (h >= '0' && h <= '9') return h - '0';
          if (h >= 'a' && h <= 'f') return h - 'a' + 10;
          if (h >= 'A' && h <= 'F') return h - 'A' + 10;
          return -1;
        };
        int hi = hex(buf_[pos_ + 1]), lo = hex(buf_[pos_ + 2]);
        if (hi >= 0 && lo >= 0) {
          out.push_back(static_cast<char>(hi * 16 + lo));
          pos_ += 3;
          continue;
        }
      }
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  std::string literal_string() {
    ++pos_;  // '('
    std::string out;
    int depth = 1;
    while (pos_ < buf_.size()) {
      char c = buf_[pos_++];
      if (c == '\\') {
        if (pos_ >= buf_.size()) break;
        char e = buf_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 't': out.push_back('\t'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case '(': out.push_back('('); break;
          case ')': out.push_back(')'); break;
          case '\\': out.push_back('\\'); break;
          case '\r':
            if (pos_ < buf_.size() && buf_[pos_] == '\n') ++pos_;
            break;  // line continuation
          case '\n': break;
          default:
            if (e >= '0' && e <= '7') {
              int v = e - '0';
              for (int i = 0; i < 2 && pos_ < buf_.size() && buf_[pos_] >= '0' && buf_[pos_] <= '7';
                   ++i)
                v = v * 8 + (buf_[pos_++] - '0');
              out.push_back(static_cast<char>(v & 0xFF));
            } else {
              out.push_back(e);
            }
        }
      } else if (c == '(') {
        ++depth;
        out.push_back(c);
      } else if (c == ')') {
        if (--depth == 0) break;
        out.push_back(c);
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::string hex_string() {
    ++pos_;  // '<'
    std::string out;
    int hi = -1;
    while (pos_ < buf_.size() && buf_[pos_] != '>') {
      char c = buf_[pos_++];
      int d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else continue;
      if (hi < 0) {
        hi = d;
      } else {
        out.push_back(static_cast<char>(hi * 16 + d));
        hi = -1;
      }
    }
    if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
    if (pos_ < buf_.size()) ++pos_;  // '>'
    return out;
  }

 private:
  std::string_view buf_;
  std::size_t pos_ = 0;
};

class ObjectParser {
 public:
  explicit ObjectParser(std::string_view buf) : lex_(buf, 0), buf_(buf) {}

  Lexer& lexer() { return lex_; }

  PdfValue parse_value() {
    lex_.skip_ws();
    char c = lex_.peek();
    if (c == '<' && lex_.peek2() == '<') return parse_dict_or_stream(false);
    if (c == '<') return PdfValue{lex_.hex_string()};
    if (c == '(') return PdfValue{lex_.literal_string()};
    if (c == '/') return PdfValue{std::string("/") + lex_.name()};
    if (c == '[') {
      lex_.seek(lex_.pos() + 1);
      PdfArray arr;
      while (true) {
        lex_.skip_ws();
        if (lex_.eof() || lex_.peek() == ']') {
          if (!lex_.eof()) lex_.seek(lex_.pos() + 1);
          break;
        }
        arr.push_back(parse_value());
      }
      return PdfValue{std::move(arr)};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.') {
      return parse_number_or_ref();
    }
    std::string w = lex_.word();
    if (w == "true") return PdfValue{true};
    if (w == "false") return PdfValue{false};
    if (w.empty()) lex_.seek(lex_.pos() + 1);  // unknown delimiter, skip
    return PdfValue{};                           // null / unknown keyword
  }

  // Dict plus an optional trailing stream body.
  PdfValue parse_dict_or_stream(bool allow_stream = true) {
    lex_.seek(lex_.pos() + 2);  // '<<'
    PdfDict dict;
    while (true) {
      lex_.skip_ws();
      if (lex_.eof()) break;
      if (lex_.peek() == '>' && lex_.peek2() == '>') {
        lex_.seek(lex_.pos() + 2);
        break;
      }
      if (lex_.peek() != '/') {
        lex_.seek(lex_.pos() + 1);
        continue;
      }
      std::string key = lex_.name();
      dict[key] = parse_value();
    }
    std::size_t save = lex_.pos();
    lex_.skip_ws();
    std::string w = lex_.word();
    if (w == "stream") {
      // Data starts after CRLF or LF.
      std::size_t p = lex_.pos();
      if (p < buf_.size() && buf_[p] == '\r') ++p;
      if (p < buf_.size() && buf_[p] == '\n') ++p;
      std::size_t data_end = std::string_view::npos;
      if (auto it = dict.find("Length"); it != dict.end() && it->second.is_number()) {
        std::size_t len = static_cast<std::size_t>(it->second.number());
        if (p + len <= buf_.size()) {
          std::string_view tail = buf_.substr(p + len, 20);
          std::size_t k = 0;
          while (k < tail.size() && is_pdf_ws(tail[k])) ++k;
          if (tail.substr(k, 9) == "endstream") data_end = p + len;
        }
      }
      if (data_end == std::string_view::npos) {
        data_end = buf_.find("endstream", p);
        if (data_end == std::string_view::npos) data_end = buf_.size();
        while (data_end > p && (buf_[data_end - 1] == '\n' || buf_[data_end - 1] == '\r'))
          --data_end;
      }
      auto stream = std::make_shared<PdfStream>();
      stream->dict = std::move(dict);
      stream->data = std::string(buf_.substr(p, data_end - p));
      std::size_t after = buf_.find("endstream", data_end);
      lex_.seek(after == std::string_view::npos ? buf_.size() : after + 9);
      if (!allow_stream) {
        // Shouldn't happen inside arrays; treat as plain dict.
      }
      return PdfValue{std::move(stream)};
    }
    lex_.seek(save);
    return PdfValue{std::move(dict)};
  }

 private:
  PdfValue parse_number_or_ref() {
    std::size_t save = lex_.pos();
    std::string first = lex_.word();
    char* end = nullptr;
    double num = std::strtod(first.c_str(), &end);
    if (end == first.c_str()) {
      lex_.seek(save + 1);
      return PdfValue{};
    }
    // Lookahead for "gen R".
    bool integral = !first.empty() && first.find_first_of(".eE") == std::string::npos &&
                    first[0] != '-' && first[0] != '+';
    if (integral) {
      std::size_t mark = lex_.pos();
      lex_.skip_ws();
      if (std::isdigit(static_cast<unsigned char>(lex_.peek()))) {
        std::string gen = lex_.word();
        lex_.skip_ws();
        std::size_t before_r = lex_.pos();
        std::string r = lex_.word();
        if (r == "R" && gen.find_first_not_of("0123456789") == std::string::npos)
          return PdfValue{PdfRef{static_cast<int>(num)}};
        lex_.seek(before_r);
      }
      lex_.seek(mark);
    }
    return PdfValue{num};
  }

  Lexer lex_;
  std::string_view buf_;
};

// WinAnsi (CP1252) mappings for 0x80..0x9F; everything else is Latin-1.
const char* win_ansi_high(unsigned char b) {
  switch (b) {
    case 0x80: return "\xE2\x82\xAC";
    case 0x82: return "\xE2\x80\x9A";
    case 0x83: return "\xC6\x92";
    case 0x84: return "\xE2\x80\x9E";
    case 0x85: return "\xE2\x80\xA6";
    case 0x86: return "\xE2\x80\xA0";
    case 0x87: return "\xE2\x80\xA1";
    case 0x88: return "\xCB\x86";
    case 0x89: return "\xE2\x80\xB0";
    case 0x8A: return "\xC5\xA0";
    case 0x8B: return "\xE2\x80\xB9";
    case 0x8C: return "\xC5\x92";
    case 0x8E: return "\xC5\xBD";
    case 0x91: return "\xE2\x80\x98";
    case 0x92: return "\xE2\x80\x99";
    case 0x93: return "\xE2\x80\x9C";
    case 0x94: return "\xE2\x80\x9D";
    case 0x95: return "\xE2\x80\xA2";
    case 0x96: return "\xE2\x80\x93";
    case 0x97: return "\xE2\x80\x94";
    case 0x98: return "\xCB\x9C";
    case 0x99: return "\xE2\x84\xA2";
    case 0x9A: return "\xC5\xA1";
    case 0x9B: return "\xE2\x80\xBA";
    case 0x9C: return "\xC5\x93";
    case 0x9E: return "\xC5\xBE";
    case 0x9F: return "\xC5\xB8";
    default: return nullptr;
  }
}

std::string decode_pdf_string(const std::string& bytes) {
  std::string out;
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE &&
      static_cast<unsigned char>(bytes[1]) == 0xFF) {
    // UTF-16BE
    for (std::size_t i = 2; i + 1 < bytes.size(); i += 2) {
      unsigned int cp = (static_cast<unsigned char>(bytes[i]) << 8) |
                        static_cast<unsigned char>(bytes[i + 1]);
      if (cp >= 0xD800 && cp < 0xDC00 && i + 3 < bytes.size()) {
        unsigned int lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) |
                          static_cast<unsigned char>(bytes[i + 3]);
        if (lo >= 0xDC00 && lo < 0xE000) {
          cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          i += 2;
        }
      }
      if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
      } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
    }
    return out;
  }
  for (unsigned char b : bytes) {
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
    } else if (const char* mapped = win_ansi_high(b); mapped && b < 0xA0) {
      out += mapped;
    } else {
      out.push_back(static_cast<char>(0xC0 | (b >> 6)));
      out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
    }
  }
  return out;
}

class PdfDocument {
 public:
  explicit PdfDocument(const std::string& bytes) : buf_(bytes) {
    if (buf_.rfind("%PDF-", 0) != 0 && buf_.find("%PDF-") == std::string::npos)
      throw UnreadablePdf("missing %PDF header");
    scan_objects();
    expand_object_streams();
    if (objects_.empty()) throw UnreadablePdf("no PDF objects found");
    check_encryption();
  }

  const PdfValue* object(int id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
  }

  const PdfValue* resolve(const PdfValue& v) const {
    const PdfValue* cur = &v;
    int guard = 0;
    while (cur && cur->is_ref() && guard++ < 32) cur = object(std::get<PdfRef>(cur->v).id);
    return cur;
  }

  const PdfValue* dict_get(const PdfDict& d, const std::string& key) const {
    auto it = d.find(key);
    return it == d.end() ? nullptr : resolve(it->second);
  }

  std::vector<int> page_object_ids(std::vector<std::string>& warnings) const {
    std::vector<int> pages;
    std::set<int> visited;
    if (int root = find_catalog(); root != 0) {
      const PdfValue* cat = object(root);
      if (cat && cat->is_dict()) {
        if (const PdfValue* pages_val = dict_get(*cat->dict(), "Pages")) {
          auto it = cat->dict()->find("Pages");
          if (it != cat->dict()->end() && it->second.is_ref())
            walk_pages(std::get<PdfRef>(it->second.v).id, pages, visited, 0);
          else if (pages_val->is_dict())
            walk_pages_dict(*pages_val->dict(), pages, visited, 0);
        }
      }
    }
    if (pages.empty()) {
      // Fallback: any object typed /Page, in id order.
      for (const auto& [id, val] : objects_) {
        const PdfDict* d = val.is_dict() ? val.dict() : nullptr;
        if (!d && val.is_stream()) continue;
        if (d) {
          auto t = d->find("Type");
          if (t != d->end() && t->second.is_name_or_string() && *t->second.text() == "/Page")
            pages.push_back(id);
        }
      }
      if (!pages.empty()) warnings.push_back("page tree unresolved; pages taken in object order");
    }
    return pages;
  }

  std::string page_content(int page_id, std::vector<std::string>& warnings) const {
    const PdfValue* page = object(page_id);
    if (!page || !page->is_dict()) return {};
    const PdfValue* contents = dict_get(*page->dict(), "Contents");
    if (!contents) return {};
    std::string data;
    auto append_stream = [&](const PdfValue* sv) {
      if (!sv) return;
      if (const PdfStream* st = sv->stream()) {
        try {
          data += decode_stream(*st);
          data.push_back('\n');
        } catch (const std::exception& e) {
          warnings.push_back(std::string("content stream undecodable: ") + e.what());
        }
      }
    };
    if (contents->is_array()) {
      for (const auto& el : *contents->array()) append_stream(resolve(el));
    } else {
      append_stream(contents);
    }
    return data;
  }

  std::string decode_stream(const PdfStream& st) const {
    std::vector<std::string> filters;
    if (auto it = st.dict.find("Filter"); it != st.dict.end()) {
      const PdfValue* f = resolve(it->second);
      if (f && f->is_name_or_string()) filters.push_back(*f->text());
      else if (f && f->is_array())
        for (const auto& el : *f->array())
          if (const PdfValue* r = resolve(el); r && r->is_name_or_string())
            filters.push_back(*r->text());
    }
    std::string data = st.data;
    for (const auto& f : filters) {
      if (f == "/FlateDecode" || f == "/Fl") {
        data = gunzip(data);
      } else {
        throw std::runtime_error("unsupported filter " + f);
      }
    }
    return data;
  }

 private:
  void scan_objects() {
    std::size_t pos = 0;
    while (pos < buf_.size()) {
      std::size_t obj_at = buf_.find(" obj", pos);
      std::size_t obj_len = 4;
      if (obj_at == std::string::npos) break;
      // Backtrack over "N G" before " obj".
      std::size_t q = obj_at;
      while (q > 0 && is_pdf_ws(buf_[q - 1])) --q;
      std::size_t gen_end = q;
      while (q > 0 && std::isdigit(static_cast<unsigned char>(buf_[q - 1]))) --q;
      std::size_t gen_start = q;
      while (q > 0 && is_pdf_ws(buf_[q - 1])) --q;
      std::size_t id_end = q;
      while (q > 0 && std::isdigit(static_cast<unsigned char>(buf_[q - 1]))) --q;
      std::size_t id_start = q;
      if (gen_start == gen_end || id_start == id_end) {
        pos = obj_at + obj_len;
        continue;
      }
      int id = std::atoi(buf_.substr(id_start, id_end - id_start).c_str());
      ObjectParser parser(buf_);
      parser.lexer().seek(obj_at + obj_len);
      PdfValue val = parser.parse_value();
      objects_[id] = std::move(val);  // later definitions (incremental updates) win
      pos = std::max(parser.lexer().pos(), obj_at + obj_len);
    }
  }

  void expand_object_streams() {
    std::vector<std::pair<int, PdfValue>> extracted;
    for (const auto& [id, val] : objects_) {
      const PdfStream* st = val.stream();
      if (!st) continue;
      auto t = st->dict.find("Type");
      if (t == st->dict.end() || !t->second.is_name_or_string() ||
          *t->second.text() != "/ObjStm")
        continue;
      int n = 0, first = 0;
      if (auto it = st->dict.find("N"); it != st->dict.end() && it->second.is_number())
        n = static_cast<int>(it->second.number());
      if (auto it = st->dict.find("First"); it != st->dict.end() && it->second.is_number())
        first = static_cast<int>(it->second.number());
      std::string data;
      try {
        data = decode_stream(*st);
      } catch (const std::exception&) {
        continue;
      }
      ObjectParser header(data);
      std::vector<std::pair<int, int>> index;  // (obj id, offset)
      for (int i = 0; i < n; ++i) {
        header.lexer().skip_ws();
        std::string a = header.lexer().word();
        header.lexer().skip_ws();
        std::string b = header.lexer().word();
        if (a.empty() || b.empty()) break;
        index.emplace_back(std::atoi(a.c_str()), std::atoi(b.c_str()));
      }
      for (auto [oid, off] : index) {
        std::size_t at = static_cast<std::size_t>(first) + static_cast<std::size_t>(off);
        if (at >= data.size()) continue;
        ObjectParser p(data);
        p.lexer().seek(at);
        extracted.emplace_back(oid, p.parse_value());
      }
    }
    for (auto& [id, val] : extracted) {
      if (objects_.find(id) == objects_.end()) objects_[id] = std::move(val);
    }
  }

  void check_encryption() const {
    std::size_t pos = 0;
    while ((pos = buf_.find("trailer", pos)) != std::string::npos) {
      ObjectParser parser(buf_);
      parser.lexer().seek(pos + 7);
      PdfValue t = parser.parse_value();
      if (t.is_dict() && t.dict()->count("Encrypt"))
        throw UnreadablePdf("encrypted document");
      pos += 7;
    }
  }

  int find_catalog() const {
    // Trailer dicts first, then xref-stream dicts, then a raw /Catalog scan.
    std::size_t pos = 0;
    int root = 0;
    while ((pos = buf_.find("trailer", pos)) != std::string::npos) {
      ObjectParser parser(buf_);
      parser.lexer().seek(pos + 7);
      PdfValue t = parser.parse_value();
      if (t.is_dict()) {
        if (auto it = t.dict()->find("Root"); it != t.dict()->end() && it->second.is_ref())
          root = std::get<PdfRef>(it->second.v).id;
      }
      pos += 7;
    }
    if (root != 0) return root;
    for (const auto& [id, val] : objects_) {
      if (const PdfStream* st = val.stream()) {
        auto t = st->dict.find("Type");
        if (t != st->dict.end() && t->second.is_name_or_string() &&
            *t->second.text() == "/XRef") {
          if (auto it = st->dict.find("Root"); it != st->dict.end() && it->second.is_ref())
            return std::get<PdfRef>(it->second.v).id;
        }
      }
    }
    for (const auto& [id, val] : objects_) {
      if (val.is_dict()) {
        auto t = val.dict()->find("Type");
        if (t != val.dict()->end() && t->second.is_name_or_string() &&
            *t->second.text() == "/Catalog")
          return id;
      }
    }
    return 0;
  }

  void walk_pages(int node_id, std::vector<int>& pages, std::set<int>& visited, int depth) const {
    if (depth > 64 || visited.count(node_id)) return;
    visited.insert(node_id);
    const PdfValue* node = object(node_id);
    if (!node || !node->is_dict()) return;
    const PdfDict& d = *node->dict();
    auto t = d.find("Type");
    std::string type =
        (t != d.end() && t->second.is_name_or_string()) ? *t->second.text() : std::string();
    if (type == "/Page") {
      pages.push_back(node_id);
      return;
    }
    walk_pages_dict(d, pages, visited, depth);
  }

  void walk_pages_dict(const PdfDict& d, std::vector<int>& pages, std::set<int>& visited,
                       int depth) const {
    auto kids = d.find("Kids");
    if (kids == d.end()) return;
    const PdfValue* arr = resolve(kids->second);
    if (!arr || !arr->is_array()) return;
    for (const auto& kid : *arr->array()) {
      if (kid.is_ref()) walk_pages(std::get<PdfRef>(kid.v).id, pages, visited, depth + 1);
    }
  }

  const std::string& buf_;
  std::map<int, PdfValue> objects_;
};

// Executes the text-showing subset of a content stream.
std::string run_content_stream(const std::string& content) {
  std::string out;
  ObjectParser parser(content);
  std::vector<PdfValue> stack;
  double last_ty = std::nan("");

  auto newline = [&] {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  auto show = [&](const PdfValue& v) {
    if (const std::string* s = v.text(); s && (!s->empty() && (*s)[0] != '/'))
      out += decode_pdf_string(*s);
  };

  Lexer& lex = parser.lexer();
  while (true) {
    lex.skip_ws();
    if (lex.eof()) break;
    char c = lex.peek();
    if (c == '(' || c == '<' || c == '[' || c == '/' ||
        std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.') {
      stack.push_back(parser.parse_value());
      continue;
    }
    if (c == ']' || c == '}' || c == '>' || c == ')') {
      lex.seek(lex.pos() + 1);
      continue;
    }
    std::string op = lex.word();
    if (op.empty()) {
      lex.seek(lex.pos() + 1);
      continue;
    }
    if (op == "BT") {
      last_ty = std::nan("");
    } else if (op == "ET") {
      newline();
    } else if (op == "Td" || op == "TD") {
      if (stack.size() >= 2 && stack[stack.size() - 1].is_number() &&
          stack[stack.size() - 2].is_number()) {
        double ty = stack.back().number();
        double tx = stack[stack.size() - 2].number();
        if (ty != 0) newline();
        else if (tx > 0 && !out.empty() && out.back() != '\n' && out.back() != ' ')
          out.push_back(' ');
      }
    } else if (op == "T*") {
      newline();
    } else if (op == "Tm") {
      if (stack.size() >= 1 && stack.back().is_number()) {
        double ty = stack.back().number();
        if (!std::isnan(last_ty) && ty != last_ty) newline();
        last_ty = ty;
      }
    } else if (op == "Tj") {
      if (!stack.empty()) show(stack.back());
    } else if (op == "'") {
      newline();
      if (!stack.empty()) show(stack.back());
    } else if (op == "\"") {
      newline();
      if (!stack.empty()) show(stack.back());
    } else if (op == "TJ") {
      if (!stack.empty() && stack.back().is_array()) {
        for (const auto& el : *stack.back().array()) {
          if (el.is_number()) {
            if (el.number() <= -180 && !out.empty() && out.back() != ' ' && out.back() != '\n')
              out.push_back(' ');
          } else {
            show(el);
          }
        }
      }
    }
    stack.clear();
  }
  return out;
}

}  // namespace

FullText extract_fulltext(const std::string& pdf_bytes) {
  if (pdf_bytes.empty()) throw UnreadablePdf("empty input");
  PdfDocument doc(pdf_bytes);

  FullText result;
  std::vector<int> pages = doc.page_object_ids(result.extraction_warnings);
  if (pages.empty()) throw UnreadablePdf("no pages found");

  std::string raw;
  int page_no = 0;
  for (int page_id : pages) {
    ++page_no;
    std::vector<std::string> page_warnings;
    std::string content = doc.page_content(page_id, page_warnings);
    for (const auto& w : page_warnings)
      result.extraction_warnings.push_back("page " + std::to_string(page_no) + ": " + w);
    if (content.empty() && !page_warnings.empty()) continue;  // skipped page
    raw += run_content_stream(content);
    raw.push_back('\n');
  }
  result.page_count = static_cast<int>(pages.size());
  result.text = normalize_extracted_text(raw);
  return result;
}

}  // namespace refaudit
