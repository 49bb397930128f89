#include "annoreview/pdf_text.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "annoreview/error.hpp"
#include "annoreview/text.hpp"

namespace annoreview {

namespace {

// ---------------------------------------------------------------------------
// Object model

struct PdfObject {
    enum class Kind { Null, Bool, Number, String, Name, Keyword, Array, Dict, Ref };

    Kind kind = Kind::Null;
    double number = 0.0;
    bool boolean = false;
    std::string text;  // string bytes, name, or keyword
    std::vector<PdfObject> items;
    std::vector<std::pair<std::string, PdfObject>> entries;
    int ref_num = 0;

    [[nodiscard]] const PdfObject* get(std::string_view key) const {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    }
    [[nodiscard]] bool is(Kind k) const { return kind == k; }
    [[nodiscard]] bool is_name(std::string_view n) const { return kind == Kind::Name && text == n; }
};

bool is_pdf_whitespace(char c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_delimiter(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
           c == '}' || c == '/' || c == '%';
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

class Lexer {
public:
    explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

    [[nodiscard]] std::size_t pos() const { return pos_; }
    void seek(std::size_t p) { pos_ = p; }
    [[nodiscard]] bool at_end() {
        skip_whitespace();
        return pos_ >= data_.size();
    }

    void skip_whitespace() {
        while (pos_ < data_.size()) {
            const char c = data_[pos_];
            if (is_pdf_whitespace(c)) {
                ++pos_;
            } else if (c == '%') {
                while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    /// Reads one object; arrays and dicts recurse. "n g R" becomes a Ref.
    std::optional<PdfObject> read_object(int depth = 0) {
        if (depth > 64) return std::nullopt;
        skip_whitespace();
        if (pos_ >= data_.size()) return std::nullopt;
        const char c = data_[pos_];
        PdfObject obj;
        if (c == '(') {
            obj.kind = PdfObject::Kind::String;
            obj.text = read_literal_string();
            return obj;
        }
        if (c == '<') {
            if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
                pos_ += 2;
                obj.kind = PdfObject::Kind::Dict;
                while (true) {
                    skip_whitespace();
                    if (pos_ >= data_.size()) return std::nullopt;
                    if (data_.substr(pos_, 2) == ">>") {
                        pos_ += 2;
                        return obj;
                    }
                    auto key = read_object(depth + 1);
                    if (!key) return std::nullopt;
                    if (!key->is(PdfObject::Kind::Name)) continue;
                    auto value = read_object(depth + 1);
                    if (!value) return std::nullopt;
                    obj.entries.emplace_back(std::move(key->text), std::move(*value));
                }
            }
            obj.kind = PdfObject::Kind::String;
            obj.text = read_hex_string();
            return obj;
        }
        if (c == '[') {
            ++pos_;
            obj.kind = PdfObject::Kind::Array;
            while (true) {
                skip_whitespace();
                if (pos_ >= data_.size()) return std::nullopt;
                if (data_[pos_] == ']') {
                    ++pos_;
                    return obj;
                }
                auto item = read_object(depth + 1);
                if (!item) return std::nullopt;
                obj.items.push_back(std::move(*item));
            }
        }
        if (c == '/') {
            ++pos_;
            obj.kind = PdfObject::Kind::Name;
            while (pos_ < data_.size() && !is_pdf_whitespace(data_[pos_]) && !is_delimiter(data_[pos_])) {
                if (data_[pos_] == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
                    hex_value(data_[pos_ + 2]) >= 0) {
                    obj.text.push_back(static_cast<char>(hex_value(data_[pos_ + 1]) * 16 + hex_value(data_[pos_ + 2])));
                    pos_ += 3;
                } else {
                    obj.text.push_back(data_[pos_++]);
                }
            }
            return obj;
        }
        if (c == ']' || c == '>' || c == ')' || c == '{' || c == '}') {
            ++pos_;
            obj.kind = PdfObject::Kind::Keyword;
            obj.text = std::string(1, c);
            return obj;
        }

        const std::size_t start = pos_;
        while (pos_ < data_.size() && !is_pdf_whitespace(data_[pos_]) && !is_delimiter(data_[pos_])) ++pos_;
        const std::string_view word = data_.substr(start, pos_ - start);
        if (word.empty()) {
            ++pos_;
            return read_object(depth);
        }
        if (is_number(word)) {
            obj.kind = PdfObject::Kind::Number;
            obj.number = std::strtod(std::string(word).c_str(), nullptr);
            if (is_integer(word)) {
                // lookahead for "gen R"
                const std::size_t save = pos_;
                skip_whitespace();
                const std::size_t gen_start = pos_;
                while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) ++pos_;
                if (pos_ > gen_start) {
                    skip_whitespace();
                    if (pos_ < data_.size() && data_[pos_] == 'R' &&
                        (pos_ + 1 >= data_.size() || is_pdf_whitespace(data_[pos_ + 1]) ||
                         is_delimiter(data_[pos_ + 1]))) {
                        ++pos_;
                        obj.kind = PdfObject::Kind::Ref;
                        obj.ref_num = static_cast<int>(obj.number);
                        return obj;
                    }
                }
                pos_ = save;
            }
            return obj;
        }
        if (word == "true" || word == "false") {
            obj.kind = PdfObject::Kind::Bool;
            obj.boolean = word == "true";
            return obj;
        }
        if (word == "null") return obj;
        obj.kind = PdfObject::Kind::Keyword;
        obj.text = std::string(word);
        return obj;
    }

    std::string_view data() const { return data_; }

private:
    static bool is_number(std::string_view w) {
        std::size_t i = 0;
        if (w[0] == '+' || w[0] == '-') i = 1;
        if (i >= w.size()) return false;
        bool digits = false;
        for (; i < w.size(); ++i) {
            if (std::isdigit(static_cast<unsigned char>(w[i]))) {
                digits = true;
            } else if (w[i] != '.') {
                return false;
            }
        }
        return digits;
    }
    static bool is_integer(std::string_view w) {
        return std::all_of(w.begin(), w.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
    }

    std::string read_literal_string() {
        std::string out;
        ++pos_;  // (
        int depth = 1;
        while (pos_ < data_.size()) {
            const char c = data_[pos_++];
            if (c == '\\') {
                if (pos_ >= data_.size()) break;
                const char e = data_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 'r': out.push_back('\r'); break;
                    case 't': out.push_back('\t'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case '\r':
                        if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                        break;
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int value = e - '0';
                            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
                                value = value * 8 + (data_[pos_++] - '0');
                            }
                            out.push_back(static_cast<char>(value & 0xFF));
                        } else {
                            out.push_back(e);
                        }
                }
                continue;
            }
            if (c == '(') ++depth;
            if (c == ')' && --depth == 0) break;
            out.push_back(c);
        }
        return out;
    }

    std::string read_hex_string() {
        std::string out;
        ++pos_;  // <
        int pending = -1;
        while (pos_ < data_.size() && data_[pos_] != '>') {
            const int v = hex_value(data_[pos_++]);
            if (v < 0) continue;
            if (pending < 0) {
                pending = v;
            } else {
                out.push_back(static_cast<char>(pending * 16 + v));
                pending = -1;
            }
        }
        if (pending >= 0) out.push_back(static_cast<char>(pending * 16));
        if (pos_ < data_.size()) ++pos_;
        return out;
    }

    std::string_view data_;
    std::size_t pos_;
};

// ---------------------------------------------------------------------------
// Streams

std::optional<std::string> inflate_bytes(std::string_view in) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) return std::nullopt;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    std::string out;
    char buffer[16384];
    int ret = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buffer);
        zs.avail_out = sizeof(buffer);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) break;
        out.append(buffer, sizeof(buffer) - zs.avail_out);
    } while (ret != Z_STREAM_END && zs.avail_in > 0);
    inflateEnd(&zs);
    // truncated streams are common in the wild; keep what decoded
    if (ret != Z_STREAM_END && out.empty()) return std::nullopt;
    return out;
}

struct StoredObject {
    PdfObject value;
    std::optional<std::string> raw_stream;
};

class Document {
public:
    explicit Document(std::string_view bytes) : bytes_(bytes) {
        scan_objects();
        expand_object_streams();
    }

    const PdfObject* resolve(const PdfObject* obj, int depth = 0) const {
        while (obj != nullptr && obj->is(PdfObject::Kind::Ref) && depth++ < 32) {
            const auto it = objects_.find(obj->ref_num);
            obj = it == objects_.end() ? nullptr : &it->second.value;
        }
        return obj;
    }

    const PdfObject* lookup(const PdfObject& dict, std::string_view key) const {
        return resolve(dict.get(key));
    }

    /// Decoded stream data for a stream object reference (or nullopt).
    std::optional<std::string> stream_data(const PdfObject* ref) const {
        if (ref == nullptr || !ref->is(PdfObject::Kind::Ref)) return std::nullopt;
        const auto it = objects_.find(ref->ref_num);
        if (it == objects_.end() || !it->second.raw_stream) return std::nullopt;
        return decode(it->second.value, *it->second.raw_stream);
    }

    std::vector<const PdfObject*> pages() const {
        std::vector<const PdfObject*> result;
        for (const auto& [num, stored] : objects_) {
            const auto* type = stored.value.get("Type");
            if (type != nullptr && type->is_name("Catalog")) {
                std::set<const PdfObject*> seen;
                collect_pages(lookup(stored.value, "Pages"), nullptr, result, seen, 0);
                if (!result.empty()) return result;
            }
        }
        for (const auto& [num, stored] : objects_) {
            const auto* type = stored.value.get("Type");
            if (type != nullptr && type->is_name("Page")) result.push_back(&stored.value);
        }
        return result;
    }

    /// Resources for a page, following inheritance from the page tree.
    const PdfObject* resources_of(const PdfObject* page) const {
        const auto it = inherited_resources_.find(page);
        if (it != inherited_resources_.end()) return it->second;
        return lookup(*page, "Resources");
    }

private:
    void collect_pages(const PdfObject* node, const PdfObject* resources, std::vector<const PdfObject*>& out,
                       std::set<const PdfObject*>& seen, int depth) const {
        if (node == nullptr || !node->is(PdfObject::Kind::Dict) || depth > 64 || !seen.insert(node).second) return;
        if (const auto* own = lookup(*node, "Resources")) resources = own;
        const auto* type = node->get("Type");
        if (type != nullptr && type->is_name("Page")) {
            out.push_back(node);
            inherited_resources_[node] = resources;
            return;
        }
        const auto* kids = lookup(*node, "Kids");
        if (kids == nullptr || !kids->is(PdfObject::Kind::Array)) return;
        for (const auto& kid : kids->items) collect_pages(resolve(&kid), resources, out, seen, depth + 1);
    }

    std::optional<std::string> decode(const PdfObject& dict, const std::string& raw) const {
        const auto* filter = resolve(dict.get("Filter"));
        std::vector<std::string> filters;
        if (filter != nullptr && filter->is(PdfObject::Kind::Name)) filters.push_back(filter->text);
        if (filter != nullptr && filter->is(PdfObject::Kind::Array)) {
            for (const auto& f : filter->items) {
                if (f.is(PdfObject::Kind::Name)) filters.push_back(f.text);
            }
        }
        std::string data = raw;
        for (const auto& f : filters) {
            if (f == "FlateDecode" || f == "Fl") {
                auto inflated = inflate_bytes(data);
                if (!inflated) return std::nullopt;
                data = std::move(*inflated);
            } else {
                return std::nullopt;
            }
        }
        return data;
    }

    void scan_objects() {
        std::size_t pos = 0;
        while ((pos = bytes_.find("obj", pos)) != std::string_view::npos) {
            const std::size_t obj_kw = pos;
            pos += 3;
            if (obj_kw > 0 && !is_pdf_whitespace(bytes_[obj_kw - 1])) continue;
            if (pos < bytes_.size() && !is_pdf_whitespace(bytes_[pos]) && !is_delimiter(bytes_[pos])) continue;
            // walk back over "num gen "
            std::size_t p = obj_kw;
            auto skip_ws_back = [&] { while (p > 0 && is_pdf_whitespace(bytes_[p - 1])) --p; };
            auto digits_back = [&] {
                const std::size_t end = p;
                while (p > 0 && std::isdigit(static_cast<unsigned char>(bytes_[p - 1]))) --p;
                return end - p;
            };
            skip_ws_back();
            if (digits_back() == 0) continue;
            skip_ws_back();
            const std::size_t num_end = p;
            if (digits_back() == 0) continue;
            const int num = std::atoi(std::string(bytes_.substr(p, num_end - p)).c_str());

            Lexer lexer(bytes_, pos);
            auto value = lexer.read_object();
            if (!value) continue;
            StoredObject stored{std::move(*value), std::nullopt};
            lexer.skip_whitespace();
            const std::size_t after = lexer.pos();
            if (stored.value.is(PdfObject::Kind::Dict) && bytes_.substr(after, 6) == "stream") {
                std::size_t data_start = after + 6;
                if (bytes_.substr(data_start, 2) == "\r\n") {
                    data_start += 2;
                } else if (data_start < bytes_.size() && (bytes_[data_start] == '\n' || bytes_[data_start] == '\r')) {
                    data_start += 1;
                }
                std::optional<std::size_t> data_end;
                const auto* length = stored.value.get("Length");
                if (length != nullptr && length->is(PdfObject::Kind::Number) && length->number >= 0) {
                    const auto candidate = data_start + static_cast<std::size_t>(length->number);
                    if (candidate <= bytes_.size()) {
                        Lexer check(bytes_, candidate);
                        check.skip_whitespace();
                        if (bytes_.substr(check.pos(), 9) == "endstream") data_end = candidate;
                    }
                }
                if (!data_end) {
                    const auto found = bytes_.find("endstream", data_start);
                    if (found == std::string_view::npos) continue;
                    std::size_t e = found;
                    if (e > data_start && bytes_[e - 1] == '\n') --e;
                    if (e > data_start && bytes_[e - 1] == '\r') --e;
                    data_end = e;
                }
                stored.raw_stream = std::string(bytes_.substr(data_start, *data_end - data_start));
                pos = *data_end;
            } else {
                pos = after;
            }
            objects_[num] = std::move(stored);
        }
    }

    void expand_object_streams() {
        std::vector<std::pair<int, StoredObject>> extracted;
        for (const auto& [num, stored] : objects_) {
            const auto* type = stored.value.get("Type");
            if (type == nullptr || !type->is_name("ObjStm") || !stored.raw_stream) continue;
            const auto data = decode(stored.value, *stored.raw_stream);
            const auto* n = stored.value.get("N");
            const auto* first = stored.value.get("First");
            if (!data || n == nullptr || first == nullptr) continue;
            Lexer header(*data);
            std::vector<std::pair<int, std::size_t>> index;
            for (int i = 0; i < static_cast<int>(n->number); ++i) {
                auto obj_num = header.read_object();
                auto offset = header.read_object();
                if (!obj_num || !offset) break;
                index.emplace_back(static_cast<int>(obj_num->number),
                                   static_cast<std::size_t>(first->number + offset->number));
            }
            // object streams hold their data; keep a copy alive for the lexer
            owned_.push_back(*data);
            const std::string_view view = owned_.back();
            for (const auto& [obj_num, offset] : index) {
                if (offset >= view.size()) continue;
                Lexer body(view, offset);
                if (auto value = body.read_object()) extracted.emplace_back(obj_num, StoredObject{std::move(*value), std::nullopt});
            }
        }
        for (auto& [num, stored] : extracted) {
            objects_.try_emplace(num, std::move(stored));
        }
    }

    std::string_view bytes_;
    std::map<int, StoredObject> objects_;
    std::vector<std::string> owned_;
    mutable std::map<const PdfObject*, const PdfObject*> inherited_resources_;
};

// ---------------------------------------------------------------------------
// Fonts

const std::unordered_map<std::string, char32_t>& glyph_names() {
    static const std::unordered_map<std::string, char32_t> table = [] {
        std::unordered_map<std::string, char32_t> t{
            {"space", U' '}, {"exclam", U'!'}, {"quotedbl", U'"'}, {"numbersign", U'#'},
            {"dollar", U'$'}, {"percent", U'%'}, {"ampersand", U'&'}, {"quotesingle", U'\''},
            {"quoteright", U'\u2019'}, {"quoteleft", U'\u2018'}, {"parenleft", U'('},
            {"parenright", U')'}, {"asterisk", U'*'}, {"plus", U'+'}, {"comma", U','},
            {"hyphen", U'-'}, {"period", U'.'}, {"slash", U'/'}, {"colon", U':'},
            {"semicolon", U';'}, {"less", U'<'}, {"equal", U'='}, {"greater", U'>'},
            {"question", U'?'}, {"at", U'@'}, {"bracketleft", U'['}, {"backslash", U'\\'},
            {"bracketright", U']'}, {"underscore", U'_'}, {"braceleft", U'{'}, {"bar", U'|'},
            {"braceright", U'}'}, {"asciitilde", U'~'}, {"endash", U'\u2013'}, {"emdash", U'\u2014'},
            {"quotedblleft", U'\u201C'}, {"quotedblright", U'\u201D'}, {"bullet", U'\u2022'},
            {"fi", U'\uFB01'}, {"fl", U'\uFB02'}, {"ff", U'\uFB00'}, {"ffi", U'\uFB03'},
            {"ffl", U'\uFB04'}, {"ellipsis", U'\u2026'}, {"dieresis", U'\u00A8'},
            {"acute", U'\u00B4'}, {"grave", U'`'}, {"dotlessi", U'\u0131'},
            {"zero", U'0'}, {"one", U'1'}, {"two", U'2'}, {"three", U'3'}, {"four", U'4'},
            {"five", U'5'}, {"six", U'6'}, {"seven", U'7'}, {"eight", U'8'}, {"nine", U'9'},
        };
        for (char c = 'a'; c <= 'z'; ++c) t[std::string(1, c)] = static_cast<char32_t>(c);
        for (char c = 'A'; c <= 'Z'; ++c) t[std::string(1, c)] = static_cast<char32_t>(c);
        return t;
    }();
    return table;
}

std::optional<char32_t> glyph_to_unicode(const std::string& name) {
    const auto& table = glyph_names();
    if (const auto it = table.find(name); it != table.end()) return it->second;
    if (name.size() == 7 && name.rfind("uni", 0) == 0) {
        char32_t value = 0;
        for (std::size_t i = 3; i < 7; ++i) {
            const int v = hex_value(name[i]);
            if (v < 0) return std::nullopt;
            value = value * 16 + static_cast<char32_t>(v);
        }
        return value;
    }
    return std::nullopt;
}

char32_t win_ansi(unsigned char b) {
    static constexpr char32_t high[32] = {
        0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
        0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
        0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};
    if (b >= 0x80 && b <= 0x9F) return high[b - 0x80];
    return b;
}

std::u32string utf16be_to_u32(std::string_view bytes) {
    std::u32string out;
    for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
        char32_t unit = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
        if (unit >= 0xD800 && unit <= 0xDBFF && i + 3 < bytes.size()) {
            const char32_t low = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
            unit = 0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00);
            i += 2;
        }
        out.push_back(unit);
    }
    return out;
}

uint32_t code_of(std::string_view bytes) {
    uint32_t code = 0;
    for (unsigned char b : bytes) code = (code << 8) | b;
    return code;
}

struct Font {
    int code_bytes = 1;
    std::map<uint32_t, std::u32string> to_unicode;
    std::map<uint32_t, char32_t> differences;

    [[nodiscard]] std::u32string decode(std::string_view bytes) const {
        std::u32string out;
        const std::size_t step = static_cast<std::size_t>(code_bytes);
        for (std::size_t i = 0; i + step <= bytes.size(); i += step) {
            const uint32_t code = code_of(bytes.substr(i, step));
            if (const auto it = to_unicode.find(code); it != to_unicode.end()) {
                out += it->second;
            } else if (const auto d = differences.find(code); d != differences.end()) {
                out.push_back(d->second);
            } else if (code_bytes == 1) {
                out.push_back(win_ansi(static_cast<unsigned char>(code)));
            } else {
                out.push_back(U'\uFFFD');
            }
        }
        return out;
    }
};

void parse_cmap(std::string_view data, Font& font) {
    Lexer lexer(data);
    std::vector<PdfObject> operands;
    while (!lexer.at_end()) {
        auto obj = lexer.read_object();
        if (!obj) break;
        if (!obj->is(PdfObject::Kind::Keyword)) {
            operands.push_back(std::move(*obj));
            continue;
        }
        const std::string& op = obj->text;
        if (op == "endcodespacerange" && !operands.empty() && operands.front().is(PdfObject::Kind::String)) {
            font.code_bytes = static_cast<int>(std::max<std::size_t>(1, operands.front().text.size()));
        } else if (op == "endbfchar") {
            for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
                if (!operands[i].is(PdfObject::Kind::String) || !operands[i + 1].is(PdfObject::Kind::String)) continue;
                font.to_unicode[code_of(operands[i].text)] = utf16be_to_u32(operands[i + 1].text);
            }
        } else if (op == "endbfrange") {
            for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
                const auto& lo = operands[i];
                const auto& hi = operands[i + 1];
                const auto& dst = operands[i + 2];
                if (!lo.is(PdfObject::Kind::String) || !hi.is(PdfObject::Kind::String)) continue;
                const uint32_t first = code_of(lo.text);
                const uint32_t last = code_of(hi.text);
                if (last < first || last - first > 0xFFFF) continue;
                for (uint32_t code = first; code <= last; ++code) {
                    if (dst.is(PdfObject::Kind::Array)) {
                        const auto idx = code - first;
                        if (idx < dst.items.size() && dst.items[idx].is(PdfObject::Kind::String)) {
                            font.to_unicode[code] = utf16be_to_u32(dst.items[idx].text);
                        }
                    } else if (dst.is(PdfObject::Kind::String)) {
                        auto mapped = utf16be_to_u32(dst.text);
                        if (!mapped.empty()) mapped.back() += code - first;
                        font.to_unicode[code] = std::move(mapped);
                    }
                }
            }
        }
        if (op.rfind("begin", 0) == 0 || op.rfind("end", 0) == 0 || op == "def") operands.clear();
    }
}

Font load_font(const Document& doc, const PdfObject* font_dict) {
    Font font;
    if (font_dict == nullptr || !font_dict->is(PdfObject::Kind::Dict)) return font;
    const auto* subtype = font_dict->get("Subtype");
    if (subtype != nullptr && subtype->is_name("Type0")) font.code_bytes = 2;

    const auto* encoding = doc.lookup(*font_dict, "Encoding");
    if (encoding != nullptr && encoding->is(PdfObject::Kind::Dict)) {
        if (const auto* diffs = doc.lookup(*encoding, "Differences"); diffs != nullptr && diffs->is(PdfObject::Kind::Array)) {
            uint32_t code = 0;
            for (const auto& item : diffs->items) {
                if (item.is(PdfObject::Kind::Number)) {
                    code = static_cast<uint32_t>(item.number);
                } else if (item.is(PdfObject::Kind::Name)) {
                    if (auto cp = glyph_to_unicode(item.text)) font.differences[code] = *cp;
                    ++code;
                }
            }
        }
    }
    const int declared_bytes = font.code_bytes;
    if (auto cmap = doc.stream_data(font_dict->get("ToUnicode"))) {
        parse_cmap(*cmap, font);
        if (subtype != nullptr && subtype->is_name("Type0")) font.code_bytes = declared_bytes;
    }
    return font;
}

// ---------------------------------------------------------------------------
// Content streams

class PageTextBuilder {
public:
    void move_line(double x, double y) {
        if (std::abs(y - line_y_) > 0.01) {
            newline_pending_ = true;
        } else if (std::abs(x - line_x_) > 0.01) {
            space_pending_ = true;
        }
        line_x_ = x;
        line_y_ = y;
    }
    void next_line() {
        newline_pending_ = true;
        line_y_ -= leading_;
    }
    void set_leading(double l) { leading_ = l; }
    void set_matrix(double x, double y) { move_line(x, y); }
    [[nodiscard]] double line_x() const { return line_x_; }
    [[nodiscard]] double line_y() const { return line_y_; }

    void show(const std::u32string& text) {
        if (text.empty()) return;
        if (!out_.empty()) {
            if (newline_pending_ && out_.back() != U'\n') {
                out_.push_back(U'\n');
            } else if (space_pending_ && !newline_pending_ && !is_space(out_.back()) && !is_space(text.front())) {
                out_.push_back(U' ');
            }
        }
        newline_pending_ = false;
        space_pending_ = false;
        out_ += text;
    }
    void word_gap() { space_pending_ = true; }

    [[nodiscard]] std::string take() { return u32_to_utf8(out_); }

private:
    static bool is_space(char32_t c) { return c == U' ' || c == U'\n'; }

    std::u32string out_;
    double line_x_ = 0.0;
    double line_y_ = 0.0;
    double leading_ = 0.0;
    bool newline_pending_ = false;
    bool space_pending_ = false;
};

double num(const std::vector<PdfObject>& ops, std::size_t from_end) {
    if (ops.size() < from_end) return 0.0;
    const auto& o = ops[ops.size() - from_end];
    return o.is(PdfObject::Kind::Number) ? o.number : 0.0;
}

void run_content(std::string_view content, const std::map<std::string, Font>& fonts, PageTextBuilder& builder) {
    Lexer lexer(content);
    std::vector<PdfObject> operands;
    const Font fallback;
    const Font* font = &fallback;
    double line_start_x = 0.0;
    double line_start_y = 0.0;

    while (!lexer.at_end()) {
        auto obj = lexer.read_object();
        if (!obj) break;
        if (!obj->is(PdfObject::Kind::Keyword)) {
            operands.push_back(std::move(*obj));
            continue;
        }
        const std::string& op = obj->text;
        if (op == "BI") {
            // inline image: skip binary payload up to EI
            const auto data = lexer.data();
            auto p = data.find("ID", lexer.pos());
            if (p == std::string_view::npos) break;
            p = data.find("EI", p + 2);
            while (p != std::string_view::npos &&
                   !(is_pdf_whitespace(data[p - 1]) && (p + 2 >= data.size() || is_pdf_whitespace(data[p + 2])))) {
                p = data.find("EI", p + 2);
            }
            if (p == std::string_view::npos) break;
            lexer.seek(p + 2);
        } else if (op == "BT") {
            line_start_x = 0.0;
            line_start_y = 0.0;
        } else if (op == "Tf" && operands.size() >= 2 && operands[operands.size() - 2].is(PdfObject::Kind::Name)) {
            const auto it = fonts.find(operands[operands.size() - 2].text);
            font = it == fonts.end() ? &fallback : &it->second;
        } else if (op == "TL") {
            builder.set_leading(num(operands, 1));
        } else if (op == "Td" || op == "TD") {
            line_start_x += num(operands, 2);
            line_start_y += num(operands, 1);
            if (op == "TD") builder.set_leading(-num(operands, 1));
            builder.move_line(line_start_x, line_start_y);
        } else if (op == "Tm") {
            line_start_x = num(operands, 2);
            line_start_y = num(operands, 1);
            builder.set_matrix(line_start_x, line_start_y);
        } else if (op == "T*") {
            builder.next_line();
            line_start_y = builder.line_y();
        } else if (op == "Tj" || op == "'" || op == "\"") {
            if (op != "Tj") {
                builder.next_line();
                line_start_y = builder.line_y();
            }
            if (!operands.empty() && operands.back().is(PdfObject::Kind::String)) {
                builder.show(font->decode(operands.back().text));
            }
        } else if (op == "TJ") {
            if (!operands.empty() && operands.back().is(PdfObject::Kind::Array)) {
                for (const auto& item : operands.back().items) {
                    if (item.is(PdfObject::Kind::String)) {
                        builder.show(font->decode(item.text));
                    } else if (item.is(PdfObject::Kind::Number) && item.number < -250.0) {
                        builder.word_gap();
                    }
                }
            }
        }
        operands.clear();
    }
}

std::map<std::string, Font> page_fonts(const Document& doc, const PdfObject* page) {
    std::map<std::string, Font> fonts;
    const auto* resources = doc.resources_of(page);
    if (resources == nullptr) return fonts;
    const auto* font_dict = doc.lookup(*resources, "Font");
    if (font_dict == nullptr || !font_dict->is(PdfObject::Kind::Dict)) return fonts;
    for (const auto& [name, ref] : font_dict->entries) {
        fonts.emplace(name, load_font(doc, doc.resolve(&ref)));
    }
    return fonts;
}

std::string page_content(const Document& doc, const PdfObject* page) {
    const auto* contents = page->get("Contents");
    std::string content;
    if (contents == nullptr) return content;
    const auto* resolved = doc.resolve(contents);
    if (resolved != nullptr && resolved->is(PdfObject::Kind::Array)) {
        for (const auto& item : resolved->items) {
            if (auto data = doc.stream_data(&item)) {
                content += *data;
                content += '\n';
            }
        }
    } else if (auto data = doc.stream_data(contents)) {
        content = std::move(*data);
    }
    return content;
}

}  // namespace

std::vector<std::string> BasicPdfTextExtractor::extract_pages(std::string_view pdf_bytes) const {
    const auto header = pdf_bytes.find("%PDF-");
    if (header == std::string_view::npos || header > 1024) {
        throw Error(ErrorCode::UnsupportedFormat, "not a PDF file (missing %PDF- header)");
    }
    if (pdf_bytes.find("/Encrypt") != std::string_view::npos) {
        throw Error(ErrorCode::UnsupportedFormat, "encrypted PDFs are not supported");
    }
    const Document doc(pdf_bytes);
    const auto pages = doc.pages();
    if (pages.empty()) throw Error(ErrorCode::UnsupportedFormat, "PDF contains no pages");

    std::vector<std::string> texts;
    texts.reserve(pages.size());
    bool any_text = false;
    for (const auto* page : pages) {
        PageTextBuilder builder;
        run_content(page_content(doc, page), page_fonts(doc, page), builder);
        texts.push_back(builder.take());
        if (!trim(texts.back()).empty()) any_text = true;
    }
    if (!any_text) {
        throw Error(ErrorCode::UnsupportedFormat, "PDF has no extractable text layer (scanned documents are not supported)");
    }
    return texts;
}

std::shared_ptr<const PdfTextExtractor> default_pdf_extractor() {
    static const auto instance = std::make_shared<const BasicPdfTextExtractor>();
    return instance;
}

}  // namespace annoreview
