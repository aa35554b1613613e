#include "xml_reader.hpp"

#include <cctype>
#include <cstdint>

#include "dmescope/errors.hpp"

namespace dmescope::xml {
namespace {

class Reader {
public:
    explicit Reader(std::string_view doc) : doc_(doc) {}

    Element document() {
        skip_misc();
        if (at_end()) fail("no root element");
        Element root = element();
        skip_misc();
        if (!at_end()) fail("content after root element");
        return root;
    }

private:
    std::string_view doc_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    bool at_end() const { return pos_ >= doc_.size(); }
    char peek() const {
        if (at_end()) fail("unexpected end of input");
        return doc_[pos_];
    }
    bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(doc_[pos_]))) ++pos_;
    }
    void skip_until(std::string_view terminator) {
        auto end = doc_.find(terminator, pos_);
        if (end == std::string_view::npos) {
            pos_ = doc_.size();
            fail("unterminated construct, expected '" + std::string(terminator) + "'");
        }
        pos_ = end + terminator.size();
    }

    // Comments, PIs, DOCTYPE and whitespace between markup.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<?"))
                skip_until("?>");
            else if (starts_with("<!--"))
                skip_until("-->");
            else if (starts_with("<!DOCTYPE"))
                skip_until(">");
            else
                return;
        }
    }

    static bool name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.' ||
               (static_cast<unsigned char>(c) & 0x80);
    }

    std::string name() {
        auto start = pos_;
        while (!at_end() && name_char(doc_[pos_])) ++pos_;
        if (start == pos_) fail("expected a name");
        return std::string(doc_.substr(start, pos_ - start));
    }

    static void append_utf8(std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    void entity(std::string& out) {
        auto start = pos_;
        expect('&');
        auto semi = doc_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 10) {
            pos_ = start;
            fail("malformed entity");
        }
        auto ref = doc_.substr(pos_, semi - pos_);
        pos_ = semi + 1;
        if (ref == "amp") out += '&';
        else if (ref == "lt") out += '<';
        else if (ref == "gt") out += '>';
        else if (ref == "quot") out += '"';
        else if (ref == "apos") out += '\'';
        else if (ref.size() > 1 && ref[0] == '#') {
            std::uint32_t cp = 0;
            bool hex = ref[1] == 'x' || ref[1] == 'X';
            auto digits = ref.substr(hex ? 2 : 1);
            if (digits.empty()) {
                pos_ = start;
                fail("malformed character reference");
            }
            for (char c : digits) {
                int v;
                if (std::isdigit(static_cast<unsigned char>(c))) v = c - '0';
                else if (hex && std::isxdigit(static_cast<unsigned char>(c))) v = std::tolower(c) - 'a' + 10;
                else {
                    pos_ = start;
                    fail("malformed character reference");
                }
                cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
                if (cp > 0x10FFFF) {
                    pos_ = start;
                    fail("character reference out of range");
                }
            }
            append_utf8(out, cp);
        } else {
            pos_ = start;
            fail("unknown entity '" + std::string(ref) + "'");
        }
    }

    std::string attribute_value() {
        char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        ++pos_;
        std::string value;
        for (;;) {
            char c = peek();
            if (c == quote) {
                ++pos_;
                return value;
            }
            if (c == '<') fail("'<' in attribute value");
            if (c == '&')
                entity(value);
            else {
                value += c;
                ++pos_;
            }
        }
    }

    void skip_char_data() {
        while (!at_end() && doc_[pos_] != '<') ++pos_;
    }

    Element element() {
        Element el;
        el.offset = pos_;
        expect('<');
        el.name = name();
        for (;;) {
            skip_ws();
            char c = peek();
            if (c == '/') {
                ++pos_;
                expect('>');
                return el;
            }
            if (c == '>') {
                ++pos_;
                break;
            }
            auto key = name();
            skip_ws();
            expect('=');
            skip_ws();
            el.attributes.emplace_back(std::move(key), attribute_value());
        }
        for (;;) {
            skip_char_data();
            if (at_end()) fail("unexpected end of input inside <" + el.name + ">");
            if (starts_with("</")) {
                pos_ += 2;
                auto closing = name();
                if (closing != el.name) fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
                skip_ws();
                expect('>');
                return el;
            }
            if (starts_with("<!--")) {
                skip_until("-->");
                continue;
            }
            if (starts_with("<![CDATA[")) {
                skip_until("]]>");
                continue;
            }
            if (starts_with("<?")) {
                skip_until("?>");
                continue;
            }
            el.children.push_back(element());
        }
    }
};

}  // namespace

Element parse(std::string_view document) { return Reader(document).document(); }

}  // namespace dmescope::xml
