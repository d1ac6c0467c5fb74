#include "selfie/text.hpp"

#include <cctype>
#include <cstdint>
#include <optional>

namespace selfie {

namespace {

struct Decoded {
    char32_t cp;
    std::size_t len;
    bool valid;
};

Decoded decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> std::optional<unsigned> {
        if (i + k >= s.size()) return std::nullopt;
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return std::nullopt;
        return b & 0x3Fu;
    };
    if (b0 < 0x80) return {b0, 1, true};
    if ((b0 & 0xE0) == 0xC0) {
        if (auto c1 = cont(1)) return {static_cast<char32_t>(((b0 & 0x1Fu) << 6) | *c1), 2, true};
    } else if ((b0 & 0xF0) == 0xE0) {
        auto c1 = cont(1), c2 = cont(2);
        if (c1 && c2) return {static_cast<char32_t>(((b0 & 0x0Fu) << 12) | (*c1 << 6) | *c2), 3, true};
    } else if ((b0 & 0xF8) == 0xF0) {
        auto c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 && c2 && c3) {
            return {static_cast<char32_t>(((b0 & 0x07u) << 18) | (*c1 << 12) | (*c2 << 6) | *c3), 4, true};
        }
    }
    return {b0, 1, false};
}

void encode(char32_t cp, std::string& out) {
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

// Latin Extended-A alternates upper/lower; which parity is upper flips in
// the 0x139..0x148 and 0x179..0x17E runs.
bool latin_ext_a_odd_upper(char32_t c) {
    return (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
}

char32_t upper_of(char32_t c) {
    if (c >= 'a' && c <= 'z') return c - 0x20;
    if (c < 0x80) return c;
    if (c == 0xB5) return 0x39C;
    if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 0x20;
    if (c == 0xFF) return 0x178;
    if (c == 0x131) return 'I';
    if (c == 0x17F) return 'S';
    if (c >= 0x100 && c <= 0x17E && c != 0x138 && c != 0x149) {
        const bool odd = (c & 1) != 0;
        if (latin_ext_a_odd_upper(c)) return odd ? c : c - 1;
        return odd ? c - 1 : c;
    }
    if (c >= 0x3B1 && c <= 0x3C9) return c == 0x3C2 ? char32_t{0x3A3} : c - 0x20;
    if (c == 0x3AC) return 0x386;
    if (c >= 0x3AD && c <= 0x3AF) return c - 0x25;
    if (c == 0x3CC) return 0x38C;
    if (c == 0x3CD || c == 0x3CE) return c - 0x3F;
    if (c >= 0x430 && c <= 0x44F) return c - 0x20;
    if (c >= 0x450 && c <= 0x45F) return c - 0x50;
    return c;
}

bool is_upper_cased(char32_t c) {
    if (c >= 'A' && c <= 'Z') return true;
    if (c < 0x80) return false;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return true;
    if (c == 0x178) return true;
    if (c >= 0x100 && c <= 0x17E && c != 0x131 && c != 0x138 && c != 0x149) {
        return upper_of(c) == c;
    }
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return true;
    if (c == 0x386 || (c >= 0x388 && c <= 0x38A) || c == 0x38C || c == 0x38E || c == 0x38F) return true;
    if (c >= 0x400 && c <= 0x42F) return true;
    return false;
}

bool is_lower_cased(char32_t c) { return upper_of(c) != c; }

bool is_ascii_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_upper_simple(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (std::size_t i = 0; i < utf8.size();) {
        const auto d = decode(utf8, i);
        if (d.valid) {
            encode(upper_of(d.cp), out);
        } else {
            out += utf8[i];
        }
        i += d.len;
    }
    return out;
}

bool is_all_caps(std::string_view utf8) {
    bool any_cased = false;
    for (std::size_t i = 0; i < utf8.size();) {
        const auto d = decode(utf8, i);
        i += d.len;
        if (!d.valid) continue;
        if (is_lower_cased(d.cp)) return false;
        if (is_upper_cased(d.cp)) any_cased = true;
    }
    return any_cased;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_ascii_space(text[b])) ++b;
    while (e > b && is_ascii_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

bool contains_alias(std::string_view text, std::string_view alias) {
    const auto needle = to_upper_simple(normalize_whitespace(alias));
    if (needle.empty()) return false;
    return to_upper_simple(normalize_whitespace(text)).find(needle) != std::string::npos;
}

bool contains_any_alias(std::string_view text, std::span<const std::string> aliases) {
    const auto hay = to_upper_simple(normalize_whitespace(text));
    for (const auto& a : aliases) {
        const auto needle = to_upper_simple(normalize_whitespace(a));
        if (!needle.empty() && hay.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace selfie
