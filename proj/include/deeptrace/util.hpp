#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deeptrace {

/// Half-open character range [begin, end) into some text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool contains(std::size_t pos) const { return pos >= begin && pos < end; }
    bool operator==(const Span&) const = default;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Finds `needle` in `haystack` under whitespace-collapsed, case-sensitive
/// comparison, searching no earlier than `from`. Returns the span in the
/// original (uncollapsed) haystack.
std::optional<Span> find_normalized(std::string_view haystack, std::string_view needle,
                                    std::size_t from);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
/// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, std::string_view content);

/// Filesystem-safe name: everything outside [A-Za-z0-9._-] becomes '_'.
std::string sanitize_filename(std::string_view name);

struct ParsedUrl {
    std::string scheme;   // "http" or "https"
    std::string host;
    int port = 0;         // 0 = scheme default
    std::string path;     // includes leading '/', may carry a query string
    std::string origin() const;  // scheme://host[:port]
};

std::optional<ParsedUrl> parse_url(std::string_view url);

}  // namespace deeptrace
