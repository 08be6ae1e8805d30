#include "deeptrace/util.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace deeptrace {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // swallow leading whitespace
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            out.push_back(c);
            in_ws = false;
        }
    }
    return out;
}

std::optional<Span> find_normalized(std::string_view haystack, std::string_view needle,
                                    std::size_t from) {
    const std::string target = collapse_whitespace(needle);
    if (target.empty()) return std::nullopt;

    for (std::size_t start = from; start < haystack.size(); ++start) {
        if (is_space(haystack[start])) continue;
        if (haystack[start] != target[0]) continue;

        // Walk both strings, treating any whitespace run as a single space.
        std::size_t h = start;
        std::size_t t = 0;
        std::size_t match_end = 0;
        while (t < target.size()) {
            if (h >= haystack.size()) break;
            if (target[t] == ' ') {
                if (!is_space(haystack[h])) break;
                while (h < haystack.size() && is_space(haystack[h])) ++h;
                ++t;
            } else if (haystack[h] == target[t]) {
                ++h;
                ++t;
                match_end = h;
            } else if (is_space(haystack[h])) {
                break;  // haystack has whitespace where the needle has none
            } else {
                break;
            }
        }
        if (t == target.size()) return Span{start, match_end};
    }
    return std::nullopt;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    static std::atomic<std::uint64_t> counter{0};
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() /
                         (target.filename().string() + ".tmp." + std::to_string(::getpid()) +
                          "." + std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string sanitize_filename(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? std::string("_") : out;
}

std::string ParsedUrl::origin() const {
    std::string out = scheme + "://" + host;
    if (port != 0) out += ":" + std::to_string(port);
    return out;
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
    ParsedUrl p;
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return std::nullopt;
    p.scheme = to_lower(url.substr(0, scheme_end));
    if (p.scheme != "http" && p.scheme != "https") return std::nullopt;

    std::string_view rest = url.substr(scheme_end + 3);
    std::size_t path_start = rest.find('/');
    std::string_view authority =
        path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
    p.path = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));

    if (authority.empty()) return std::nullopt;
    std::size_t colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        std::string_view port_sv = authority.substr(colon + 1);
        int port = 0;
        for (char c : port_sv) {
            if (c < '0' || c > '9') return std::nullopt;
            port = port * 10 + (c - '0');
            if (port > 65535) return std::nullopt;
        }
        if (port_sv.empty()) return std::nullopt;
        p.port = port;
        p.host = std::string(authority.substr(0, colon));
    } else {
        p.host = std::string(authority);
    }
    if (p.host.empty()) return std::nullopt;
    return p;
}

}  // namespace deeptrace
