#include "lyapsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "lyapsim/errors.hpp"
#include "lyapsim/io.hpp"

namespace lyapsim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool valid_key(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    char prev = 0;
    for (char c : key) {
        if (c == '.' && prev == '.') return false;
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
        prev = c;
    }
    return true;
}

// '#' opens a comment at the start of the line or after whitespace.
std::string_view strip_comment(std::string_view line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace

Config Config::parse(std::string_view text) {
    Config cfg;
    std::string section;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            const auto name = trim(line.substr(1, line.size() - 2));
            if (!name.empty() && !valid_key(name)) throw ConfigError("invalid section name '" + std::string(name) + "'", line_no);
            section = name.empty() ? "" : std::string(name) + ".";
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", line_no);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!valid_key(key)) throw ConfigError("invalid key '" + std::string(key) + "'", line_no);
        const std::string full = section + std::string(key);
        if (const auto* prev = cfg.find(full)) {
            throw ConfigError("duplicate key '" + full + "' (first set on line " + std::to_string(prev->line) + ")",
                              line_no);
        }
        cfg.entries_.push_back({full, std::string(value), line_no});
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse(text);
}

const Config::Entry* Config::find(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.key == key) return &e;
    return nullptr;
}

const Config::Entry& Config::require(const std::string& key) const {
    if (const auto* e = find(key)) return *e;
    throw ConfigError("missing required key '" + key + "'");
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
    for (auto& e : entries_) {
        if (e.key == key) {
            e.value = value;
            e.line = 0;
            return;
        }
    }
    entries_.push_back({key, value, 0});
}

void Config::set_default(const std::string& key, const std::string& value) {
    if (!has(key)) set(key, value);
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

void Config::erase(const std::string& key) {
    std::erase_if(entries_, [&](const Entry& e) { return e.key == key; });
}

std::string Config::str(const std::string& key) const { return require(key).value; }

std::string Config::str(const std::string& key, const std::string& fallback) const {
    const auto* e = find(key);
    return e ? e->value : fallback;
}

double Config::num(const std::string& key) const {
    const auto& e = require(key);
    const auto v = parse_double(e.value);
    if (!v) throw ConfigError("'" + key + "' expects a number, got '" + e.value + "'", e.line);
    return *v;
}

double Config::num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

long Config::integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const auto& e = require(key);
    const double v = num(key);
    if (!(std::abs(v) < 9e15) || v != std::floor(v)) {
        throw ConfigError("'" + key + "' expects an integer, got '" + e.value + "'", e.line);
    }
    return static_cast<long>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + e->value + "'", e->line);
}

std::vector<double> Config::nums(const std::string& key) const {
    const auto& e = require(key);
    std::vector<double> out;
    std::string_view rest = e.value;
    while (true) {
        const auto comma = rest.find(',');
        const auto item = rest.substr(0, comma);
        const auto v = parse_double(item);
        if (!v) throw ConfigError("'" + key + "' expects a comma-separated list of numbers, got '" + e.value + "'", e.line);
        out.push_back(*v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

std::vector<double> Config::nums(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? nums(key) : fallback;
}

void Config::check_known(const std::vector<std::string>& allowed) const {
    for (const auto& e : entries_) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const std::string& a) {
            if (a.size() >= 2 && a.ends_with(".*")) return e.key.starts_with(a.substr(0, a.size() - 1));
            return e.key == a;
        });
        if (!ok) throw ConfigError("unknown key '" + e.key + "'", e.line);
    }
}

std::string Config::canonical() const {
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
    std::string out;
    for (const auto& e : sorted) out += e.key + " = " + e.value + "\n";
    return out;
}

}  // namespace lyapsim
