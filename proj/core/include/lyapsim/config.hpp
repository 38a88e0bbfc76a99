#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lyapsim {

/// Line-oriented experiment configuration.
///
///   # comment                  whole-line or after whitespace
///   scenario = sublinear-moments
///   model.alpha = 2.5          dotted keys
///   [batch]                    section header: prefixes the keys below it
///   n_paths = 10000            -> batch.n_paths
///   x0 = 0, 0, 0               lists are comma separated
///
/// Keys are [A-Za-z0-9_-] segments joined by dots. A key may appear once per
/// file; overrides applied with set() replace it. All errors are ConfigError
/// carrying the 1-based line of the offending entry.
class Config {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;  ///< 0 for programmatic overrides
    };

    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    void set_default(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    void erase(const std::string& key);

    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key) const;
    double num(const std::string& key, double fallback) const;
    long integer(const std::string& key, long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> nums(const std::string& key) const;
    std::vector<double> nums(const std::string& key, std::vector<double> fallback) const;

    /// Rejects keys outside `allowed` (exact keys, or "prefix.*" wildcards).
    void check_known(const std::vector<std::string>& allowed) const;

    /// Sorted `key = value` lines; parse(canonical()) reproduces the configuration.
    std::string canonical() const;
    const std::vector<Entry>& entries() const { return entries_; }

private:
    const Entry* find(const std::string& key) const;
    const Entry& require(const std::string& key) const;

    std::vector<Entry> entries_;
};

}  // namespace lyapsim
