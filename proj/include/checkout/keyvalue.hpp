#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace checkout {

/// Flat `key=value` text: one pair per line, `#` starts a comment, blank lines skipped.
class KeyValues {
public:
    static KeyValues parse(std::string_view text);
    static KeyValues load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& items() const { return values_; }

    /// Sorted `key=value` lines.
    std::string dump() const;

private:
    std::map<std::string, std::string> values_;
};

// Strict whole-token numeric parsing; nullopt on trailing garbage.
std::optional<long long> parse_int(std::string_view token);
std::optional<double> parse_double(std::string_view token);

/// Shortest decimal representation that round-trips through parse_double.
std::string format_shortest(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace checkout
