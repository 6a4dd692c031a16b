#ifndef AIRTEMP_IO_CONFIG_FILE_HPP
#define AIRTEMP_IO_CONFIG_FILE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace airtemp::io {

/// Line-based `key = value` text with `#` comments. Keys keep insertion
/// order on save so rewrites are byte-stable.
class KeyValueFile {
public:
    KeyValueFile() = default;

    static KeyValueFile load(const std::string& path);
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    void save(const std::string& path) const;

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const; // DataError when missing
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, std::int64_t value);

    const std::vector<std::string>& keys() const { return order_; }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

} // namespace airtemp::io

#endif
