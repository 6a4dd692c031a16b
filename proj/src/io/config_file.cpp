#include "airtemp/io/config_file.hpp"

#include <cstdio>
#include <sstream>

#include "airtemp/core/errors.hpp"
#include "airtemp/io/grid_io.hpp"

namespace airtemp::io {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValueFile KeyValueFile::load(const std::string& path) {
    return parse(read_file_bytes(path), path);
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        kv.set(key, value);
    }
    return kv;
}

void KeyValueFile::save(const std::string& path) const {
    std::string out;
    for (const std::string& key : order_) {
        out += key;
        out += " = ";
        out += values_.at(key);
        out += "\n";
    }
    atomic_write_file(path, out);
}

bool KeyValueFile::has(const std::string& key) const {
    return values_.count(key) != 0;
}

const std::string& KeyValueFile::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw DataError("missing config key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' has non-numeric value '" + s + "'");
    }
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueFile::get_int(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' has non-integer value '" + s + "'");
    }
}

std::int64_t KeyValueFile::get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

void KeyValueFile::set_double(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    set(key, buf);
}

void KeyValueFile::set_int(const std::string& key, std::int64_t value) {
    set(key, std::to_string(value));
}

} // namespace airtemp::io
