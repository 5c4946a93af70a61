#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ucgan::io {

// Flat `key = value` experiment configuration. Every constant the pipeline
// uses has a named key here, so any of them can be overridden from a file or
// a --set flag; the serialized form is stored next to every artifact.
class Config {
public:
    static Config defaults();
    static Config from_file(const std::string& path);

    void apply_override(const std::string& key_eq_value);  // "key=value"
    void apply_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key) const;
    int64_t get_i64(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    double get_f64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_f64_list(const std::string& key) const;  // comma separated
    std::vector<int64_t> get_i64_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    std::string serialize() const;
    void save(const std::string& path) const;

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace ucgan::io
