#ifndef WAVEFRONT_IO_HPP
#define WAVEFRONT_IO_HPP

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "wavefront/errors.hpp"

namespace wavefront {

/// Shortest decimal rendering that round-trips the double; digits > 17 are
/// clamped to 17.  All CSV cells go through this so reruns are
/// byte-identical.
std::string format_num(double v, int digits = 17);

/// Line-buffered CSV emitter with a fixed header and column count.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header,
              int digits = 17);

    void row(const std::vector<std::string>& cells);

    /// format_num with this writer's digit setting.
    std::string num(double v) const { return format_num(v, digits_); }

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::size_t cols_ = 0;
    int digits_ = 17;
    std::ofstream out_;
};

/// One documented configuration key: flat section.key addressing, a type
/// tag (string | double | int | bool), the default as text, and a one-line
/// description.
struct SchemaEntry {
    const char* section;
    const char* key;
    const char* type;
    const char* preset;
    const char* doc;
};

const std::vector<SchemaEntry>& config_schema();

/// Human-readable schema dump, one line per key: section.key, type,
/// default, doc.
void print_schema(std::ostream& os);

/// Flat sectioned key-value configuration: `[section]` headers, `key =
/// value` entries, `#` comments.  Every key must appear in the schema;
/// unknown keys, duplicate keys, syntax errors and type mismatches raise
/// ConfigError carrying the line and field.  Absent keys fall back to the
/// schema defaults.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text,
                             const std::string& origin = "<args>");

    /// Programmatic override (CLI flags); validated against the schema.
    void set(const std::string& section, const std::string& key,
             const std::string& value);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section,
                           const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    long get_int(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;

    /// Effective configuration (defaults merged with overrides), in schema
    /// order; the sidecar metadata file is this echo.
    void echo(std::ostream& os) const;

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;
    std::string origin_;

    const Entry* find(const std::string& section,
                      const std::string& key) const;
    static const SchemaEntry& schema_entry(const std::string& section,
                                           const std::string& key, int line);
};

/// Creates the directory (and parents) if needed; returns the path.
std::string ensure_dir(const std::string& path);

} // namespace wavefront

#endif
