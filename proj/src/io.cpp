#include "wavefront/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wavefront {

std::string format_num(double v, int digits) {
    digits = std::clamp(digits, 1, 17);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header, int digits)
    : path_(path), cols_(header.size()), digits_(digits),
      out_(path, std::ios::trunc) {
    if (!out_)
        throw ConfigError("cannot open output file " + path_);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_)
        throw DomainError("CsvWriter: row width does not match header in " +
                          path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

const std::vector<SchemaEntry>& config_schema() {
    static const std::vector<SchemaEntry> schema = {
        {"model", "birth", "string", "beverton-holt",
         "birth nonlinearity: beverton-holt | nicholson | pushed"},
        {"model", "r", "double", "2", "growth slope g'(0) of the presets"},
        {"model", "kappa", "double", "1", "positive equilibrium"},
        {"model", "p_over_delta", "double", "5",
         "nicholson ratio p/delta; kappa = ln(p/delta)"},
        {"model", "s", "double", "1", "pushed preset: slope steepening"},
        {"model", "h", "double", "0", "delay (normalized time units)"},

        {"numerics", "x_min", "double", "-80", "left edge of the grid"},
        {"numerics", "x_max", "double", "60", "right edge of the grid"},
        {"numerics", "dx", "double", "0.05", "target grid spacing"},
        {"numerics", "dt", "double", "0.01",
         "target time step; adjusted so the delay is a whole number of steps"},
        {"numerics", "t_end", "double", "40", "simulated time span"},
        {"numerics", "frame", "string", "lab",
         "integration frame: lab | comoving (comoving moves at experiment.c)"},
        {"numerics", "boundary", "string", "auto",
         "auto | exponential | dirichlet | mixed | neumann; auto keeps the "
         "left end tail-transparent, with a neumann right end in the lab "
         "frame and a dirichlet kappa right end in the comoving frame"},
        {"numerics", "bc_left", "double", "0", "left Dirichlet value"},
        {"numerics", "bc_right", "double", "-1",
         "right Dirichlet value; -1 means kappa"},
        {"numerics", "advection", "string", "auto",
         "auto | centered | upwind"},
        {"numerics", "snap_shift", "bool", "true",
         "snap dx so the delayed comoving shift c*h lands on grid nodes"},
        {"numerics", "blowup_factor", "double", "1e6",
         "abort when |field| exceeds this multiple of max(1, kappa)"},

        {"experiment", "kind", "string", "roots",
         "roots | critical-speed | select-speed | simulate | profile | "
         "speed-selection | stability-rate | nicholson-case | "
         "verify-envelope | tail-invariance"},
        {"experiment", "c", "double", "2.5",
         "wave / frame speed under study"},
        {"experiment", "gp0", "double", "0",
         "linear slope for dispersion commands; 0 means take g'(0) from the "
         "model block"},
        {"experiment", "lambda", "double", "0.5",
         "tail decay rate of the initial data, or envelope weight exponent"},
        {"experiment", "amplitude", "double", "1",
         "tail amplitude A of exponential initial data"},
        {"experiment", "ic", "string", "exponential-tail",
         "initial data for simulate: exponential-tail | heaviside | constant"},
        {"experiment", "ic_level", "double", "-1",
         "level of heaviside/constant data; -1 means kappa"},
        {"experiment", "ic_cap", "double", "-1",
         "cap of the exponential tail; -1 means 0.9 kappa"},
        {"experiment", "x0", "double", "0", "heaviside jump location"},
        {"experiment", "q", "double", "0.05",
         "perturbation / envelope amplitude"},
        {"experiment", "gamma", "double", "-1",
         "envelope decay rate; -1 picks the admissible budget"},
        {"experiment", "envelope", "string", "decay",
         "envelope kind for verify-envelope: decay | shift"},
        {"experiment", "weight", "string", "eta",
         "decay-envelope weight: eta (bounded) | xi (unbounded)"},
        {"experiment", "expect", "string", "auto",
         "speed-selection regime to assert: auto | selected | saturated"},
        {"experiment", "seed", "int", "0",
         "seed of the counter-based generator behind random perturbations"},
        {"experiment", "relax_time", "double", "24",
         "dynamical warm-up before the profile polish"},
        {"experiment", "pin_level_frac", "double", "0.5",
         "front pinned where the field crosses this fraction of kappa"},

        {"output", "dir", "string", "out", "output directory"},
        {"output", "precision", "int", "17", "CSV significant digits"},
        {"output", "snapshots", "bool", "true",
         "write snapshots.csv during simulate"},
        {"output", "snapshot_every", "int", "0",
         "steps between snapshots; 0 picks ~100 snapshots per run"},

        {"tolerances", "speed_rel", "double", "0.03",
         "relative error allowed on measured front speeds"},
        {"tolerances", "tail_rel", "double", "0.02",
         "relative error allowed on fitted tail rates"},
        {"tolerances", "ep_residual_frac", "double", "1e-6",
         "profile-equation defect bound, as a fraction of kappa"},
        {"tolerances", "residual_frac", "double", "1e-8",
         "envelope residual tolerance, as a fraction of 1 + kappa"},
        {"tolerances", "squeeze_frac", "double", "1e-3",
         "squeeze violation allowance, as a fraction of q"},
        {"tolerances", "monotone", "double", "1e-10",
         "pointwise tolerance of monotone-evolution comparisons"},
        {"tolerances", "converge", "double", "1e-10",
         "sup-norm budget of the profile polish"},
        {"tolerances", "drift", "double", "0.05",
         "sustained pin drift treated as a wrong speed"},
        {"tolerances", "rsq_min", "double", "0.999",
         "minimum R^2 of accepted tail regressions"},
        {"tolerances", "transient_frac", "double", "0.3",
         "leading fraction of samples dropped by rate fits"},
        {"tolerances", "rate_min", "double", "0",
         "fitted decay rate must exceed this in rate experiments"},

        {"sweep", "vary", "string", "",
         "grid spec: section.key = v1,v2,... ; section.key = a:step:b"},
        {"sweep", "workers", "int", "1", "concurrent sweep points"},
    };
    return schema;
}

void print_schema(std::ostream& os) {
    os << "# configuration schema: section.key  type  default  description\n";
    const char* section = "";
    for (const SchemaEntry& e : config_schema()) {
        if (std::string(section) != e.section) {
            section = e.section;
            os << "\n[" << section << "]\n";
        }
        os << "  " << e.key << "  (" << e.type << ", default: "
           << (*e.preset ? e.preset : "<empty>") << ")\n      " << e.doc
           << "\n";
    }
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

const SchemaEntry& Config::schema_entry(const std::string& section,
                                        const std::string& key, int line) {
    for (const SchemaEntry& e : config_schema())
        if (section == e.section && key == e.key) return e;
    throw ConfigError("unknown configuration key " + section + "." + key,
                      line, section + "." + key);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw, section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ": unterminated section header",
                                  line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ": empty section name", line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ": expected key = value", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(origin + ": key before any [section]", line_no,
                              key);
        if (key.empty())
            throw ConfigError(origin + ": empty key", line_no);
        schema_entry(section, key, line_no);
        const std::string addr = section + "." + key;
        if (cfg.entries_.count(addr))
            throw ConfigError(origin + ": duplicate key " + addr, line_no,
                              addr);
        cfg.entries_[addr] = Entry{value, line_no};
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path, 0, path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    schema_entry(section, key, 0);
    entries_[section + "." + key] = Entry{value, 0};
}

const Config::Entry* Config::find(const std::string& section,
                                  const std::string& key) const {
    auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
    const SchemaEntry& e = schema_entry(section, key, 0);
    const Entry* ent = find(section, key);
    return ent ? ent->value : e.preset;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
    const SchemaEntry& e = schema_entry(section, key, 0);
    const Entry* ent = find(section, key);
    const std::string text = ent ? ent->value : e.preset;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": " + section + "." + key +
                              " wants a number, got '" + text + "'",
                          ent ? ent->line : 0, section + "." + key);
    }
}

long Config::get_int(const std::string& section, const std::string& key) const {
    const SchemaEntry& e = schema_entry(section, key, 0);
    const Entry* ent = find(section, key);
    const std::string text = ent ? ent->value : e.preset;
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": " + section + "." + key +
                              " wants an integer, got '" + text + "'",
                          ent ? ent->line : 0, section + "." + key);
    }
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
    const SchemaEntry& e = schema_entry(section, key, 0);
    const Entry* ent = find(section, key);
    std::string text = ent ? ent->value : e.preset;
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw ConfigError(origin_ + ": " + section + "." + key +
                          " wants a boolean, got '" + text + "'",
                      ent ? ent->line : 0, section + "." + key);
}

void Config::echo(std::ostream& os) const {
    const char* section = "";
    for (const SchemaEntry& e : config_schema()) {
        if (std::string(section) != e.section) {
            section = e.section;
            os << "[" << section << "]\n";
        }
        const Entry* ent = find(e.section, e.key);
        os << e.key << " = " << (ent ? ent->value : e.preset) << "\n";
    }
}

std::string ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec && !std::filesystem::is_directory(path))
        throw ConfigError("cannot create output directory " + path + ": " +
                          ec.message());
    return path;
}

} // namespace wavefront
