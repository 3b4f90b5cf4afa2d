#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatcn/data.hpp"
#include "hatcn/errors.hpp"

// Dataset file formats. CSV comes in two layouts, told apart by header:
//   long: series_id,subject_id,label,t,value      (one row per sample)
//   wide: series_id,subject_id,label,values       (samples fill the rest of the row)
// Fields are comma-separated without quoting; ids must not contain commas.
// Annotations travel in a JSON sidecar.

namespace hatcn {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_double(const std::string& field, std::size_t line_no,
                           const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": expected a number, got '" +
                        field + "'");
    }
}

inline int parse_label(const std::string& field, std::size_t line_no,
                       const std::string& path) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw DataError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                    field + "'");
}

inline void format_value(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace detail

inline constexpr const char* kLongHeader = "series_id,subject_id,label,t,value";
inline constexpr const char* kWideHeader = "series_id,subject_id,label,values";

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

inline void write_series_csv_long(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    std::string buf = kLongHeader;
    buf += '\n';
    for (const auto& s : d.series) {
        for (std::size_t t = 0; t < s.values.size(); ++t) {
            buf += s.id;
            buf += ',';
            buf += s.subject_id;
            buf += ',';
            buf += std::to_string(s.label);
            buf += ',';
            buf += std::to_string(t);
            buf += ',';
            detail::format_value(buf, s.values[t]);
            buf += '\n';
        }
        out << buf;
        buf.clear();
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

inline void write_series_csv_wide(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    std::string buf = kWideHeader;
    buf += '\n';
    for (const auto& s : d.series) {
        buf += s.id;
        buf += ',';
        buf += s.subject_id;
        buf += ',';
        buf += std::to_string(s.label);
        for (double v : s.values) {
            buf += ',';
            detail::format_value(buf, v);
        }
        buf += '\n';
        out << buf;
        buf.clear();
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// CSV reader (layout auto-detected from the header)
// ---------------------------------------------------------------------------

inline Dataset read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    Dataset d;
    std::size_t line_no = 1;
    if (line == kLongHeader) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto f = detail::split_csv_line(line);
            if (f.size() != 5)
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": expected 5 fields, got " + std::to_string(f.size()));
            if (d.series.empty() || d.series.back().id != f[0]) {
                Series s;
                s.id = f[0];
                s.subject_id = f[1];
                s.label = detail::parse_label(f[2], line_no, path);
                d.series.push_back(std::move(s));
            }
            Series& s = d.series.back();
            const double t = detail::parse_double(f[3], line_no, path);
            if (t != static_cast<double>(s.values.size()))
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": sample index out of order for series '" + f[0] + "'");
            s.values.push_back(detail::parse_double(f[4], line_no, path));
        }
    } else if (line == kWideHeader) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto f = detail::split_csv_line(line);
            if (f.size() < 4)
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": wide row needs at least one sample");
            Series s;
            s.id = f[0];
            s.subject_id = f[1];
            s.label = detail::parse_label(f[2], line_no, path);
            s.values.reserve(f.size() - 3);
            for (std::size_t i = 3; i < f.size(); ++i)
                s.values.push_back(detail::parse_double(f[i], line_no, path));
            d.series.push_back(std::move(s));
        }
    } else {
        throw DataError(path + ": unrecognized header; expected '" +
                        std::string(kLongHeader) + "' or '" + kWideHeader + "'");
    }
    if (d.series.empty()) throw DataError(path + ": no series found");
    return d;
}

// ---------------------------------------------------------------------------
// Annotation sidecar
// ---------------------------------------------------------------------------

inline void write_annotations(const std::string& path,
                              const std::vector<Annotation>& annotations) {
    nlohmann::json root;
    root["annotations"] = nlohmann::json::array();
    for (const auto& a : annotations)
        root["annotations"].push_back({{"series_id", a.series_id},
                                       {"relax_start", a.relax_start},
                                       {"relax_end", a.relax_end},
                                       {"tau", a.tau}});
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << root.dump(2) << '\n';
    if (!out) throw DataError("failed writing '" + path + "'");
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    nlohmann::json root;
    try {
        in >> root;
    } catch (const std::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    if (!root.contains("annotations") || !root["annotations"].is_array())
        throw DataError(path + ": missing 'annotations' array");
    std::vector<Annotation> out;
    for (const auto& j : root["annotations"]) {
        Annotation a;
        try {
            a.series_id = j.at("series_id").get<std::string>();
            a.relax_start = j.at("relax_start").get<std::size_t>();
            a.relax_end = j.at("relax_end").get<std::size_t>();
            a.tau = j.at("tau").get<double>();
        } catch (const std::exception& e) {
            throw DataError(path + ": malformed annotation: " + e.what());
        }
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace hatcn
