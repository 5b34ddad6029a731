#pragma once

// Scan result rows and their CSV/JSON serialization. Numbers are written
// with std::to_chars (shortest exact round-trip, locale-independent), so a
// table serializes to byte-identical output regardless of how many workers
// produced it, and parses back to the same doubles.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psr/basis.hpp"

namespace psr {

using nlohmann::json;

struct ResultRow {
    double detuning = 0.0;    // units of Gamma (absolute axis after stitching)
    double delta = 0.0;       // noise frequency, units of Gamma
    double Omega_f = 0.0;
    double C = 0.0;
    double gamma0 = 0.0;
    bool doppler = false;
    double S_min_dB = 0.0;
    double S_max_dB = 0.0;
    double theta_min = 0.0;
    double CN = 0.0;
    double CA_abs = 0.0;
    double CA_arg = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

struct ResultTable {
    std::vector<ResultRow> rows;
    json metadata;   // resolved config, engine version, timestamp, stitch info

    int failed_rows() const {
        int n = 0;
        for (const auto& r : rows) n += r.ok() ? 0 : 1;
        return n;
    }
};

inline constexpr const char* csv_header =
    "detuning_Gamma,delta_Gamma,Omega_f_Gamma,C,gamma0_Gamma,doppler,"
    "S_min_dB,S_max_dB,theta_min_rad,CN,CA_abs,CA_arg,status";

namespace io_detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("CSV: cannot parse number '" + s + "'");
    return v;
}

inline std::string sanitize_status(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace io_detail

inline std::string to_csv(const ResultTable& table) {
    using io_detail::format_double;
    std::string out(csv_header);
    out.push_back('\n');
    for (const auto& r : table.rows) {
        out += format_double(r.detuning);
        out.push_back(',');
        out += format_double(r.delta);
        out.push_back(',');
        out += format_double(r.Omega_f);
        out.push_back(',');
        out += format_double(r.C);
        out.push_back(',');
        out += format_double(r.gamma0);
        out.push_back(',');
        out += r.doppler ? "1" : "0";
        out.push_back(',');
        out += format_double(r.S_min_dB);
        out.push_back(',');
        out += format_double(r.S_max_dB);
        out.push_back(',');
        out += format_double(r.theta_min);
        out.push_back(',');
        out += format_double(r.CN);
        out.push_back(',');
        out += format_double(r.CA_abs);
        out.push_back(',');
        out += format_double(r.CA_arg);
        out.push_back(',');
        out += io_detail::sanitize_status(r.status);
        out.push_back('\n');
    }
    return out;
}

inline void write_csv(const ResultTable& table, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << to_csv(table);
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline ResultTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("CSV: empty file");
    if (line != csv_header) throw std::runtime_error("CSV: unexpected header");

    ResultTable table;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 13) throw std::runtime_error("CSV: malformed row");
        ResultRow r;
        using io_detail::parse_double;
        r.detuning = parse_double(fields[0]);
        r.delta = parse_double(fields[1]);
        r.Omega_f = parse_double(fields[2]);
        r.C = parse_double(fields[3]);
        r.gamma0 = parse_double(fields[4]);
        r.doppler = fields[5] == "1";
        r.S_min_dB = parse_double(fields[6]);
        r.S_max_dB = parse_double(fields[7]);
        r.theta_min = parse_double(fields[8]);
        r.CN = parse_double(fields[9]);
        r.CA_abs = parse_double(fields[10]);
        r.CA_arg = parse_double(fields[11]);
        r.status = fields[12];
        table.rows.push_back(std::move(r));
    }
    return table;
}

inline json row_to_json(const ResultRow& r) {
    return json::array({r.detuning, r.delta, r.Omega_f, r.C, r.gamma0, r.doppler ? 1 : 0,
                        r.S_min_dB, r.S_max_dB, r.theta_min, r.CN, r.CA_abs, r.CA_arg, r.status});
}

inline void write_json(const ResultTable& table, const std::string& path) {
    json doc;
    doc["schema"] = "psrnoise-result/1";
    doc["metadata"] = table.metadata;
    doc["columns"] = json::array();
    {
        std::stringstream ss(csv_header);
        std::string col;
        while (std::getline(ss, col, ',')) doc["columns"].push_back(col);
    }
    doc["rows"] = json::array();
    for (const auto& r : table.rows) doc["rows"].push_back(row_to_json(r));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << doc.dump(1, '\t') << "\n";
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline ResultTable read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    json doc = json::parse(f);
    if (doc.value("schema", "") != "psrnoise-result/1")
        throw std::runtime_error("JSON: not a psrnoise result file");
    ResultTable table;
    table.metadata = doc.value("metadata", json::object());
    for (const auto& jr : doc["rows"]) {
        ResultRow r;
        r.detuning = jr.at(0).get<double>();
        r.delta = jr.at(1).get<double>();
        r.Omega_f = jr.at(2).get<double>();
        r.C = jr.at(3).get<double>();
        r.gamma0 = jr.at(4).get<double>();
        r.doppler = jr.at(5).get<int>() != 0;
        r.S_min_dB = jr.at(6).get<double>();
        r.S_max_dB = jr.at(7).get<double>();
        r.theta_min = jr.at(8).get<double>();
        r.CN = jr.at(9).get<double>();
        r.CA_abs = jr.at(10).get<double>();
        r.CA_arg = jr.at(11).get<double>();
        r.status = jr.at(12).get<std::string>();
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace psr
