#include "radiomap/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace radiomap {

namespace {

constexpr const char* kMeasurementHeader = "xu,yu,zu,xd,yd,zd,rss_db";
constexpr const char* kResidualHeader = "xu,yu,zu,xd,yd,zd,residual_db";

void strip_carriage_return(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_fields(const std::string& line) {
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

double parse_field(const std::string& field, const std::string& path, std::size_t line_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": expected a number, got \"" << field << "\"";
        throw DataError(msg.str());
    }
    return value;
}

std::vector<double> parse_row(const std::string& line, std::size_t expected,
                              const std::string& path, std::size_t line_no) {
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != expected) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": expected " << expected << " fields, got "
            << fields.size();
        throw DataError(msg.str());
    }
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i)
        values[i] = parse_field(fields[i], path, line_no);
    return values;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    return out;
}

std::string read_header(std::ifstream& in, const std::string& path, const std::string& expected) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ":1: missing header row");
    strip_carriage_return(line);
    if (line != expected)
        throw DataError(path + ":1: header must be \"" + expected + "\", got \"" + line + "\"");
    return line;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw DataError(path + ": write failed");
}

}  // namespace

std::string format_double(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    if (ec != std::errc()) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", v);
        return buffer;
    }
    return std::string(buffer, ptr);
}

Dataset read_measurements_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    read_header(in, path, kMeasurementHeader);
    Dataset data;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_carriage_return(line);
        if (line.empty()) continue;
        const std::vector<double> v = parse_row(line, 7, path, line_no);
        Measurement rec;
        rec.link.user = {v[0], v[1], v[2]};
        rec.link.aerial = {v[3], v[4], v[5]};
        rec.rss = v[6];
        data.records.push_back(rec);
    }
    return data;
}

void write_measurements_csv(const std::string& path, const Dataset& data) {
    std::ofstream out = open_output(path);
    out << kMeasurementHeader << "\n";
    for (const Measurement& rec : data.records) {
        out << format_double(rec.link.user.x) << ',' << format_double(rec.link.user.y) << ','
            << format_double(rec.link.user.z) << ',' << format_double(rec.link.aerial.x) << ','
            << format_double(rec.link.aerial.y) << ',' << format_double(rec.link.aerial.z) << ','
            << format_double(rec.rss) << "\n";
    }
    finish_write(out, path);
}

std::vector<double> read_obstacles_csv(const std::string& path, int cell_count, int classes) {
    std::ifstream in = open_input(path);
    std::string expected = "cell";
    for (int k = 1; k <= classes; ++k) expected += ",h_" + std::to_string(k);
    read_header(in, path, expected);

    std::vector<double> heights(static_cast<std::size_t>(cell_count) *
                                static_cast<std::size_t>(classes));
    std::string line;
    std::size_t line_no = 1;
    int next_cell = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_carriage_return(line);
        if (line.empty()) continue;
        const std::vector<double> v =
            parse_row(line, static_cast<std::size_t>(classes) + 1, path, line_no);
        if (v[0] != static_cast<double>(next_cell)) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected cell " << next_cell << ", got "
                << format_double(v[0]);
            throw DataError(msg.str());
        }
        for (int k = 0; k < classes; ++k)
            heights[static_cast<std::size_t>(next_cell) * classes + static_cast<std::size_t>(k)] =
                v[static_cast<std::size_t>(k) + 1];
        ++next_cell;
    }
    if (next_cell != cell_count) {
        std::ostringstream msg;
        msg << path << ": expected " << cell_count << " cell rows, got " << next_cell;
        throw DataError(msg.str());
    }
    return heights;
}

void write_obstacles_csv(const std::string& path, const ObstacleMap& map) {
    std::ofstream out = open_output(path);
    out << "cell";
    for (int k = 1; k <= map.classes(); ++k) out << ",h_" << k;
    out << "\n";
    for (int m = 0; m < map.grid().cell_count(); ++m) {
        out << m;
        for (int k = 1; k <= map.classes(); ++k) out << ',' << format_double(map.height(m, k));
        out << "\n";
    }
    finish_write(out, path);
}

std::vector<ResidualRecord> read_residuals_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    read_header(in, path, kResidualHeader);
    std::vector<ResidualRecord> records;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_carriage_return(line);
        if (line.empty()) continue;
        const std::vector<double> v = parse_row(line, 7, path, line_no);
        ResidualRecord rec;
        rec.link.user = {v[0], v[1], v[2]};
        rec.link.aerial = {v[3], v[4], v[5]};
        rec.value = v[6];
        records.push_back(rec);
    }
    return records;
}

void write_residuals_csv(const std::string& path, const std::vector<ResidualRecord>& records) {
    std::ofstream out = open_output(path);
    out << kResidualHeader << "\n";
    for (const ResidualRecord& rec : records) {
        out << format_double(rec.link.user.x) << ',' << format_double(rec.link.user.y) << ','
            << format_double(rec.link.user.z) << ',' << format_double(rec.link.aerial.x) << ','
            << format_double(rec.link.aerial.y) << ',' << format_double(rec.link.aerial.z) << ','
            << format_double(rec.value) << "\n";
    }
    finish_write(out, path);
}

}  // namespace radiomap
