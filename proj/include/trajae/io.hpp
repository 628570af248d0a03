#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trajae/error.hpp"
#include "trajae/trajectory.hpp"

namespace trajae::io {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out)
{
    s = trim(s);
    if (s.empty())
        return false;
    // from_chars rejects a leading '+'
    if (s.front() == '+')
        s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline const char* column_names(Mode mode)
{
    return mode == Mode::Spatial3D ? "c0,c1,c2" : "lon,lat,t";
}

inline void write_trajectories(std::ostream& os, const std::vector<Trajectory>& ts, Mode mode)
{
    os << "id," << column_names(mode) << '\n';
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto& t = ts[k];
        const std::string id = t.id().empty() ? std::to_string(k) : t.id();
        for (const auto& p : t)
            os << id << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
               << format_double(p[2]) << '\n';
    }
}

struct TrajectoryFile {
    Mode mode = Mode::Spatial3D;
    std::vector<Trajectory> trajectories;
};

/// Reads the trajectory CSV. The header decides the mode; the id column is
/// optional (absent means a single trajectory). Rows sharing an id are
/// grouped in order of first appearance. Set `validate` to false for
/// reconstructions whose timestamps may be unordered.
inline TrajectoryFile read_trajectories(std::istream& is, bool validate = true)
{
    std::string line;
    if (!std::getline(is, line))
        fail(Errc::format, "trajectory file is empty");
    const auto header = split_fields(trim(line));
    std::size_t off = 0;
    if (!header.empty() && trim(header[0]) == "id")
        off = 1;
    if (header.size() != off + 3)
        fail(Errc::format, "trajectory header must have 3 coordinate columns");
    std::string cols;
    for (std::size_t i = off; i < header.size(); ++i)
        cols += std::string(trim(header[i])) + (i + 1 < header.size() ? "," : "");

    TrajectoryFile file;
    if (cols == "c0,c1,c2")
        file.mode = Mode::Spatial3D;
    else if (cols == "lon,lat,t")
        file.mode = Mode::GeoTemporal;
    else
        fail(Errc::format, "unknown trajectory columns '" + cols + "'");

    std::vector<std::string> order;
    std::map<std::string, std::vector<TrajPoint>> groups;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(trim(line));
        if (f.size() != off + 3)
            fail(Errc::format, "line " + std::to_string(lineno) + ": wrong field count");
        const std::string id = off ? std::string(trim(f[0])) : std::string("0");
        TrajPoint p;
        for (std::size_t d = 0; d < 3; ++d)
            if (!parse_double(f[off + d], p[d]))
                fail(Errc::format, "line " + std::to_string(lineno) + ": bad number");
        auto [it, inserted] = groups.try_emplace(id);
        if (inserted)
            order.push_back(id);
        it->second.push_back(p);
    }
    for (const auto& id : order) {
        auto& pts = groups[id];
        file.trajectories.push_back(validate ? Trajectory(file.mode, std::move(pts), id)
                                             : Trajectory::unchecked(file.mode, std::move(pts), id));
    }
    return file;
}

inline TrajectoryFile read_trajectories_file(const std::string& path, bool validate = true)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::io, "cannot open " + path);
    return read_trajectories(in, validate);
}

inline void write_trajectories_file(const std::string& path, const std::vector<Trajectory>& ts,
                                    Mode mode)
{
    std::ofstream out(path);
    if (!out)
        fail(Errc::io, "cannot write " + path);
    write_trajectories(out, ts, mode);
    if (!out)
        fail(Errc::io, "write failed for " + path);
}

} // namespace trajae::io
