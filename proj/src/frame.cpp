#include "hvacmpc/frame.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hvacmpc/errors.hpp"
#include "hvacmpc/timeutil.hpp"

namespace hvacmpc {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
    double v = 0.0;
    const char* first = cell.c_str();
    const char* last = first + cell.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw Error(ErrorKind::ingestion,
                    "row " + std::to_string(row) + ", column '" + col +
                        "': cannot parse '" + cell + "' as a number");
    }
    return v;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

void TimeSeriesFrame::validate() const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const FrameRow& r = rows_[i];
        if (i > 0 && r.timestamp - rows_[i - 1].timestamp != kFramePeriodSec) {
            throw Error(ErrorKind::ingestion,
                        "row " + std::to_string(i) +
                            ": timestamps must increase by exactly " +
                            std::to_string(kFramePeriodSec) + " s");
        }
        if (r.comp_mode != 0 && r.comp_mode != 1) {
            throw Error(ErrorKind::ingestion,
                        "row " + std::to_string(i) + ": comp_mode must be 0 or 1");
        }
        auto finite = [&](double v, const char* col) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::ingestion, "row " + std::to_string(i) +
                                                      ", column '" + col +
                                                      "': non-finite value");
            }
        };
        finite(r.t_out, "t_out");
        finite(r.humidity, "humidity");
        finite(r.solar, "solar");
        finite(r.energy, "energy");
        for (int j = 0; j < kZones; ++j) {
            finite(r.t_zone[j], "t_zone");
            finite(r.sp_zone[j], "sp_zone");
        }
    }
}

std::string frame_csv_header() {
    std::string h = "timestamp,t_out,humidity,solar";
    for (int j = 1; j <= kZones; ++j) h += ",t_zone_" + std::to_string(j);
    for (int j = 1; j <= kZones; ++j) h += ",sp_zone_" + std::to_string(j);
    h += ",comp_mode,energy";
    return h;
}

TimeSeriesFrame load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::ingestion, "'" + path + "': empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != frame_csv_header()) {
        throw Error(ErrorKind::ingestion,
                    "'" + path + "': header does not match the frame schema");
    }

    const std::size_t ncols = 4 + 2 * kZones + 2;
    TimeSeriesFrame frame;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != ncols) {
            throw Error(ErrorKind::ingestion,
                        "row " + std::to_string(rowno) + ": expected " +
                            std::to_string(ncols) + " cells, got " +
                            std::to_string(cells.size()));
        }
        FrameRow r;
        r.timestamp = parse_iso8601_utc(cells[0]);
        r.t_out = parse_double(cells[1], rowno, "t_out");
        r.humidity = parse_double(cells[2], rowno, "humidity");
        r.solar = parse_double(cells[3], rowno, "solar");
        for (int j = 0; j < kZones; ++j) {
            r.t_zone[j] = parse_double(cells[4 + j], rowno, "t_zone_" + std::to_string(j + 1));
        }
        for (int j = 0; j < kZones; ++j) {
            r.sp_zone[j] =
                parse_double(cells[4 + kZones + j], rowno, "sp_zone_" + std::to_string(j + 1));
        }
        const double comp = parse_double(cells[4 + 2 * kZones], rowno, "comp_mode");
        r.comp_mode = static_cast<int>(comp);
        r.energy = parse_double(cells[5 + 2 * kZones], rowno, "energy");
        frame.push_back(r);
        ++rowno;
    }
    frame.validate();
    return frame;
}

void write_csv(const TimeSeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << frame_csv_header() << '\n';
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const FrameRow& r = frame[i];
        out << format_iso8601_utc(r.timestamp) << ',' << fmt_double(r.t_out) << ','
            << fmt_double(r.humidity) << ',' << fmt_double(r.solar);
        for (int j = 0; j < kZones; ++j) out << ',' << fmt_double(r.t_zone[j]);
        for (int j = 0; j < kZones; ++j) out << ',' << fmt_double(r.sp_zone[j]);
        out << ',' << r.comp_mode << ',' << fmt_double(r.energy) << '\n';
    }
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

} // namespace hvacmpc
