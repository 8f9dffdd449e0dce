#ifndef HVACMPC_FRAME_HPP
#define HVACMPC_FRAME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hvacmpc {

inline constexpr int kZones = 10;
inline constexpr std::int64_t kFramePeriodSec = 120; // Ts

/// One record per sampling period Ts. Column semantics, for the row with
/// timestamp tau_k:
///   t_out/humidity/solar  sampled at tau_k
///   t_zone_j              measured at tau_k, quantized to 0.1 degC
///   sp_zone_j             setpoint commanded at tau_k, active over
///                         (tau_k, tau_k + Ts]
///   comp_mode             compressor state observed at tau_k
///   energy                Wh consumed over (tau_k - Ts, tau_k]
struct FrameRow {
    std::int64_t timestamp = 0;
    double t_out = 0.0;
    double humidity = 0.0;
    double solar = 0.0;
    std::array<double, kZones> t_zone{};
    std::array<double, kZones> sp_zone{};
    int comp_mode = 0;
    double energy = 0.0;

    bool operator==(const FrameRow&) const = default;
};

class TimeSeriesFrame {
public:
    TimeSeriesFrame() = default;
    explicit TimeSeriesFrame(std::vector<FrameRow> rows) : rows_(std::move(rows)) {}

    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    const FrameRow& operator[](std::size_t i) const { return rows_[i]; }
    FrameRow& operator[](std::size_t i) { return rows_[i]; }
    const std::vector<FrameRow>& rows() const { return rows_; }

    void push_back(const FrameRow& r) { rows_.push_back(r); }
    void reserve(std::size_t n) { rows_.reserve(n); }

    /// Strictly increasing timestamps with constant Ts spacing, finite cells,
    /// comp_mode in {0,1}. Throws Error(ingestion) naming the offending row.
    void validate() const;

    bool operator==(const TimeSeriesFrame&) const = default;

private:
    std::vector<FrameRow> rows_;
};

/// The exact CSV header, shared by load_csv/write_csv.
std::string frame_csv_header();

/// Reads a frame CSV; header must match frame_csv_header() exactly and the
/// timestamps must be uniform at Ts. Errors name the row/column.
TimeSeriesFrame load_csv(const std::string& path);

/// Writes a frame CSV; floating cells use shortest round-trip formatting so
/// that write-then-load is value-identical.
void write_csv(const TimeSeriesFrame& frame, const std::string& path);

} // namespace hvacmpc

#endif
