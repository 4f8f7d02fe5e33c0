#pragma once

#include "gazeaudit/saliency_map.hpp"
#include "gazeaudit/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gazeaudit {

namespace fs = std::filesystem;

// ---- CSV ----------------------------------------------------------------

/// Header-addressed CSV table. Columns are matched by name; extra columns
/// are ignored. Rows keep their 1-based source line numbers for diagnostics.
class CsvTable {
public:
    static CsvTable parse(std::string_view text, const std::string& source);
    static CsvTable read(const fs::path& path);

    /// Throws Error(Parse) naming the column when absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;

    std::size_t rows() const { return rows_.size(); }
    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    std::size_t line(std::size_t row) const { return lines_[row]; }
    const std::string& source() const { return source_; }

    double number(std::size_t row, std::size_t col) const;
    std::int64_t integer(std::size_t row, std::size_t col) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

/// Header `frame,t_sec,speed_kmh,lat,lon,heading_deg`. Frames must be
/// strictly increasing. Empty lat/lon/heading cells read as NaN (GPS
/// dropouts); speed is mandatory.
std::vector<TelemetrySample> read_telemetry_csv(const fs::path& path);
std::vector<TelemetrySample> parse_telemetry_csv(std::string_view text, const std::string& source);

/// Header `frame,x_px,y_px,event`. Frames must be non-decreasing.
std::vector<GazeSample> read_gaze_csv(const fs::path& path);
std::vector<GazeSample> parse_gaze_csv(std::string_view text, const std::string& source);

// ---- Saliency maps --------------------------------------------------------

/// SMAP: "SMAP" | width u32le | height u32le | reserved u32le (0) |
/// width*height float32le row-major.
std::string encode_smap(const SaliencyMap& map);
SaliencyMap decode_smap(std::string_view bytes, const std::string& source);

/// Dispatches on content: SMAP magic or PNG signature. PNG import rescales
/// to [0,1] by the maximum value (all-zero images stay all-zero).
SaliencyMap read_saliency_map(const fs::path& path);
/// Writes SMAP atomically (values rounded to float32).
void write_saliency_map(const SaliencyMap& map, const fs::path& path);

struct GrayImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int bit_depth = 8; // 8 or 16
    std::vector<std::uint16_t> pixels;
};

/// Any PNG converted to single-channel gray at 8 or 16 bits.
GrayImage read_png_gray(const fs::path& path);
std::string encode_png_gray(const GrayImage& image);
void write_png_gray(const GrayImage& image, const fs::path& path);

// ---- Files -----------------------------------------------------------------

std::string read_file(const fs::path& path);
/// temp file in the destination directory + fsync + rename.
void write_file_atomic(const fs::path& path, std::string_view bytes);

/// Files in `dir` whose stem is a decimal frame number, keyed by that number.
std::map<FrameIndex, fs::path> list_numbered_files(const fs::path& dir);

std::string format_double(double v);

} // namespace gazeaudit
