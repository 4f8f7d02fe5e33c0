#include "gazeaudit/io.hpp"

#include "gazeaudit/error.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <sys/stat.h>
#include <fcntl.h>
#include <unistd.h>

namespace gazeaudit {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r'))
        ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
        --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void row_error(const CsvTable& t, std::size_t row, const std::string& msg) {
    fail(ErrorCode::Parse, t.source() + ":" + std::to_string(t.line(row)) + ": " + msg);
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= std::uint32_t{static_cast<unsigned char>(b[off + i])} << (8 * i);
    return v;
}

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

bool is_png(std::string_view bytes) {
    return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

struct PngReadBuffer {
    std::string_view bytes;
    std::size_t offset = 0;
};

void png_read_from_buffer(png_structp png, png_bytep out, png_size_t n) {
    auto* buf = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
    if (buf->offset + n > buf->bytes.size())
        png_error(png, "truncated PNG stream");
    std::memcpy(out, buf->bytes.data() + buf->offset, n);
    buf->offset += n;
}

void png_error_to_exception(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err)
        *err = msg;
    png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

GrayImage decode_png_gray(std::string_view bytes, const std::string& source) {
    if (!is_png(bytes))
        fail(ErrorCode::Parse, source + ": not a PNG file");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error,
                                             png_error_to_exception, png_warning_ignore);
    if (!png)
        fail(ErrorCode::Io, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorCode::Io, "libpng initialisation failed");
    }
    PngReadBuffer buffer{bytes, 0};
    GrayImage image;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> raw;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Parse, source + ": PNG decode failed: " + error);
    }
    png_set_read_fn(png, &buffer, png_read_from_buffer);
    png_read_info(png, info);

    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);

    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    image.width = width;
    image.height = height;
    image.bit_depth = depth == 16 ? 16 : 8;
    image.pixels.resize(std::size_t{width} * height);
    for (png_uint_32 y = 0; y < height; ++y) {
        const unsigned char* row = rows[y];
        for (png_uint_32 x = 0; x < width; ++x) {
            std::uint16_t v = 0;
            if (image.bit_depth == 16)
                v = static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
            else
                v = row[x];
            image.pixels[std::size_t{y} * width + x] = v;
        }
    }
    return image;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), n);
}

void png_flush_noop(png_structp) {}

} // namespace

// ---- CsvTable ---------------------------------------------------------------

CsvTable CsvTable::parse(std::string_view text, const std::string& source) {
    CsvTable t;
    t.source_ = source;
    std::size_t pos = 0, line_no = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        ++line_no;
        pos = nl + 1;
        if (trim(line).empty()) {
            if (nl == text.size())
                break;
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
                fields[0] = fields[0].substr(3);
            t.header_ = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != t.header_.size())
                fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                           std::to_string(t.header_.size()) + " fields, got " +
                                           std::to_string(fields.size()));
            t.rows_.push_back(std::move(fields));
            t.lines_.push_back(line_no);
        }
        if (nl == text.size())
            break;
    }
    if (!have_header)
        fail(ErrorCode::Parse, source + ": missing header row");
    return t;
}

CsvTable CsvTable::read(const fs::path& path) { return parse(read_file(path), path.string()); }

bool CsvTable::has_column(std::string_view name) const {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t CsvTable::column(std::string_view name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end())
        fail(ErrorCode::Parse, source_ + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header_.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty())
        row_error(*this, row, "cannot parse '" + s + "' as a number in column '" + header_[col] + "'");
    return v;
}

std::int64_t CsvTable::integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty())
        row_error(*this, row, "cannot parse '" + s + "' as an integer in column '" + header_[col] + "'");
    return v;
}

// ---- Telemetry / gaze ------------------------------------------------------

std::vector<TelemetrySample> parse_telemetry_csv(std::string_view text, const std::string& source) {
    const auto t = CsvTable::parse(text, source);
    const auto c_frame = t.column("frame"), c_t = t.column("t_sec"), c_speed = t.column("speed_kmh"),
               c_lat = t.column("lat"), c_lon = t.column("lon"), c_head = t.column("heading_deg");
    auto optional_number = [&](std::size_t r, std::size_t c) {
        return t.cell(r, c).empty() ? std::numeric_limits<double>::quiet_NaN() : t.number(r, c);
    };
    std::vector<TelemetrySample> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        TelemetrySample s;
        s.frame = t.integer(r, c_frame);
        s.t_sec = t.number(r, c_t);
        s.speed_kmh = t.number(r, c_speed);
        s.lat = optional_number(r, c_lat);
        s.lon = optional_number(r, c_lon);
        s.heading_deg = optional_number(r, c_head);
        if (!std::isfinite(s.t_sec) || !std::isfinite(s.speed_kmh))
            row_error(t, r, "non-finite time or speed");
        if (!std::isnan(s.lat) && (s.lat < -90.0 || s.lat > 90.0))
            row_error(t, r, "latitude out of range");
        if (!std::isnan(s.lon) && (s.lon < -180.0 || s.lon > 180.0))
            row_error(t, r, "longitude out of range");
        if (!std::isnan(s.heading_deg)) {
            s.heading_deg = std::fmod(s.heading_deg, 360.0);
            if (s.heading_deg < 0.0)
                s.heading_deg += 360.0;
        }
        if (!out.empty() && s.frame <= out.back().frame)
            row_error(t, r, "frames must be strictly increasing (frame " + std::to_string(s.frame) +
                                " after " + std::to_string(out.back().frame) + ")");
        out.push_back(s);
    }
    return out;
}

std::vector<TelemetrySample> read_telemetry_csv(const fs::path& path) {
    return parse_telemetry_csv(read_file(path), path.string());
}

std::vector<GazeSample> parse_gaze_csv(std::string_view text, const std::string& source) {
    const auto t = CsvTable::parse(text, source);
    const auto c_frame = t.column("frame"), c_x = t.column("x_px"), c_y = t.column("y_px"),
               c_event = t.column("event");
    std::vector<GazeSample> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        GazeSample g;
        g.frame = t.integer(r, c_frame);
        try {
            g.event = parse_gaze_event(t.cell(r, c_event));
        } catch (const Error& e) {
            row_error(t, r, e.what());
        }
        // Blinks carry no position; accept empty coordinates as NaN.
        g.x = t.cell(r, c_x).empty() ? std::numeric_limits<double>::quiet_NaN() : t.number(r, c_x);
        g.y = t.cell(r, c_y).empty() ? std::numeric_limits<double>::quiet_NaN() : t.number(r, c_y);
        if (g.event == GazeEvent::Fixation && (!std::isfinite(g.x) || !std::isfinite(g.y)))
            row_error(t, r, "fixation without finite coordinates");
        if (!out.empty() && g.frame < out.back().frame)
            row_error(t, r, "frames must be non-decreasing");
        out.push_back(g);
    }
    return out;
}

std::vector<GazeSample> read_gaze_csv(const fs::path& path) {
    return parse_gaze_csv(read_file(path), path.string());
}

// ---- SMAP --------------------------------------------------------------------

std::string encode_smap(const SaliencyMap& map) {
    if (map.empty())
        fail(ErrorCode::InvalidArgument, "zero-size saliency map");
    std::string out;
    out.reserve(16 + map.size() * 4);
    out.append("SMAP", 4);
    put_u32(out, map.width());
    put_u32(out, map.height());
    put_u32(out, 0);
    for (double v : map.values())
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

SaliencyMap decode_smap(std::string_view bytes, const std::string& source) {
    if (bytes.size() < 16 || bytes.substr(0, 4) != "SMAP")
        fail(ErrorCode::Parse, source + ": SMAP header mismatch");
    const auto w = get_u32(bytes, 4), h = get_u32(bytes, 8), reserved = get_u32(bytes, 12);
    if (reserved != 0)
        fail(ErrorCode::Parse, source + ": SMAP reserved field must be 0");
    if (w == 0 || h == 0)
        fail(ErrorCode::Parse, source + ": zero-size saliency map");
    const std::uint64_t n = std::uint64_t{w} * h;
    if (n > (std::uint64_t{1} << 31) || (bytes.size() - 16) / 4 < n)
        fail(ErrorCode::Parse, source + ": SMAP size overflow or truncated payload");
    if (bytes.size() - 16 != n * 4)
        fail(ErrorCode::Parse, source + ": SMAP payload length does not match header");
    std::vector<double> values(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
    try {
        return SaliencyMap(w, h, std::move(values));
    } catch (const Error& e) {
        fail(ErrorCode::Parse, source + ": " + e.what());
    }
}

SaliencyMap read_saliency_map(const fs::path& path) {
    const auto bytes = read_file(path);
    if (is_png(bytes)) {
        const auto img = decode_png_gray(bytes, path.string());
        if (img.width == 0 || img.height == 0)
            fail(ErrorCode::Parse, path.string() + ": zero-size image");
        const auto peak = *std::max_element(img.pixels.begin(), img.pixels.end());
        std::vector<double> values(img.pixels.size(), 0.0);
        if (peak > 0)
            for (std::size_t i = 0; i < values.size(); ++i)
                values[i] = static_cast<double>(img.pixels[i]) / peak;
        return SaliencyMap(img.width, img.height, std::move(values));
    }
    return decode_smap(bytes, path.string());
}

void write_saliency_map(const SaliencyMap& map, const fs::path& path) {
    write_file_atomic(path, encode_smap(map));
}

// ---- PNG ---------------------------------------------------------------------

GrayImage read_png_gray(const fs::path& path) {
    return decode_png_gray(read_file(path), path.string());
}

namespace {

void write_png_rows(png_structp png, png_infop info, const GrayImage& image) {
    const int depth = image.bit_depth == 16 ? 16 : 8;
    const std::size_t bpp = depth / 8;
    std::vector<unsigned char> row(image.width * bpp);
    png_set_IHDR(png, info, image.width, image.height, depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        for (std::uint32_t x = 0; x < image.width; ++x) {
            const auto v = image.pixels[std::size_t{y} * image.width + x];
            if (depth == 16) {
                row[2 * x] = static_cast<unsigned char>(v >> 8);
                row[2 * x + 1] = static_cast<unsigned char>(v & 0xFF);
            } else {
                row[x] = static_cast<unsigned char>(std::min<std::uint16_t>(v, 255));
            }
        }
        png_write_row(png, row.data());
    }
}

} // namespace

std::string encode_png_gray(const GrayImage& image) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != std::size_t{image.width} * image.height)
        fail(ErrorCode::InvalidArgument, "invalid gray image");
    std::string out, error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error,
                                              png_error_to_exception, png_warning_ignore);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        fail(ErrorCode::Io, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "PNG encode failed: " + error);
    }
    png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
    write_png_rows(png, info, image);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png_gray(const GrayImage& image, const fs::path& path) {
    write_file_atomic(path, encode_png_gray(image));
}

// ---- Files -------------------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::NotFound, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        fail(ErrorCode::Io, "read error on " + path.string());
    return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::string tmpl = (dir / ("." + path.filename().string() + ".tmpXXXXXX")).string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0)
        fail(ErrorCode::Io, "cannot create temporary file next to " + path.string());
    std::size_t written = 0;
    while (written < bytes.size()) {
        const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            ::close(fd);
            ::unlink(tmpl.c_str());
            fail(ErrorCode::Io, "write failed for " + path.string());
        }
        written += static_cast<std::size_t>(n);
    }
    ::fchmod(fd, 0644);
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
        ::unlink(tmpl.c_str());
        fail(ErrorCode::Io, "flush failed for " + path.string());
    }
    if (std::rename(tmpl.c_str(), path.c_str()) != 0) {
        ::unlink(tmpl.c_str());
        fail(ErrorCode::Io, "cannot rename into " + path.string());
    }
}

std::map<FrameIndex, fs::path> list_numbered_files(const fs::path& dir) {
    std::map<FrameIndex, fs::path> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        fail(ErrorCode::NotFound, "not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        const auto stem = entry.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }))
            continue;
        FrameIndex f = 0;
        auto [p, err] = std::from_chars(stem.data(), stem.data() + stem.size(), f);
        if (err != std::errc())
            continue;
        out.emplace(f, entry.path());
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v))
        return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace gazeaudit
