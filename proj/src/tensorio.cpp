#include "motionshot/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "motionshot/error.hpp"

namespace mshot {

namespace fs = std::filesystem;

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Frame::Frame(std::size_t h, std::size_t w, std::array<std::uint8_t, 3> fill) : height(h), width(w), rgb(3 * h * w) {
    for (std::size_t i = 0; i < h * w; ++i) std::copy(fill.begin(), fill.end(), rgb.begin() + 3 * i);
}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw ValidationError(std::string(what) + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

// Header is magic + u32 dims; payload is f32le. Shared by FGRID and FGR4.
std::vector<std::uint8_t> encode_floats(const char (&magic)[5], std::span<const std::size_t> dims,
                                        std::span<const float> values) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 * dims.size() + 4 * values.size());
    out.insert(out.end(), magic, magic + 4);
    for (auto d : dims) put_u32(out, checked_u32(d, "dimension"));
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

std::vector<float> decode_floats(std::span<const std::uint8_t> bytes, const char (&magic)[5],
                                 std::span<std::size_t> dims, const fs::path& path) {
    const std::string where = path.string();
    const std::size_t header = 4 + 4 * dims.size();
    if (bytes.size() < 4 || !std::equal(magic, magic + 4, bytes.begin()))
        throw IoError(where + ": bad magic at byte offset 0 (expected \"" + std::string(magic) + "\")");
    if (bytes.size() < header)
        throw IoError(where + ": truncated header at byte offset " + std::to_string(bytes.size()));
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        dims[i] = get_u32(bytes, 4 + 4 * i);
        count *= dims[i];
        if (count > (std::uint64_t{1} << 40)) throw IoError(where + ": declared size is implausibly large");
    }
    const std::uint64_t expected = header + 4 * count;
    if (bytes.size() < expected)
        throw IoError(where + ": truncated payload at byte offset " + std::to_string(bytes.size()) + ", expected " +
                      std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        throw IoError(where + ": trailing bytes at byte offset " + std::to_string(expected));
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = header + 4 * i;
        values[i] = std::bit_cast<float>(get_u32(bytes, offset));
        if (!std::isfinite(values[i]))
            throw IoError(where + ": non-finite value at byte offset " + std::to_string(offset));
    }
    return values;
}

// --- netpbm ------------------------------------------------------------------

struct PnmHeader {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes, const char* magic, const fs::path& path) {
    const std::string where = path.string();
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto token = [&]() -> std::string {
        skip_space_and_comments();
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    auto number = [&](const char* what) -> std::size_t {
        const std::string t = token();
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
            throw IoError(where + ": bad " + what + " in header");
        return v;
    };
    if (token() != magic) throw IoError(where + ": not a binary " + std::string(magic) + " file");
    PnmHeader h;
    h.width = number("width");
    h.height = number("height");
    const std::size_t maxval = number("maxval");
    if (maxval != 255) throw IoError(where + ": maxval " + std::to_string(maxval) + " unsupported, need 255");
    if (pos >= bytes.size()) throw IoError(where + ": missing raster");
    h.data_offset = pos + 1;  // exactly one whitespace byte after maxval
    return h;
}

std::vector<std::uint8_t> pnm_header(const char* magic, std::size_t width, std::size_t height) {
    const std::string s = std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    return {s.begin(), s.end()};
}

// Returns files in dir with the given extension, ordered by the trailing integer of the stem.
std::vector<fs::path> numbered_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::map<long, fs::path> ordered;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
        const std::string stem = entry.path().stem().string();
        std::size_t digits = stem.size();
        while (digits > 0 && std::isdigit(static_cast<unsigned char>(stem[digits - 1]))) --digits;
        if (digits == stem.size()) throw IoError(entry.path().string() + ": file name carries no frame number");
        const long index = std::stol(stem.substr(digits));
        if (!ordered.emplace(index, entry.path()).second)
            throw IoError(dir.string() + ": duplicate frame number " + std::to_string(index));
    }
    if (ordered.empty()) throw IoError(dir.string() + ": no " + ext + " files");
    std::vector<fs::path> out;
    long expected = ordered.begin()->first;
    for (const auto& [index, path] : ordered) {
        if (index != expected)
            throw IoError(dir.string() + ": gap in numbering, frame " + std::to_string(expected) + " missing");
        out.push_back(path);
        ++expected;
    }
    return out;
}

std::string numbered_name(const char* prefix, std::size_t index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05zu%s", prefix, index, ext);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

}  // namespace

void write_fgrid(const FeatureGrid& grid, const fs::path& path) {
    if (grid.data.size() != grid.height * grid.width * grid.channels)
        throw ValidationError("feature grid data length does not match its shape");
    const std::array<std::size_t, 3> dims{grid.height, grid.width, grid.channels};
    spit(path, encode_floats("FGRD", dims, grid.data));
}

FeatureGrid read_fgrid(const fs::path& path) {
    const auto bytes = slurp(path);
    std::array<std::size_t, 3> dims{};
    FeatureGrid g;
    g.data = decode_floats(bytes, "FGRD", dims, path);
    g.height = dims[0];
    g.width = dims[1];
    g.channels = dims[2];
    return g;
}

void write_fgr4(const Tensor4& tensor, const fs::path& path) {
    if (tensor.data.size() != tensor.dims[0] * tensor.dims[1] * tensor.dims[2] * tensor.dims[3])
        throw ValidationError("tensor data length does not match its shape");
    spit(path, encode_floats("FGR4", tensor.dims, tensor.data));
}

Tensor4 read_fgr4(const fs::path& path) {
    const auto bytes = slurp(path);
    Tensor4 t;
    t.data = decode_floats(bytes, "FGR4", t.dims, path);
    return t;
}

void write_mask_pgm(const BinaryMask& mask, const fs::path& path) {
    auto out = pnm_header("P5", mask.width, mask.height);
    for (auto b : mask.bits) out.push_back(b ? 255 : 0);
    spit(path, out);
}

BinaryMask read_mask_pgm(const fs::path& path) {
    const auto bytes = slurp(path);
    const auto h = parse_pnm_header(bytes, "P5", path);
    if (bytes.size() - h.data_offset < h.width * h.height)
        throw IoError(path.string() + ": truncated raster at byte offset " + std::to_string(bytes.size()));
    BinaryMask mask(h.height, h.width);
    for (std::size_t i = 0; i < h.width * h.height; ++i) mask.bits[i] = bytes[h.data_offset + i] >= 128 ? 1 : 0;
    return mask;
}

void write_frame_ppm(const Frame& frame, const fs::path& path) {
    auto out = pnm_header("P6", frame.width, frame.height);
    out.insert(out.end(), frame.rgb.begin(), frame.rgb.end());
    spit(path, out);
}

Frame read_frame_ppm(const fs::path& path) {
    const auto bytes = slurp(path);
    const auto h = parse_pnm_header(bytes, "P6", path);
    if (bytes.size() - h.data_offset < 3 * h.width * h.height)
        throw IoError(path.string() + ": truncated raster at byte offset " + std::to_string(bytes.size()));
    Frame f;
    f.height = h.height;
    f.width = h.width;
    f.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                 bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + 3 * h.width * h.height));
    return f;
}

void write_frames_ppm(const FrameSequence& frames, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < frames.size(); ++i) write_frame_ppm(frames[i], dir / numbered_name("frame", i, ".ppm"));
}

FrameSequence read_frames_ppm(const fs::path& dir) {
    FrameSequence frames;
    for (const auto& p : numbered_files(dir, ".ppm")) {
        frames.push_back(read_frame_ppm(p));
        if (frames.back().width != frames.front().width || frames.back().height != frames.front().height)
            throw IoError(p.string() + ": dimension mismatch with first frame");
    }
    return frames;
}

void write_masks_pgm(const std::vector<BinaryMask>& masks, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < masks.size(); ++i) write_mask_pgm(masks[i], dir / numbered_name("mask", i, ".pgm"));
}

std::vector<BinaryMask> read_masks_pgm(const fs::path& dir) {
    std::vector<BinaryMask> masks;
    for (const auto& p : numbered_files(dir, ".pgm")) {
        masks.push_back(read_mask_pgm(p));
        if (masks.back().width != masks.front().width || masks.back().height != masks.front().height)
            throw IoError(p.string() + ": dimension mismatch with first mask");
    }
    return masks;
}

std::string format_tracks(const TrackFile& tracks) {
    std::string out = "TRACKS " + std::to_string(tracks.frame_count()) + " " + std::to_string(tracks.points) + "\n";
    for (const auto& row : tracks.frames) {
        if (row.size() != tracks.points) throw ValidationError("track row length differs from point count");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ' ';
            out += format_double(row[i].pos.x);
            out += ' ';
            out += format_double(row[i].pos.y);
            out += row[i].visible ? " 1" : " 0";
        }
        out += '\n';
    }
    return out;
}

TrackFile parse_tracks(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    struct Token {
        std::string text;
        std::size_t column;
    };
    auto split = [](const std::string& s) {
        std::vector<Token> tokens;
        std::size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            const std::size_t start = i;
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            if (i > start) tokens.push_back({s.substr(start, i - start), start + 1});
        }
        return tokens;
    };
    auto fail = [&](std::size_t column, const std::string& msg) -> IoError {
        return IoError("tracks line " + std::to_string(line_no) + ", column " + std::to_string(column) + ": " + msg);
    };
    auto count_of = [&](const Token& t) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) throw fail(t.column, "expected a count, got '" + t.text + "'");
        return v;
    };

    if (!std::getline(in, line)) throw IoError("tracks: empty input");
    ++line_no;
    const auto header = split(line);
    if (header.size() != 3 || header[0].text != "TRACKS") throw fail(1, "expected header 'TRACKS F m'");
    TrackFile tracks;
    const std::size_t frames = count_of(header[1]);
    tracks.points = count_of(header[2]);
    if (frames == 0) throw fail(header[1].column, "frame count must be at least 1");

    while (tracks.frames.size() < frames) {
        if (!std::getline(in, line)) throw IoError("tracks: expected " + std::to_string(frames) + " frame rows, found " +
                                                   std::to_string(tracks.frames.size()));
        ++line_no;
        const auto tokens = split(line);
        if (tokens.empty() && tracks.points != 0) continue;
        if (tokens.size() != 3 * tracks.points)
            throw fail(1, "expected " + std::to_string(tracks.points) + " triples, found " + std::to_string(tokens.size() / 3) +
                              (tokens.size() % 3 ? " and a partial triple" : ""));
        std::vector<TrackPoint> row(tracks.points);
        for (std::size_t i = 0; i < tracks.points; ++i) {
            double xy[2];
            for (int k = 0; k < 2; ++k) {
                const Token& t = tokens[3 * i + k];
                auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), xy[k]);
                if (ec != std::errc{} || ptr != t.text.data() + t.text.size() || !std::isfinite(xy[k]))
                    throw fail(t.column, "non-numeric coordinate '" + t.text + "'");
            }
            const Token& v = tokens[3 * i + 2];
            if (v.text != "0" && v.text != "1") throw fail(v.column, "visibility must be 0 or 1, got '" + v.text + "'");
            row[i] = {{xy[0], xy[1]}, v.text == "1"};
        }
        tracks.frames.push_back(std::move(row));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!split(line).empty()) throw fail(1, "unexpected content after " + std::to_string(frames) + " frame rows");
    }
    return tracks;
}

void write_tracks(const TrackFile& tracks, const fs::path& path) {
    const std::string text = format_tracks(tracks);
    spit(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

TrackFile read_tracks(const fs::path& path) {
    const auto bytes = slurp(path);
    try {
        return parse_tracks(std::string(bytes.begin(), bytes.end()));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void validate_tracks_in_bounds(const TrackFile& tracks, std::size_t height, std::size_t width) {
    for (std::size_t f = 0; f < tracks.frames.size(); ++f) {
        for (std::size_t i = 0; i < tracks.frames[f].size(); ++i) {
            const auto& tp = tracks.frames[f][i];
            if (!tp.visible) continue;
            if (tp.pos.x < -0.5 || tp.pos.y < -0.5 || tp.pos.x > static_cast<double>(width) - 0.5 ||
                tp.pos.y > static_cast<double>(height) - 0.5)
                throw ValidationError("track point " + std::to_string(i) + " in frame " + std::to_string(f) +
                                      " lies outside the " + std::to_string(width) + "x" + std::to_string(height) + " frame");
        }
    }
}

}  // namespace mshot
