#include "motionshot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "motionshot/error.hpp"

namespace mshot {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty())
        throw ValidationError("config: bad value '" + value + "' for " + key);
    return out;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

fs::path resolve(const std::string& value, const fs::path& base) {
    if (value.empty()) return {};
    fs::path p(value);
    return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<fs::path> resolve_list(const std::string& value, const fs::path& base) {
    std::vector<fs::path> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(resolve(item, base));
    }
    return out;
}

std::string join(const std::vector<fs::path>& paths) {
    std::string out;
    for (std::size_t i = 0; i < paths.size(); ++i) out += (i ? "," : "") + paths[i].string();
    return out;
}

struct Field {
    std::string key;
    std::function<void(PipelineConfig&, const std::string&, const fs::path&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field number_field(std::string key, T PipelineConfig::*member) {
    return {key, [key, member](PipelineConfig& c, const std::string& v, const fs::path&) { c.*member = parse_number<T>(key, v); },
            [member](const PipelineConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return fmt(c.*member);
                else return std::to_string(c.*member);
            }};
}

template <typename T>
Field guidance_field(std::string key, T GuidanceConfig::*member) {
    return {key,
            [key, member](PipelineConfig& c, const std::string& v, const fs::path&) { c.guidance.*member = parse_number<T>(key, v); },
            [member](const PipelineConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return fmt(c.guidance.*member);
                else return std::to_string(c.guidance.*member);
            }};
}

Field path_field(std::string key, fs::path PipelineConfig::*member) {
    return {key, [member](PipelineConfig& c, const std::string& v, const fs::path& base) { c.*member = resolve(v, base); },
            [member](const PipelineConfig& c) { return (c.*member).string(); }};
}

Field list_field(std::string key, std::vector<fs::path> PipelineConfig::*member) {
    return {key, [member](PipelineConfig& c, const std::string& v, const fs::path& base) { c.*member = resolve_list(v, base); },
            [member](const PipelineConfig& c) { return join(c.*member); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        number_field("m", &PipelineConfig::m),
        number_field("contour_fraction", &PipelineConfig::contour_fraction),
        {"contour_mode",
         [](PipelineConfig& c, const std::string& v, const fs::path&) {
             if (v == "count") c.contour_mode = ContourMode::count;
             else if (v == "interval") c.contour_mode = ContourMode::interval;
             else throw ValidationError("config: contour_mode must be count or interval, got '" + v + "'");
         },
         [](const PipelineConfig& c) { return std::string(c.contour_mode == ContourMode::count ? "count" : "interval"); }},
        number_field("contour_interval", &PipelineConfig::contour_interval),
        number_field("n_pca", &PipelineConfig::n_pca),
        number_field("track_patch", &PipelineConfig::track_patch),
        number_field("track_search", &PipelineConfig::track_search),
        number_field("tps_lambda_relative", &PipelineConfig::tps_lambda_relative),
        {"warp_mode",
         [](PipelineConfig& c, const std::string& v, const fs::path&) {
             if (v == "full") c.warp_mode = WarpMode::full;
             else if (v == "masked") c.warp_mode = WarpMode::masked;
             else throw ValidationError("config: warp_mode must be full or masked, got '" + v + "'");
         },
         [](const PipelineConfig& c) { return std::string(c.warp_mode == WarpMode::full ? "full" : "masked"); }},
        {"warp_fill",
         [](PipelineConfig& c, const std::string& v, const fs::path&) {
             std::stringstream ss(v);
             std::string item;
             std::size_t n = 0;
             while (std::getline(ss, item, ',')) {
                 if (n == 3) throw ValidationError("config: warp_fill takes three values");
                 const int x = parse_number<int>("warp_fill", trim(item));
                 if (x < 0 || x > 255) throw ValidationError("config: warp_fill values must lie in [0, 255]");
                 c.warp_fill[n++] = static_cast<std::uint8_t>(x);
             }
             if (n != 3) throw ValidationError("config: warp_fill takes three values");
         },
         [](const PipelineConfig& c) {
             return std::to_string(c.warp_fill[0]) + "," + std::to_string(c.warp_fill[1]) + "," + std::to_string(c.warp_fill[2]);
         }},
        guidance_field("guidance_timestep", &GuidanceConfig::timestep),
        guidance_field("guidance_top_k", &GuidanceConfig::top_k),
        guidance_field("guidance_steps", &GuidanceConfig::total_steps),
        guidance_field("guidance_guided_steps", &GuidanceConfig::guided_steps),
        guidance_field("guidance_strength", &GuidanceConfig::strength),
        guidance_field("attention_height", &GuidanceConfig::attention_height),
        guidance_field("attention_width", &GuidanceConfig::attention_width),
        guidance_field("attention_heads", &GuidanceConfig::heads),
        number_field("seed", &PipelineConfig::seed),
        number_field("threads", &PipelineConfig::threads),
        path_field("ref_frames", &PipelineConfig::ref_frames),
        path_field("ref_mask", &PipelineConfig::ref_mask),
        path_field("tar_mask", &PipelineConfig::tar_mask),
        list_field("ref_sd", &PipelineConfig::ref_sd),
        list_field("tar_sd", &PipelineConfig::tar_sd),
        path_field("ref_dino", &PipelineConfig::ref_dino),
        path_field("tar_dino", &PipelineConfig::tar_dino),
        path_field("tracks", &PipelineConfig::tracks),
        path_field("ref_masks", &PipelineConfig::ref_masks),
        path_field("attention_q", &PipelineConfig::attention_q),
        path_field("attention_k", &PipelineConfig::attention_k),
        path_field("out_dir", &PipelineConfig::out_dir),
    };
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return f;
    throw ValidationError("config: unknown key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

void PipelineConfig::set(const std::string& key, const std::string& value, const fs::path& base) {
    field(key).set(*this, trim(value), base);
}

void PipelineConfig::validate() const {
    if (m < 3) throw ValidationError("config: m must be at least 3, got " + std::to_string(m));
    if (!(contour_fraction >= 0.0 && contour_fraction <= 1.0))
        throw ValidationError("config: contour_fraction must lie in [0, 1]");
    if (!(contour_interval > 0.0)) throw ValidationError("config: contour_interval must be positive");
    if (n_pca < 1) throw ValidationError("config: n_pca must be at least 1");
    if (track_patch < 1 || track_patch % 2 == 0) throw ValidationError("config: track_patch must be odd and positive");
    if (track_search < 1) throw ValidationError("config: track_search must be at least 1");
    if (!(tps_lambda_relative >= 0.0)) throw ValidationError("config: tps_lambda_relative must be non-negative");
    if (threads < 1) throw ValidationError("config: threads must be at least 1");
    if (attention_q.empty() != attention_k.empty())
        throw ValidationError("config: attention_q and attention_k must be given together");
    if (ref_sd.size() != tar_sd.size()) throw ValidationError("config: ref_sd and tar_sd list different layer counts");
    guidance.validate();
}

std::string PipelineConfig::get(const std::string& key) const { return field(key).get(*this); }

std::string PipelineConfig::to_text() const { return subset_text(config_keys()); }

std::string PipelineConfig::subset_text(const std::vector<std::string>& keys) const {
    std::string out;
    for (const auto& k : keys) {
        const std::string v = get(k);
        out += k + (v.empty() ? " =\n" : " = " + v + "\n");
    }
    return out;
}

SamplingOptions PipelineConfig::sampling() const {
    return {m, contour_fraction, contour_mode, contour_interval, seed};
}

TrackerOptions PipelineConfig::tracker() const { return {track_patch, track_search, 0.3}; }

WarpOptions PipelineConfig::warp() const { return {warp_mode, warp_fill, tps_lambda_relative, threads}; }

void apply_config_text(PipelineConfig& config, const std::string& text, const fs::path& base) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        try {
            config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base);
        } catch (const ValidationError& e) {
            throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    PipelineConfig config;
    apply_config_text(config, ss.str(), path.parent_path());
    return config;
}

}  // namespace mshot
