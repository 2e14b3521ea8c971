#include "windgbm/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace windgbm {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc{} && ptr == end && std::isfinite(value);
}

bool parse_int(std::string_view text, int& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

void RunConfig::validate() const {
    auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_open_unit(n0_fraction)) throw std::invalid_argument("n0_fraction must lie in (0,1)");
    if (alpha_loss < 0.0 || alpha_loss > 1.0)
        throw std::invalid_argument("alpha_loss must lie in [0,1]");
    for (double level : interval_levels)
        if (!in_open_unit(level)) throw std::invalid_argument("interval levels must lie in (0,1)");
    for (double beta : quantile_levels)
        if (!in_open_unit(beta)) throw std::invalid_argument("quantile levels must lie in (0,1)");
    if (rated_capacity <= 0.0) throw std::invalid_argument("rated_capacity must be positive");
    if (speed_floor <= 0.0) throw std::invalid_argument("speed_floor must be positive");
    if (power_floor <= 0.0) throw std::invalid_argument("power_floor must be positive");
    if (sigma_floor <= 0.0 || sigma2_min <= 0.0)
        throw std::invalid_argument("sigma_floor and sigma2_min must be positive");
    if (f_s_floor < 0.0) throw std::invalid_argument("f_s_floor must be nonnegative");
    if (sigma_prime_max <= 0.0) throw std::invalid_argument("sigma_prime_max must be positive");
    if (max_order < 1) throw std::invalid_argument("max_order must be at least 1");
    if (refit_every < 1) throw std::invalid_argument("refit_every must be at least 1");
    if (delta_t <= 0.0) throw std::invalid_argument("delta_t must be positive");
    const auto& g = hyper_grid;
    for (const auto* grid : {&g.q_mu, &g.q_sigma})
        for (double v : *grid)
            if (v < 0.0) throw std::invalid_argument("Q grid values must be nonnegative");
    for (const auto* grid : {&g.sigma_z2, &g.delta, &g.gamma})
        for (double v : *grid)
            if (v <= 0.0) throw std::invalid_argument("sigma_z2, delta and gamma grids must be positive");
}

SeriesFrame SeriesFrame::slice(std::size_t first, std::size_t last) const {
    last = std::min(last, size());
    first = std::min(first, last);
    SeriesFrame out;
    out.delta_t = delta_t;
    out.rated_capacity = rated_capacity;
    if (!timestamps.empty())
        out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + last);
    out.speed.assign(speed.begin() + first, speed.begin() + last);
    out.power.assign(power.begin() + first, power.begin() + last);
    return out;
}

void SeriesFrame::append(const SeriesFrame& other) {
    timestamps.insert(timestamps.end(), other.timestamps.begin(), other.timestamps.end());
    speed.insert(speed.end(), other.speed.begin(), other.speed.end());
    power.insert(power.end(), other.power.begin(), other.power.end());
}

std::int64_t parse_timestamp(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw std::invalid_argument("empty timestamp");

    if (text.find('-', 1) == std::string::npos) {
        std::int64_t epoch = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw std::invalid_argument("bad epoch timestamp '" + text + "'");
        return epoch;
    }

    // YYYY-MM-DD[T ]HH:MM[:SS][Z]
    std::string s = text;
    if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.pop_back();
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    const bool ok_date = s.size() >= 10 && s[4] == '-' && s[7] == '-' &&
                         parse_int(std::string_view(s).substr(0, 4), y) &&
                         parse_int(std::string_view(s).substr(5, 2), mo) &&
                         parse_int(std::string_view(s).substr(8, 2), d);
    if (!ok_date) throw std::invalid_argument("bad ISO-8601 timestamp '" + text + "'");
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':' ||
            !parse_int(std::string_view(s).substr(11, 2), h) ||
            !parse_int(std::string_view(s).substr(14, 2), mi))
            throw std::invalid_argument("bad ISO-8601 timestamp '" + text + "'");
        if (s.size() > 16) {
            if (s.size() != 19 || s[16] != ':' ||
                !parse_int(std::string_view(s).substr(17, 2), sec))
                throw std::invalid_argument("bad ISO-8601 timestamp '" + text + "'");
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60)
        throw std::invalid_argument("invalid calendar value in '" + text + "'");
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

SeriesFrame parse_csv(const std::string& text, const RunConfig& config) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_fields(trim(line));
            break;
        }
    }
    if (header.empty()) throw EmptyInputError("empty input: no header row");

    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(line_no, "header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ts_col = column("timestamp");
    const std::size_t ws_col = column("wind_speed");
    const std::size_t p_col = column("power");

    SeriesFrame frame;
    frame.rated_capacity = config.rated_capacity;
    frame.delta_t = config.delta_t;
    const double scale = 100.0 / config.rated_capacity;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto fields = split_fields(row);
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(fields[ts_col]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        double ws = 0.0, p = 0.0;
        if (!parse_double(fields[ws_col], ws)) throw ParseError(line_no, "bad wind_speed value");
        if (!parse_double(fields[p_col], p)) throw ParseError(line_no, "bad power value");
        frame.timestamps.push_back(ts);
        frame.speed.push_back(ws <= config.speed_floor ? config.speed_floor : ws);
        frame.power.push_back(p * scale);
    }
    if (frame.empty()) throw EmptyInputError("empty input: no data rows");

    if (frame.size() >= 2) {
        const std::int64_t spacing = frame.timestamps[1] - frame.timestamps[0];
        if (spacing <= 0) throw SpacingError("timestamps must be strictly increasing");
        for (std::size_t i = 2; i < frame.size(); ++i) {
            if (frame.timestamps[i] - frame.timestamps[i - 1] != spacing)
                throw SpacingError("non-uniform timestamp spacing at row " + std::to_string(i + 1));
        }
    }
    return frame;
}

SeriesFrame load_csv(const std::filesystem::path& path, const RunConfig& config) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), config);
}

void write_csv(const std::filesystem::path& path, const SeriesFrame& frame) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "timestamp,wind_speed,power\n" << std::setprecision(17);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const std::int64_t ts = frame.timestamps.empty() ? static_cast<std::int64_t>(i)
                                                         : frame.timestamps[i];
        out << ts << ',' << frame.speed[i] << ',' << frame.power[i] << '\n';
    }
}

std::pair<SeriesFrame, SeriesFrame> split_train_test(const SeriesFrame& frame,
                                                     const RunConfig& config) {
    if (frame.size() < 10)
        throw std::invalid_argument("frame too short to split (need at least 10 rows)");
    if (config.n0_fraction <= 0.0 || config.n0_fraction >= 1.0)
        throw std::invalid_argument("n0_fraction must lie in (0,1)");
    // 0.7 * 650 evaluates to 454.99999999999994; nudge before flooring.
    const auto n0 = static_cast<std::size_t>(
        std::floor(config.n0_fraction * static_cast<double>(frame.size()) + 1e-9));
    return {frame.slice(0, n0), frame.slice(n0, frame.size())};
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

    static const std::vector<std::string> known{
        "n0_fraction", "alpha_loss", "interval_levels", "quantile_levels", "hyper_grid",
        "rated_capacity", "speed_floor", "power_floor", "sigma_floor", "sigma2_min",
        "literal_ratio_returns", "window", "f_s_floor", "sigma_prime_max", "curve_at_mean",
        "time_derivative", "max_order", "refit_every", "delta_t"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("unknown config key '" + key + "'");

    RunConfig c;
    try {
        read_if(j, "n0_fraction", c.n0_fraction);
        read_if(j, "alpha_loss", c.alpha_loss);
        read_if(j, "interval_levels", c.interval_levels);
        read_if(j, "quantile_levels", c.quantile_levels);
        read_if(j, "rated_capacity", c.rated_capacity);
        read_if(j, "speed_floor", c.speed_floor);
        read_if(j, "power_floor", c.power_floor);
        read_if(j, "sigma_floor", c.sigma_floor);
        read_if(j, "sigma2_min", c.sigma2_min);
        read_if(j, "literal_ratio_returns", c.literal_ratio_returns);
        read_if(j, "window", c.window);
        read_if(j, "f_s_floor", c.f_s_floor);
        read_if(j, "sigma_prime_max", c.sigma_prime_max);
        read_if(j, "curve_at_mean", c.curve_at_mean);
        read_if(j, "time_derivative", c.time_derivative);
        read_if(j, "max_order", c.max_order);
        read_if(j, "refit_every", c.refit_every);
        read_if(j, "delta_t", c.delta_t);
        if (j.contains("hyper_grid")) {
            const auto& g = j.at("hyper_grid");
            read_if(g, "q_mu", c.hyper_grid.q_mu);
            read_if(g, "q_sigma", c.hyper_grid.q_sigma);
            read_if(g, "sigma_z2", c.hyper_grid.sigma_z2);
            read_if(g, "delta", c.hyper_grid.delta);
            read_if(g, "gamma", c.hyper_grid.gamma);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config field has wrong type: ") + e.what());
    }
    c.validate();
    return c;
}

std::string config_to_json_text(const RunConfig& c) {
    nlohmann::json j;
    j["n0_fraction"] = c.n0_fraction;
    j["alpha_loss"] = c.alpha_loss;
    j["interval_levels"] = c.interval_levels;
    j["quantile_levels"] = c.quantile_levels;
    j["hyper_grid"] = {{"q_mu", c.hyper_grid.q_mu},
                       {"q_sigma", c.hyper_grid.q_sigma},
                       {"sigma_z2", c.hyper_grid.sigma_z2},
                       {"delta", c.hyper_grid.delta},
                       {"gamma", c.hyper_grid.gamma}};
    j["rated_capacity"] = c.rated_capacity;
    j["speed_floor"] = c.speed_floor;
    j["power_floor"] = c.power_floor;
    j["sigma_floor"] = c.sigma_floor;
    j["sigma2_min"] = c.sigma2_min;
    j["literal_ratio_returns"] = c.literal_ratio_returns;
    j["window"] = c.window;
    j["f_s_floor"] = c.f_s_floor;
    j["sigma_prime_max"] = c.sigma_prime_max;
    j["curve_at_mean"] = c.curve_at_mean;
    j["time_derivative"] = c.time_derivative;
    j["max_order"] = c.max_order;
    j["refit_every"] = c.refit_every;
    j["delta_t"] = c.delta_t;
    return j.dump(2);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

}  // namespace windgbm
