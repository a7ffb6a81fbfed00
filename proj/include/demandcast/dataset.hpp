#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "demandcast/rng.hpp"
#include "demandcast/series.hpp"

namespace demandcast {

/// All ingested series share one date grid: identical start_day and length.
/// `series` and `meta` are parallel arrays ordered by item_id.
struct SeriesSet {
    std::vector<SalesSeries> series;
    std::vector<ItemMeta> meta;
    Calendar calendar;

    std::size_t size() const { return series.size(); }
    std::size_t days() const { return series.empty() ? 0 : series.front().length(); }
    DayOffset start_day() const { return series.empty() ? 0 : series.front().start_day; }

    int index_of(const std::string& item_id) const {
        for (std::size_t i = 0; i < series.size(); ++i)
            if (series[i].item_id == item_id) return static_cast<int>(i);
        return -1;
    }
};

inline std::vector<std::string> validate_set(const SeriesSet& set) {
    std::vector<std::string> violations;
    if (set.series.empty()) violations.push_back("n >= 1 violated: no series");
    if (set.series.size() != set.meta.size())
        violations.push_back("series/meta size mismatch");
    for (std::size_t i = 0; i < set.series.size(); ++i) {
        const auto& s = set.series[i];
        if (s.start_day != set.start_day() || s.length() != set.days())
            violations.push_back("series " + s.item_id + " off the common date grid");
        for (auto& v : validate_series(s)) violations.push_back(s.item_id + ": " + v);
    }
    return violations;
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
        fields.back().pop_back();
    return fields;
}

inline double parse_double(const std::string& text, const char* what, std::size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::runtime_error(std::string("line ") + std::to_string(line_no) + ": bad " +
                                 what + " '" + text + "'");
    return value;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Flat-file ingestion
// ---------------------------------------------------------------------------

/// Loads holiday flags from a `date,holiday(0|1)` CSV.
inline Calendar load_calendar_csv(const std::string& path, bool southern_hemisphere = false) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calendar file: " + path);
    std::unordered_set<DayOffset> holidays;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line_no == 1 && line.rfind("date", 0) == 0)) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 2 columns in calendar file");
        DayOffset day = parse_date(fields[0]);
        if (fields[1] == "1")
            holidays.insert(day);
        else if (fields[1] != "0")
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": holiday flag must be 0 or 1");
    }
    return Calendar(std::move(holidays), southern_hemisphere);
}

/// Loads sales from an `item_id,date,sales` CSV onto the common date grid
/// spanning [min date, max date] over all rows. Dates absent for an item
/// become masked-missing entries. Metadata is read from an optional
/// `item_id,subcategory,category,department,super_department` CSV; items
/// without a row get a catch-all hierarchy.
inline SeriesSet load_csv(const std::string& sales_path, const std::string& calendar_path = "",
                          const std::string& meta_path = "") {
    std::ifstream in(sales_path);
    if (!in) throw std::runtime_error("cannot open sales file: " + sales_path);

    struct Row {
        DayOffset day;
        double sales;
    };
    std::map<std::string, std::vector<Row>> rows;  // ordered by item_id
    DayOffset min_day = 0, max_day = 0;
    bool any = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line_no == 1 && line.rfind("item_id", 0) == 0)) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 3 columns (item_id,date,sales)");
        DayOffset day;
        try {
            day = parse_date(fields[1]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        double sales = detail::parse_double(fields[2], "sales value", line_no);
        rows[fields[0]].push_back({day, sales});
        min_day = any ? std::min(min_day, day) : day;
        max_day = any ? std::max(max_day, day) : day;
        any = true;
    }
    if (!any) throw std::runtime_error("sales file has no data rows: " + sales_path);

    std::unordered_map<std::string, ItemMeta> meta_by_id;
    if (!meta_path.empty()) {
        std::ifstream meta_in(meta_path);
        if (!meta_in) throw std::runtime_error("cannot open metadata file: " + meta_path);
        std::size_t meta_line = 0;
        while (std::getline(meta_in, line)) {
            ++meta_line;
            if (line.empty() || (meta_line == 1 && line.rfind("item_id", 0) == 0)) continue;
            auto fields = detail::split_csv_line(line);
            if (fields.size() != 5)
                throw std::runtime_error("line " + std::to_string(meta_line) +
                                         ": expected 5 columns in metadata file");
            ItemMeta m;
            m.item_id = fields[0];
            m.subcategory_id = fields[1];
            m.category_id = fields[2];
            m.department_id = fields[3];
            m.super_department_id = fields[4];
            meta_by_id[m.item_id] = std::move(m);
        }
    }

    const std::size_t n_days = static_cast<std::size_t>(max_day - min_day + 1);
    SeriesSet set;
    if (!calendar_path.empty()) set.calendar = load_calendar_csv(calendar_path);
    for (auto& [item_id, item_rows] : rows) {
        SalesSeries s;
        s.item_id = item_id;
        s.start_day = min_day;
        s.values.assign(n_days, 0.0);
        s.missing.assign(n_days, true);
        for (const Row& r : item_rows) {
            auto t = static_cast<std::size_t>(r.day - min_day);
            if (!s.missing[t])
                throw std::runtime_error("duplicate (item,date) row: " + item_id + "," +
                                         format_date(r.day));
            s.values[t] = r.sales;
            s.missing[t] = false;
        }
        auto it = meta_by_id.find(item_id);
        ItemMeta m;
        if (it != meta_by_id.end()) {
            m = it->second;
        } else {
            m.item_id = item_id;
            m.subcategory_id = "UNKNOWN";
            m.category_id = "UNKNOWN";
            m.department_id = "UNKNOWN";
            m.super_department_id = "UNKNOWN";
        }
        set.series.push_back(std::move(s));
        set.meta.push_back(std::move(m));
    }
    return set;
}

/// Inverse of load_csv: masked entries are dropped so they reload as gaps.
inline void write_sales_csv(const SeriesSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sales file: " + path);
    out << "item_id,date,sales\n";
    for (const auto& s : set.series)
        for (std::size_t t = 0; t < s.length(); ++t)
            if (s.observed(t))
                out << s.item_id << ',' << format_date(s.start_day + static_cast<DayOffset>(t))
                    << ',' << detail::format_double(s.values[t]) << '\n';
}

inline void write_meta_csv(const SeriesSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metadata file: " + path);
    out << "item_id,subcategory,category,department,super_department\n";
    for (const auto& m : set.meta)
        out << m.item_id << ',' << m.subcategory_id << ',' << m.category_id << ','
            << m.department_id << ',' << m.super_department_id << '\n';
}

inline void write_calendar_csv(const SeriesSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write calendar file: " + path);
    out << "date,holiday\n";
    const DayOffset first = set.start_day();
    for (std::size_t t = 0; t < set.days(); ++t) {
        DayOffset day = first + static_cast<DayOffset>(t);
        out << format_date(day) << ',' << (set.calendar.holiday(day) ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Knobs for the desk-scale synthetic sales generator. Each subcategory
/// carries a latent weekly pattern; items blend it with an item-specific
/// weekly pattern according to shared_pattern_strength. noise_std is
/// relative to the item's base level. Base levels are log-uniform over
/// [base_level_min, base_level_max]; the default two-orders-of-magnitude
/// span covers sparse single-unit tail items up to steady head items.
struct SyntheticSpec {
    int n_items = 100;
    int n_days = 190;
    int n_subcategories = 4;
    double weekly_seasonality_amplitude = 0.3;
    double shared_pattern_strength = 0.7;     // in [0,1]
    double zero_inflation_probability = 0.1;  // in [0,1]
    double noise_std = 0.25;
    double base_level_min = 0.5;
    double base_level_max = 50.0;
    std::uint64_t rng_seed = 1;
    DayOffset start_day = 17532;  // 2018-01-01
};

inline std::vector<std::string> validate_spec(const SyntheticSpec& spec) {
    std::vector<std::string> violations;
    if (spec.n_items < 1) violations.push_back("n_items must be >= 1");
    if (spec.n_days < 1) violations.push_back("n_days must be >= 1");
    if (spec.n_subcategories < 1) violations.push_back("n_subcategories must be >= 1");
    if (spec.shared_pattern_strength < 0.0 || spec.shared_pattern_strength > 1.0)
        violations.push_back("shared_pattern_strength must lie in [0,1]");
    if (spec.zero_inflation_probability < 0.0 || spec.zero_inflation_probability > 1.0)
        violations.push_back("zero_inflation_probability must lie in [0,1]");
    if (spec.noise_std < 0.0) violations.push_back("noise_std must be >= 0");
    if (!(spec.base_level_min > 0.0) || !(spec.base_level_min < spec.base_level_max))
        violations.push_back("base levels must satisfy 0 < min < max");
    return violations;
}

/// Deterministic given rng_seed; every item draws from its own derived
/// stream, so generation order cannot change the output.
inline SeriesSet generate_synthetic(const SyntheticSpec& spec) {
    auto violations = validate_spec(spec);
    if (!violations.empty()) throw std::invalid_argument("SyntheticSpec: " + violations.front());

    // Latent weekly pattern per subcategory.
    std::vector<std::array<double, 7>> sub_pattern(static_cast<std::size_t>(spec.n_subcategories));
    for (int c = 0; c < spec.n_subcategories; ++c) {
        std::mt19937_64 rng(derive_seed(spec.rng_seed, 0x5ce00000ULL + static_cast<std::uint64_t>(c)));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : sub_pattern[static_cast<std::size_t>(c)]) v = u(rng);
    }

    int id_width = 1;
    for (int v = spec.n_items; v >= 10; v /= 10) ++id_width;
    id_width = std::min(id_width, 9);

    SeriesSet set;
    std::unordered_set<DayOffset> holidays;
    for (int t = 0; t < spec.n_days; ++t) {
        DayOffset day = spec.start_day + t;
        CivilDate d = civil_from_day_offset(day);
        if ((d.month == 1 && d.day == 1) || (d.month == 12 && d.day == 25)) holidays.insert(day);
    }
    set.calendar = Calendar(std::move(holidays));

    for (int i = 0; i < spec.n_items; ++i) {
        std::mt19937_64 rng(derive_seed(spec.rng_seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_real_distribution<double> u11(-1.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        const double base_level =
            std::exp(std::log(spec.base_level_min) +
                     u01(rng) * (std::log(spec.base_level_max) - std::log(spec.base_level_min)));
        std::array<double, 7> own{};
        for (auto& v : own) v = u11(rng);
        const int sub = i % spec.n_subcategories;
        const auto& shared = sub_pattern[static_cast<std::size_t>(sub)];

        SalesSeries s;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "I%0*d", id_width, i);
        s.item_id = buf;
        s.start_day = spec.start_day;
        s.values.resize(static_cast<std::size_t>(spec.n_days));
        s.missing.assign(static_cast<std::size_t>(spec.n_days), false);
        for (int t = 0; t < spec.n_days; ++t) {
            const auto k = static_cast<std::size_t>(((spec.start_day + t) % 7 + 7) % 7);
            const double mix = (1.0 - spec.shared_pattern_strength) * own[k] +
                               spec.shared_pattern_strength * shared[k];
            double signal = base_level * (1.0 + spec.weekly_seasonality_amplitude * mix);
            signal += spec.noise_std * base_level * gauss(rng);
            double value = std::round(std::max(0.0, signal));
            if (u01(rng) < spec.zero_inflation_probability) value = 0.0;
            s.values[static_cast<std::size_t>(t)] = value;
        }

        ItemMeta m;
        m.item_id = s.item_id;
        std::snprintf(buf, sizeof(buf), "SC%02d", sub);
        m.subcategory_id = buf;
        std::snprintf(buf, sizeof(buf), "CAT%02d", sub / 2);
        m.category_id = buf;
        std::snprintf(buf, sizeof(buf), "DEP%02d", sub / 4);
        m.department_id = buf;
        m.super_department_id = "SDEP00";
        set.series.push_back(std::move(s));
        set.meta.push_back(std::move(m));
    }
    return set;
}

}  // namespace demandcast
