#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace demandcast {

/// Days since the epoch (1970-01-01 by default). All date arithmetic in the
/// library happens on this integer grid; calendar text forms exist only at
/// the CSV boundary.
using DayOffset = std::int64_t;

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
inline DayOffset day_offset_from_civil(const CivilDate& d) {
    const int y = d.year - (d.month <= 2);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * (static_cast<unsigned>(d.month) + (d.month > 2 ? -3 : 9)) + 2) / 5 +
        static_cast<unsigned>(d.day) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<DayOffset>(era) * 146097 + static_cast<DayOffset>(doe) - 719468;
}

inline CivilDate civil_from_day_offset(DayOffset offset) {
    DayOffset z = offset + 719468;
    const DayOffset era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const DayOffset y = static_cast<DayOffset>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (month <= 2)), static_cast<int>(month),
                     static_cast<int>(day)};
}

/// Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed input.
inline DayOffset parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("bad date '" + text + "' (expected YYYY-MM-DD)");
    auto num = [&](int pos, int len) {
        int v = 0;
        for (int i = pos; i < pos + len; ++i) {
            char c = text[static_cast<std::size_t>(i)];
            if (c < '0' || c > '9')
                throw std::invalid_argument("bad date '" + text + "' (expected YYYY-MM-DD)");
            v = v * 10 + (c - '0');
        }
        return v;
    };
    CivilDate d{num(0, 4), num(5, 2), num(8, 2)};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw std::invalid_argument("bad date '" + text + "' (out of range)");
    return day_offset_from_civil(d);
}

inline std::string format_date(DayOffset offset) {
    CivilDate d = civil_from_day_offset(offset);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return std::string(buf);
}

constexpr int kNumSeasons = 4;
constexpr int kNumWeekdays = 7;

/// Calendar lookups are pure functions of the day offset; the only external
/// state is the holiday set. Seasons are month-quarters (Dec-Feb, Mar-May,
/// Jun-Aug, Sep-Nov), rotated by two for the southern hemisphere.
class Calendar {
public:
    Calendar() = default;
    explicit Calendar(std::unordered_set<DayOffset> holidays, bool southern_hemisphere = false)
        : holidays_(std::move(holidays)), southern_(southern_hemisphere) {}

    bool holiday(DayOffset day) const { return holidays_.count(day) > 0; }

    /// 0=winter, 1=spring, 2=summer, 3=autumn (northern convention).
    int season(DayOffset day) const {
        int month = civil_from_day_offset(day).month;  // 1..12
        int s = (month % 12) / 3;                      // Dec..Feb -> 0, Mar..May -> 1, ...
        if (southern_) s = (s + 2) % kNumSeasons;
        return s;
    }

    /// 0=Sunday .. 6=Saturday. Day offset 0 (1970-01-01) was a Thursday.
    int day_of_week(DayOffset day) const {
        return static_cast<int>(((day + 4) % 7 + 7) % 7);
    }

    const std::unordered_set<DayOffset>& holidays() const { return holidays_; }
    bool southern_hemisphere() const { return southern_; }

private:
    std::unordered_set<DayOffset> holidays_;
    bool southern_ = false;
};

/// One item's daily sales history on a contiguous date grid. A true entry in
/// `missing` means the value at that offset is unknown (the stored number is
/// a placeholder and must not be read as a sale).
struct SalesSeries {
    std::string item_id;
    DayOffset start_day = 0;
    std::vector<double> values;
    std::vector<bool> missing;

    std::size_t length() const { return values.size(); }
    bool observed(std::size_t t) const { return !missing[t]; }
};

struct ItemMeta {
    std::string item_id;
    std::string subcategory_id;
    std::string category_id;
    std::string department_id;
    std::string super_department_id;
    double sales_quantile = 0.0;       // ascending: 1.0 = top seller
    double zero_sales_pct = 0.0;       // fraction of observed days with zero sales
};

struct ForecastResult {
    std::string item_id;
    DayOffset origin_day = 0;          // first forecast day
    int horizon = 0;
    std::vector<double> point_forecasts;
    std::string model_tag;
};

/// Reports invariant violations instead of throwing; an empty result means
/// the series is admissible.
inline std::vector<std::string> validate_series(const SalesSeries& s) {
    std::vector<std::string> violations;
    if (s.values.empty()) violations.push_back("K >= 1 violated: series is empty");
    if (s.values.size() != s.missing.size())
        violations.push_back("values and missing mask differ in length");
    const std::size_t k = std::min(s.values.size(), s.missing.size());
    for (std::size_t t = 0; t < k; ++t) {
        if (s.missing[t]) continue;
        if (!std::isfinite(s.values[t])) {
            violations.push_back("non-finite sale at offset " + std::to_string(t));
        } else if (s.values[t] < 0.0) {
            violations.push_back("negative sale at offset " + std::to_string(t));
        }
    }
    if (s.item_id.empty()) violations.push_back("empty item_id");
    return violations;
}

inline std::vector<std::string> validate_forecast(const ForecastResult& f) {
    std::vector<std::string> violations;
    if (f.horizon <= 0) violations.push_back("horizon must be positive");
    if (static_cast<int>(f.point_forecasts.size()) != f.horizon)
        violations.push_back("forecast length does not match horizon");
    for (double v : f.point_forecasts)
        if (!std::isfinite(v)) {
            violations.push_back("non-finite forecast value");
            break;
        }
    return violations;
}

}  // namespace demandcast
