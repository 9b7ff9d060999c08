#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace recurml::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Maximal runs of [A-Za-z0-9], lowercased.
std::vector<std::string> tokenize(std::string_view text);

// Collapse all whitespace runs to single spaces and trim.
std::string normalize_whitespace(std::string_view s);

/// ISO-8601 calendar date. Comparison is field-wise, consistent with
/// lexicographic order on the YYYY-MM-DD form.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;
    std::string to_string() const;
};

std::optional<Date> parse_date(std::string_view s);

// RFC-4180-ish CSV: quoted fields, embedded commas and doubled quotes.
std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

/// Deterministic Fisher-Yates shuffle. std::shuffle's draw sequence is
/// implementation-defined, so seeds would not be portable across stdlibs.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace recurml::util
