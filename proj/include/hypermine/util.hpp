#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypermine {

using Rng = std::mt19937_64;

// Splits on a single character; keeps empty fields.
std::vector<std::string> split(std::string_view line, char sep);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Strict parse of a full field; throws ParseError naming `where` on failure.
double parse_double(std::string_view field, const std::string& where);
long long parse_int(std::string_view field, const std::string& where);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Uniform index in [0, n). Implemented on top of the raw engine so results
// do not depend on the standard library's distribution implementation.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Uniform double in [0, 1).
double uniform_unit(Rng& rng);

// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  shuffle(std::span<T>(items), rng);
}

}  // namespace hypermine
