#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slotgen {

enum class Errc {
    empty_page,
    duplicate_slot,
    missing_entity,
    dangling_marker,
    empty_sentence,
    shape_mismatch,
    index_out_of_range,
    non_finite_gradient,
    unknown_language,
    unresolved_placeholder,
    diverged_loss,
    invalid_template,
    empty_source,
    empty_reference,
    length_mismatch,
    io_error,
    config_error,
};

const char* errc_name(Errc c);

/// Library-wide exception. `code()` identifies the failure class; the CLI
/// maps config/io errors to exit 2 and everything else to exit 3.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

/// Deterministic RNG. Wraps mt19937_64 but derives all values from raw
/// engine output with fixed arithmetic, so sequences are reproducible
/// across standard library implementations (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent sub-stream; `stream` distinguishes forks of the same parent.
    Rng fork(std::uint64_t stream) {
        std::uint64_t s = next_u64();
        return Rng(s ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

private:
    std::mt19937_64 eng_;
};

// ---- string helpers ----

std::vector<std::string> split_whitespace(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& tokens, std::string_view sep);
std::string trim(std::string_view text);
std::string lowercase_ascii(std::string_view text);

/// Splits a UTF-8 string into code point substrings. Invalid lead bytes are
/// passed through as single-byte units.
std::vector<std::string> utf8_chars(std::string_view text);

// ---- file helpers ----

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);

}  // namespace slotgen
