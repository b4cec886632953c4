#pragma once

// Stimulus code generation: m-sequences, Gold codes, two-duration flash
// modulation, event decomposition and reconvolution structure matrices.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bds::codec {

struct BitSequence {
  std::vector<std::uint8_t> bits;
  double rate_hz = 60.0;

  std::size_t size() const { return bits.size(); }
  std::size_t ones() const;
  bool operator==(const BitSequence&) const = default;
};

struct Codebook {
  std::vector<BitSequence> codes;

  std::size_t size() const { return codes.size(); }
  std::size_t length() const { return codes.empty() ? 0 : codes.front().size(); }
  double rate_hz() const { return codes.empty() ? 0.0 : codes.front().rate_hz; }
};

/// Throws std::invalid_argument unless the codebook has at least two distinct,
/// equal-length, non-empty binary codes sharing one presentation rate.
void validate(const Codebook& codebook);

enum class EventKind : std::uint8_t { short_flash = 0, long_flash = 1 };

inline constexpr std::size_t kEventKinds = 2;

struct Event {
  EventKind kind;
  std::size_t onset_bit;
  bool operator==(const Event&) const = default;
};

struct EventStream {
  std::vector<Event> events;
  std::size_t source_length = 0;
};

/// Binary M x T matrix, M = kEventKinds * response_length. Row block k holds
/// shifted copies of the identity for events of kind k.
struct StructureMatrix {
  Eigen::MatrixXd matrix;
  std::size_t response_length = 0;
  std::size_t class_index = 0;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

// Polynomials are bitmasks: bit k is the coefficient of x^k. x^3 + x + 1 is 0b1011.
int polynomial_degree(std::uint32_t poly);

/// Fibonacci LFSR with characteristic polynomial `poly`. The register is seeded
/// with bit i of `seed` as output sample i.
BitSequence generate_mls(std::uint32_t poly, std::uint32_t seed, double rate_hz = 60.0);

/// Periodic cross-correlation in the +/-1 alphabet of a against b cyclically
/// advanced by `shift`.
int periodic_correlation(const BitSequence& a, const BitSequence& b, std::size_t shift);

/// The 2^n + 1 Gold codes of a preferred pair: both m-sequences followed by
/// a XOR (b advanced by k) for k = 0 .. 2^n - 2.
Codebook generate_gold(std::uint32_t poly_a, std::uint32_t poly_b, int degree,
                       double rate_hz = 60.0);

inline constexpr std::uint32_t kDefaultPolyA = 0x43;  // x^6 + x + 1
inline constexpr std::uint32_t kDefaultPolyB = 0x67;  // x^6 + x^5 + x^2 + x + 1

/// 2x upsample XOR a double-rate 1,0,1,0 clock. Bit 1 becomes 01, bit 0
/// becomes 10, so every run of ones in the output has length 1 or 2.
BitSequence modulate(const BitSequence& code);
Codebook modulate(const Codebook& codebook);

/// Inverse of modulate.
BitSequence demodulate(const BitSequence& modulated);

/// Cyclic repetition of `code` truncated to `n_bits`.
BitSequence tile(const BitSequence& code, std::size_t n_bits);

EventStream decompose_events(const BitSequence& code);

/// round-half-up(onset_bit * fs / rate_hz)
std::size_t onset_sample(std::size_t onset_bit, double fs, double rate_hz);

StructureMatrix build_structure_matrix(const EventStream& events, double fs, double rate_hz,
                                       std::ptrdiff_t samples, std::ptrdiff_t response_length,
                                       std::size_t class_index = 0);

/// One structure matrix per code, each code tiled to cover `samples` at `fs`.
std::vector<StructureMatrix> structure_matrices(const Codebook& codebook, double fs,
                                                std::size_t samples,
                                                std::size_t response_length);

/// Greedy elimination: while more than k codes remain, find the pair with the
/// largest absolute template correlation and drop the member with the larger
/// summed |correlation| to the rest (higher index on ties). Returns kept indices
/// in ascending order.
std::vector<std::size_t> select_subset_indices(std::span<const Eigen::VectorXd> templates,
                                               std::size_t k);
Codebook select_subset(const Codebook& codebook, std::span<const Eigen::VectorXd> templates,
                       std::size_t k);

/// Largest absolute Pearson correlation over distinct template pairs.
double max_abs_correlation(std::span<const Eigen::VectorXd> templates);

// Text format: optional "# rate_hz=<int>" header, then one '0'/'1' line per code.
void write_codebook(std::ostream& out, const Codebook& codebook);
Codebook read_codebook(std::istream& in);
void write_codebook_file(const std::string& path, const Codebook& codebook);
Codebook read_codebook_file(const std::string& path);

}  // namespace bds::codec
