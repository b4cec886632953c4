#include "bds/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bds::codec {

std::size_t BitSequence::ones() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void validate(const Codebook& codebook) {
  if (codebook.size() < 2) {
    throw std::invalid_argument("codebook: need at least 2 codes");
  }
  const std::size_t length = codebook.length();
  std::set<std::vector<std::uint8_t>> seen;
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const BitSequence& code = codebook.codes[i];
    if (code.bits.empty() || code.size() != length) {
      throw std::invalid_argument("codebook: code " + std::to_string(i) +
                                  " is empty or has a different length");
    }
    if (code.rate_hz != codebook.rate_hz()) {
      throw std::invalid_argument("codebook: mixed presentation rates");
    }
    for (auto b : code.bits) {
      if (b > 1) throw std::invalid_argument("codebook: non-binary value in code " + std::to_string(i));
    }
    if (!seen.insert(code.bits).second) {
      throw std::invalid_argument("codebook: duplicate code at index " + std::to_string(i));
    }
  }
}

int polynomial_degree(std::uint32_t poly) {
  return poly == 0 ? -1 : 31 - std::countl_zero(poly);
}

BitSequence generate_mls(std::uint32_t poly, std::uint32_t seed, double rate_hz) {
  const int n = polynomial_degree(poly);
  if (n < 2 || n > 16) {
    throw std::invalid_argument("generate_mls: polynomial degree must be in [2, 16], got " +
                                std::to_string(n));
  }
  const std::uint32_t mask = (1u << n) - 1;
  if (seed == 0 || (seed & ~mask) != 0) {
    throw std::invalid_argument("generate_mls: seed must be a nonzero " + std::to_string(n) +
                                "-bit register state");
  }
  const std::uint32_t taps = poly & mask;
  const std::size_t period_max = (std::size_t{1} << n) - 1;

  // state bit i holds output sample t+i; the next sample is the parity of the taps.
  BitSequence out;
  out.rate_hz = rate_hz;
  out.bits.reserve(period_max);
  std::uint32_t state = seed;
  std::size_t period = 0;
  do {
    out.bits.push_back(static_cast<std::uint8_t>(state & 1u));
    const std::uint32_t feedback = static_cast<std::uint32_t>(std::popcount(state & taps) & 1);
    state = (state >> 1) | (feedback << (n - 1));
    ++period;
  } while (state != seed && period <= period_max);

  if (period != period_max) {
    std::ostringstream msg;
    msg << "generate_mls: polynomial 0x" << std::hex << poly << std::dec << " is not primitive ("
        << (state == seed ? "period " + std::to_string(period) : std::string("register never returns to seed"))
        << ", expected " << period_max << ")";
    throw std::invalid_argument(msg.str());
  }
  return out;
}

int periodic_correlation(const BitSequence& a, const BitSequence& b, std::size_t shift) {
  const std::size_t p = a.size();
  if (b.size() != p || p == 0) {
    throw std::invalid_argument("periodic_correlation: sequences must have equal non-zero length");
  }
  int acc = 0;
  for (std::size_t t = 0; t < p; ++t) {
    acc += (a.bits[t] == b.bits[(t + shift) % p]) ? 1 : -1;
  }
  return acc;
}

Codebook generate_gold(std::uint32_t poly_a, std::uint32_t poly_b, int degree, double rate_hz) {
  if (poly_a == poly_b) {
    throw std::invalid_argument("generate_gold: degenerate pair (identical polynomials)");
  }
  if (polynomial_degree(poly_a) != degree || polynomial_degree(poly_b) != degree) {
    throw std::invalid_argument("generate_gold: both polynomials must have degree " +
                                std::to_string(degree));
  }
  const BitSequence a = generate_mls(poly_a, 1, rate_hz);
  const BitSequence b = generate_mls(poly_b, 1, rate_hz);
  const std::size_t p = a.size();

  // Preferred pairs have three-valued cross-correlation {-1, -t, t-2}.
  const int t = 1 + (1 << ((degree + 2) / 2));
  for (std::size_t k = 0; k < p; ++k) {
    const int c = periodic_correlation(a, b, k);
    if (c != -1 && c != -t && c != t - 2) {
      std::ostringstream msg;
      msg << "generate_gold: 0x" << std::hex << poly_a << " / 0x" << poly_b << std::dec
          << " is not a preferred pair (cross-correlation " << c << " at shift " << k << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  Codebook book;
  book.codes.reserve(p + 2);
  book.codes.push_back(a);
  book.codes.push_back(b);
  for (std::size_t k = 0; k < p; ++k) {
    BitSequence code;
    code.rate_hz = rate_hz;
    code.bits.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      code.bits[i] = a.bits[i] ^ b.bits[(i + k) % p];
    }
    book.codes.push_back(std::move(code));
  }
  return book;
}

BitSequence modulate(const BitSequence& code) {
  BitSequence out;
  out.rate_hz = code.rate_hz * 2.0;
  out.bits.reserve(code.size() * 2);
  for (auto b : code.bits) {
    out.bits.push_back(static_cast<std::uint8_t>(b ^ 1u));
    out.bits.push_back(b);
  }
  return out;
}

Codebook modulate(const Codebook& codebook) {
  Codebook out;
  out.codes.reserve(codebook.size());
  for (const auto& code : codebook.codes) out.codes.push_back(modulate(code));
  return out;
}

BitSequence demodulate(const BitSequence& modulated) {
  if (modulated.size() % 2 != 0) {
    throw std::invalid_argument("demodulate: odd-length input");
  }
  BitSequence out;
  out.rate_hz = modulated.rate_hz / 2.0;
  out.bits.reserve(modulated.size() / 2);
  for (std::size_t i = 1; i < modulated.size(); i += 2) out.bits.push_back(modulated.bits[i]);
  return out;
}

BitSequence tile(const BitSequence& code, std::size_t n_bits) {
  if (code.bits.empty()) throw std::invalid_argument("tile: empty code");
  BitSequence out;
  out.rate_hz = code.rate_hz;
  out.bits.resize(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) out.bits[i] = code.bits[i % code.size()];
  return out;
}

EventStream decompose_events(const BitSequence& code) {
  EventStream stream;
  stream.source_length = code.size();
  std::size_t i = 0;
  while (i < code.size()) {
    if (code.bits[i] == 0) {
      ++i;
      continue;
    }
    std::size_t run = 0;
    while (i + run < code.size() && code.bits[i + run] == 1) ++run;
    if (run > 2) {
      throw std::invalid_argument("decompose_events: run of " + std::to_string(run) +
                                  " ones at bit " + std::to_string(i) +
                                  "; not a two-duration modulated code");
    }
    stream.events.push_back({run == 1 ? EventKind::short_flash : EventKind::long_flash, i});
    i += run;
  }
  return stream;
}

std::size_t onset_sample(std::size_t onset_bit, double fs, double rate_hz) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(onset_bit) * fs / rate_hz + 0.5));
}

StructureMatrix build_structure_matrix(const EventStream& events, double fs, double rate_hz,
                                       std::ptrdiff_t samples, std::ptrdiff_t response_length,
                                       std::size_t class_index) {
  if (samples <= 0) throw std::invalid_argument("build_structure_matrix: T must be positive");
  if (response_length < 1 || response_length > samples) {
    throw std::invalid_argument("build_structure_matrix: need 1 <= L <= T");
  }
  if (!(fs > 0.0) || !(rate_hz > 0.0)) {
    throw std::invalid_argument("build_structure_matrix: fs and rate must be positive");
  }
  const Eigen::Index length = response_length;
  StructureMatrix out;
  out.response_length = static_cast<std::size_t>(response_length);
  out.class_index = class_index;
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kEventKinds) * length, samples);
  for (const Event& e : events.events) {
    const auto s = static_cast<Eigen::Index>(onset_sample(e.onset_bit, fs, rate_hz));
    const Eigen::Index block = static_cast<Eigen::Index>(e.kind) * length;
    for (Eigen::Index j = 0; j < length && s + j < samples; ++j) {
      out.matrix(block + j, s + j) = 1.0;
    }
  }
  return out;
}

std::vector<StructureMatrix> structure_matrices(const Codebook& codebook, double fs,
                                                std::size_t samples,
                                                std::size_t response_length) {
  const double rate = codebook.rate_hz();
  const auto n_bits = static_cast<std::size_t>(std::ceil(static_cast<double>(samples) * rate / fs)) + 1;
  std::vector<StructureMatrix> out;
  out.reserve(codebook.size());
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const EventStream events = decompose_events(tile(codebook.codes[i], n_bits));
    out.push_back(build_structure_matrix(events, fs, rate, static_cast<std::ptrdiff_t>(samples),
                                         static_cast<std::ptrdiff_t>(response_length), i));
  }
  return out;
}

namespace {

Eigen::MatrixXd abs_correlation_matrix(std::span<const Eigen::VectorXd> templates) {
  const auto n = static_cast<Eigen::Index>(templates.size());
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::VectorXd> centered;
  centered.reserve(templates.size());
  for (const auto& t : templates) {
    Eigen::VectorXd c = t.array() - t.mean();
    const double norm = c.norm();
    if (norm > 0.0) c /= norm;
    centered.push_back(std::move(c));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      corr(i, j) = corr(j, i) = std::abs(centered[i].dot(centered[j]));
    }
  }
  return corr;
}

}  // namespace

double max_abs_correlation(std::span<const Eigen::VectorXd> templates) {
  if (templates.size() < 2) return 0.0;
  return abs_correlation_matrix(templates).maxCoeff();
}

std::vector<std::size_t> select_subset_indices(std::span<const Eigen::VectorXd> templates,
                                               std::size_t k) {
  if (k < 2) throw std::invalid_argument("select_subset: k must be at least 2");
  if (k > templates.size()) {
    throw std::invalid_argument("select_subset: k exceeds the number of codes");
  }
  const Eigen::MatrixXd corr = abs_correlation_matrix(templates);
  std::vector<std::size_t> kept(templates.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;

  while (kept.size() > k) {
    std::size_t best_a = 0, best_b = 1;
    double best = -1.0;
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        const double c = corr(static_cast<Eigen::Index>(kept[a]), static_cast<Eigen::Index>(kept[b]));
        if (c > best) {
          best = c;
          best_a = a;
          best_b = b;
        }
      }
    }
    auto load = [&](std::size_t pos) {
      double sum = 0.0;
      for (std::size_t other : kept) {
        sum += corr(static_cast<Eigen::Index>(kept[pos]), static_cast<Eigen::Index>(other));
      }
      return sum;
    };
    const std::size_t drop = load(best_a) > load(best_b) ? best_a : best_b;
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return kept;
}

Codebook select_subset(const Codebook& codebook, std::span<const Eigen::VectorXd> templates,
                       std::size_t k) {
  if (templates.size() != codebook.size()) {
    throw std::invalid_argument("select_subset: one template per code required");
  }
  Codebook out;
  for (std::size_t i : select_subset_indices(templates, k)) out.codes.push_back(codebook.codes[i]);
  return out;
}

void write_codebook(std::ostream& out, const Codebook& codebook) {
  out << "# rate_hz=" << static_cast<long long>(std::llround(codebook.rate_hz())) << '\n';
  for (const auto& code : codebook.codes) {
    for (auto b : code.bits) out << (b ? '1' : '0');
    out << '\n';
  }
}

Codebook read_codebook(std::istream& in) {
  Codebook book;
  double rate = 0.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("rate_hz=");
      if (pos != std::string::npos) {
        try {
          rate = std::stod(line.substr(pos + 8));
        } catch (const std::exception&) {
          throw std::invalid_argument("codebook line " + std::to_string(line_no) + ": bad rate_hz");
        }
      }
      continue;
    }
    BitSequence code;
    for (char c : line) {
      if (c != '0' && c != '1') {
        throw std::invalid_argument("codebook line " + std::to_string(line_no) +
                                    ": expected only '0'/'1'");
      }
      code.bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    book.codes.push_back(std::move(code));
  }
  if (rate <= 0.0) rate = 120.0;
  for (auto& code : book.codes) code.rate_hz = rate;
  validate(book);
  return book;
}

void write_codebook_file(const std::string& path, const Codebook& codebook) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_codebook(out, codebook);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Codebook read_codebook_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open codebook " + path);
  return read_codebook(in);
}

}  // namespace bds::codec
