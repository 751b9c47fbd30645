#ifndef OVBSL_STREAM_IO_HPP
#define OVBSL_STREAM_IO_HPP

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ovbsl/metrics.hpp"
#include "ovbsl/types.hpp"

namespace ovbsl {

/// Text stream:    "# OVBS-STREAM v1 K=<K>", extra "#" lines, then one CSV row
///                 per sample with the literal token NaN for missing entries.
/// Binary stream:  "OVBD", u32 K, then per sample a K-bit mask (bit k is bit
///                 k % 8 of byte k / 8) followed by the observed entries as
///                 little-endian f64.
enum class StreamFormat { csv, binary };

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Little-endian primitives shared by the binary formats.
void write_u32_le(std::ostream& os, std::uint32_t v);
void write_u64_le(std::ostream& os, std::uint64_t v);
void write_f64_le(std::ostream& os, double v);
std::uint32_t read_u32_le(std::istream& is);
std::uint64_t read_u64_le(std::istream& is);
double read_f64_le(std::istream& is);

class StreamReader {
 public:
  explicit StreamReader(const std::string& path);

  Index K() const noexcept { return K_; }
  StreamFormat format() const noexcept { return format_; }
  /// Comment lines that followed the CSV magic line (without the "# ").
  const std::vector<std::string>& header() const noexcept { return header_; }

  /// Next sample with index 1, 2, ...; nothing at end of stream.
  std::optional<StreamSample> next();
  /// Reads and discards samples until `count` have been consumed in total.
  void skip_to(std::uint64_t count);

  std::uint64_t line() const noexcept { return line_; }

 private:
  std::optional<StreamSample> next_csv();
  std::optional<StreamSample> next_binary();

  std::ifstream in_;
  std::string path_;
  StreamFormat format_ = StreamFormat::csv;
  Index K_ = 0;
  std::vector<std::string> header_;
  std::optional<std::string> pending_;  // first data line read while scanning the header
  std::uint64_t line_ = 0;
  std::uint64_t count_ = 0;
};

class StreamWriter {
 public:
  StreamWriter(const std::string& path, Index K, StreamFormat format = StreamFormat::csv,
               const std::vector<std::string>& header = {});

  void write(const StreamSample& sample);
  /// Writes a fully observed row.
  void write(const Vector& y);
  void flush();

 private:
  std::ofstream out_;
  Index K_;
  StreamFormat format_;
};

/// Reads every sample of a stream file into memory.
BatchDataset read_dataset(const std::string& path, Index L);

/// Dense matrix as CSV rows with a leading "# <tag>" line.
void write_matrix_csv(const std::string& path, const std::string& tag, const Matrix& M);
Matrix read_matrix_csv(const std::string& path, std::string* tag = nullptr);

/// Subspace file: "# OVBS-SUBSPACE v1 K=<K> r=<r>" then one block per
/// segment, each introduced by "# segment start=<index>".
struct SubspaceSegments {
  std::vector<std::pair<std::uint64_t, Matrix>> segments;  // (first index, U)
  const Matrix& at(std::uint64_t index) const;
  const Matrix& last() const { return segments.back().second; }
};
void write_subspace_file(const std::string& path, const SubspaceSegments& segs);
SubspaceSegments read_subspace_file(const std::string& path);

/// "# metric=<name>" then "index,value" rows.
void write_trace(std::ostream& os, const MetricTrace& trace);
void write_trace(const std::string& path, const MetricTrace& trace);
MetricTrace read_trace(const std::string& path);

/// Appends trace rows to a file as they are produced, so long runs keep no
/// history in memory.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const std::string& name);

  void push(std::uint64_t index, double value);
  void flush();

 private:
  std::ofstream out_;
  std::string path_;
  std::optional<std::uint64_t> last_;
};

/// Report: one "key=value" per line in insertion order.
using Report = std::vector<std::pair<std::string, std::string>>;
void write_report(const std::string& path, const Report& report);
Report read_report(const std::string& path);

}  // namespace ovbsl

#endif  // OVBSL_STREAM_IO_HPP
