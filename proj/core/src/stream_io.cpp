#include "ovbsl/stream_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace ovbsl {

namespace {

constexpr std::string_view kStreamMagic = "# OVBS-STREAM v1";
constexpr std::string_view kSubspaceMagic = "# OVBS-SUBSPACE v1";

[[noreturn]] void format_fail(const std::string& path, std::uint64_t line, const std::string& msg) {
  throw Error(ErrorCode::format_error, path + ":" + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Value of "key=<int>" inside a header line.
std::optional<long long> header_int(std::string_view line, std::string_view key) {
  for (auto tok : split(line, ' ')) {
    tok = trim(tok);
    if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=') {
      auto val = tok.substr(key.size() + 1);
      long long v = 0;
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec == std::errc() && ptr == val.data() + val.size()) return v;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return in;
}

void write_row(std::ostream& os, const auto& values, Index n) {
  for (Index j = 0; j < n; ++j) {
    if (j) os << ',';
    os << format_double(values[j]);
  }
  os << '\n';
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 4);
}

void write_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 8);
}

void write_f64_le(std::ostream& os, double v) { write_u64_le(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32_le(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorCode::format_error, "unexpected end of binary data");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) {
    throw Error(ErrorCode::format_error, "unexpected end of binary data");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64_le(std::istream& is) { return std::bit_cast<double>(read_u64_le(is)); }

// ---------------------------------------------------------------------------
// StreamReader

StreamReader::StreamReader(const std::string& path)
    : in_(open_in(path, std::ios::in | std::ios::binary)), path_(path) {
  std::array<char, 4> magic{};
  in_.read(magic.data(), 4);
  if (in_.gcount() == 4 && std::string_view(magic.data(), 4) == "OVBD") {
    format_ = StreamFormat::binary;
    K_ = static_cast<Index>(read_u32_le(in_));
    if (K_ < 1) format_fail(path_, 0, "binary stream with K=0");
    return;
  }
  in_.clear();
  in_.seekg(0);

  std::string line;
  if (!std::getline(in_, line)) format_fail(path_, 1, "empty stream file");
  line_ = 1;
  const auto head = trim(line);
  if (head.substr(0, kStreamMagic.size()) != kStreamMagic) {
    format_fail(path_, 1, "missing '# OVBS-STREAM v1 K=<K>' header");
  }
  const auto K = header_int(head, "K");
  if (!K || *K < 1) format_fail(path_, 1, "header lacks a positive K");
  K_ = static_cast<Index>(*K);

  while (std::getline(in_, line)) {
    ++line_;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      auto body = t.substr(1);
      header_.emplace_back(trim(body));
      continue;
    }
    pending_ = std::string(t);
    break;
  }
}

std::optional<StreamSample> StreamReader::next() {
  return format_ == StreamFormat::csv ? next_csv() : next_binary();
}

void StreamReader::skip_to(std::uint64_t count) {
  while (count_ < count) {
    if (!next()) format_fail(path_, line_, "stream ended before sample " + std::to_string(count));
  }
}

std::optional<StreamSample> StreamReader::next_csv() {
  std::string line;
  std::string_view body;
  if (pending_) {
    line = std::move(*pending_);
    pending_.reset();
    body = line;
  } else {
    while (true) {
      if (!std::getline(in_, line)) return std::nullopt;
      ++line_;
      body = trim(line);
      if (!body.empty() && body.front() != '#') break;
    }
  }
  const auto tokens = split(body, ',');
  if (static_cast<Index>(tokens.size()) != K_) {
    format_fail(
        path_, line_,
        "expected " + std::to_string(K_) + " columns, found " + std::to_string(tokens.size()));
  }
  StreamSample s;
  s.index = ++count_;
  s.z = Vector::Zero(K_);
  s.phi.assign(static_cast<std::size_t>(K_), 0);
  for (Index k = 0; k < K_; ++k) {
    const auto tok = trim(tokens[static_cast<std::size_t>(k)]);
    if (tok == "NaN") continue;
    const auto v = parse_double(tok);
    if (!v || !std::isfinite(*v)) {
      format_fail(path_, line_,
                  "bad value '" + std::string(tok) + "' in column " + std::to_string(k + 1));
    }
    s.z[k] = *v;
    s.phi[static_cast<std::size_t>(k)] = 1;
  }
  return s;
}

std::optional<StreamSample> StreamReader::next_binary() {
  const auto mask_bytes = static_cast<std::size_t>((K_ + 7) / 8);
  std::vector<unsigned char> mask(mask_bytes);
  in_.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask_bytes));
  if (in_.gcount() == 0) return std::nullopt;
  if (static_cast<std::size_t>(in_.gcount()) != mask_bytes) {
    format_fail(path_, count_ + 1, "truncated mask in binary sample");
  }
  StreamSample s;
  s.index = ++count_;
  s.z = Vector::Zero(K_);
  s.phi.assign(static_cast<std::size_t>(K_), 0);
  for (Index k = 0; k < K_; ++k) {
    const auto byte = mask[static_cast<std::size_t>(k / 8)];
    if ((byte >> (k % 8)) & 1u) {
      s.phi[static_cast<std::size_t>(k)] = 1;
      s.z[k] = read_f64_le(in_);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// StreamWriter

StreamWriter::StreamWriter(const std::string& path, Index K, StreamFormat format,
                           const std::vector<std::string>& header)
    : out_(open_out(path, std::ios::out | std::ios::binary)), K_(K), format_(format) {
  if (format_ == StreamFormat::binary) {
    out_.write("OVBD", 4);
    write_u32_le(out_, static_cast<std::uint32_t>(K));
    return;
  }
  out_ << kStreamMagic << " K=" << K << '\n';
  for (const auto& h : header) out_ << "# " << h << '\n';
}

void StreamWriter::write(const StreamSample& sample) {
  if (sample.z.size() != K_)
    throw Error(ErrorCode::dimension_mismatch, "sample length differs from K");
  if (format_ == StreamFormat::binary) {
    std::vector<char> mask(static_cast<std::size_t>((K_ + 7) / 8), 0);
    for (Index k = 0; k < K_; ++k) {
      if (sample.phi[static_cast<std::size_t>(k)]) {
        mask[static_cast<std::size_t>(k / 8)] =
            static_cast<char>(mask[static_cast<std::size_t>(k / 8)] | (1 << (k % 8)));
      }
    }
    out_.write(mask.data(), static_cast<std::streamsize>(mask.size()));
    for (Index k = 0; k < K_; ++k) {
      if (sample.phi[static_cast<std::size_t>(k)]) write_f64_le(out_, sample.z[k]);
    }
    return;
  }
  for (Index k = 0; k < K_; ++k) {
    if (k) out_ << ',';
    if (sample.phi[static_cast<std::size_t>(k)]) {
      out_ << format_double(sample.z[k]);
    } else {
      out_ << "NaN";
    }
  }
  out_ << '\n';
}

void StreamWriter::write(const Vector& y) {
  StreamSample s;
  s.z = y;
  s.phi.assign(static_cast<std::size_t>(y.size()), 1);
  write(s);
}

void StreamWriter::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::io_error, "write failed");
}

BatchDataset read_dataset(const std::string& path, Index L) {
  StreamReader reader(path);
  BatchDataset data;
  data.dims = ModelDims{reader.K(), L};
  while (auto s = reader.next()) data.samples.push_back(std::move(*s));
  return data;
}

// ---------------------------------------------------------------------------
// Dense matrices and subspace files

void write_matrix_csv(const std::string& path, const std::string& tag, const Matrix& M) {
  auto out = open_out(path);
  out << "# " << tag << '\n';
  for (Index i = 0; i < M.rows(); ++i) write_row(out, M.row(i), M.cols());
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

namespace {

std::vector<std::vector<double>> read_rows(std::istream& in, const std::string& path,
                                           std::uint64_t& line_no, std::string* stop_comment) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (true) {
    const auto pos = in.tellg();
    if (!std::getline(in, line)) break;
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (stop_comment) {
        *stop_comment = std::string(t);
        return rows;
      }
      continue;
    }
    std::vector<double> row;
    for (auto tok : split(t, ',')) {
      const auto v = parse_double(tok);
      if (!v) format_fail(path, line_no, "bad number '" + std::string(trim(tok)) + "'");
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      format_fail(path, line_no,
                  "row has " + std::to_string(row.size()) + " columns, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
    (void)pos;
  }
  if (stop_comment) stop_comment->clear();
  return rows;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return M;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path, std::string* tag) {
  auto in = open_in(path);
  std::string first;
  std::uint64_t line_no = 0;
  if (std::getline(in, first)) {
    ++line_no;
    const auto t = trim(first);
    if (!t.empty() && t.front() == '#') {
      if (tag) *tag = std::string(trim(t.substr(1)));
    } else {
      in.seekg(0);
      line_no = 0;
    }
  }
  return to_matrix(read_rows(in, path, line_no, nullptr));
}

const Matrix& SubspaceSegments::at(std::uint64_t index) const {
  const Matrix* current = &segments.front().second;
  for (const auto& [start, U] : segments) {
    if (index >= start) current = &U;
  }
  return *current;
}

void write_subspace_file(const std::string& path, const SubspaceSegments& segs) {
  if (segs.segments.empty()) throw Error(ErrorCode::invalid_spec, "no subspace segments");
  const auto& U0 = segs.segments.front().second;
  auto out = open_out(path);
  out << kSubspaceMagic << " K=" << U0.rows() << " r=" << U0.cols() << '\n';
  for (const auto& [start, U] : segs.segments) {
    out << "# segment start=" << start << '\n';
    for (Index i = 0; i < U.rows(); ++i) write_row(out, U.row(i), U.cols());
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

SubspaceSegments read_subspace_file(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::uint64_t line_no = 0;
  if (!std::getline(in, line)) format_fail(path, 1, "empty subspace file");
  ++line_no;
  const auto head = trim(line);
  if (head.substr(0, kSubspaceMagic.size()) != kSubspaceMagic) {
    format_fail(path, 1, "missing '# OVBS-SUBSPACE v1' header");
  }
  const auto K = header_int(head, "K");
  const auto r = header_int(head, "r");
  if (!K || !r) format_fail(path, 1, "header lacks K or r");

  SubspaceSegments segs;
  std::string comment;
  if (!std::getline(in, line)) format_fail(path, 2, "no segments");
  ++line_no;
  comment = std::string(trim(line));
  while (!comment.empty()) {
    const auto start = header_int(comment, "start");
    if (!start || *start < 1) format_fail(path, line_no, "expected '# segment start=<index>'");
    const auto begin_line = line_no;
    Matrix U = to_matrix(read_rows(in, path, line_no, &comment));
    if (U.rows() != *K || U.cols() != *r) {
      format_fail(path, begin_line,
                  "segment is " + std::to_string(U.rows()) + "x" + std::to_string(U.cols()) +
                      ", header says " + std::to_string(*K) + "x" + std::to_string(*r));
    }
    segs.segments.emplace_back(static_cast<std::uint64_t>(*start), std::move(U));
  }
  if (segs.segments.empty()) format_fail(path, line_no, "no segments");
  return segs;
}

// ---------------------------------------------------------------------------
// Traces and reports

void write_trace(std::ostream& os, const MetricTrace& trace) {
  os << "# metric=" << trace.name << '\n';
  for (const auto& [idx, val] : trace.values) os << idx << ',' << format_double(val) << '\n';
}

void write_trace(const std::string& path, const MetricTrace& trace) {
  auto out = open_out(path);
  write_trace(out, trace);
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

MetricTrace read_trace(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::uint64_t line_no = 0;
  MetricTrace trace;
  if (!std::getline(in, line)) format_fail(path, 1, "empty trace");
  ++line_no;
  const auto head = trim(line);
  constexpr std::string_view prefix = "# metric=";
  if (head.substr(0, prefix.size()) != prefix) format_fail(path, 1, "missing '# metric=' header");
  trace.name = std::string(head.substr(prefix.size()));
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto parts = split(t, ',');
    if (parts.size() != 2) format_fail(path, line_no, "expected 'index,value'");
    std::uint64_t idx = 0;
    const auto p0 = trim(parts[0]);
    auto [ptr, ec] = std::from_chars(p0.data(), p0.data() + p0.size(), idx);
    const auto v = parse_double(parts[1]);
    if (ec != std::errc() || ptr != p0.data() + p0.size() || !v) {
      format_fail(path, line_no, "bad trace row");
    }
    trace.push(idx, *v);
  }
  return trace;
}

TraceWriter::TraceWriter(const std::string& path, const std::string& name)
    : out_(open_out(path)), path_(path) {
  out_ << "# metric=" << name << '\n';
}

void TraceWriter::push(std::uint64_t index, double value) {
  if (last_ && index <= *last_) {
    throw Error(ErrorCode::format_error, "trace indices must increase in " + path_);
  }
  last_ = index;
  out_ << index << ',' << format_double(value) << '\n';
}

void TraceWriter::flush() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::io_error, "write failed for " + path_);
}

void write_report(const std::string& path, const Report& report) {
  auto out = open_out(path);
  for (const auto& [k, v] : report) out << k << '=' << v << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

Report read_report(const std::string& path) {
  auto in = open_in(path);
  Report report;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) format_fail(path, line_no, "expected key=value");
    report.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
  }
  return report;
}

}  // namespace ovbsl
