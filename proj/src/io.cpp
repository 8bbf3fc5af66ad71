#include "orthosync/io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>

#include "orthosync/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace orthosync::io {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_block_rowmajor(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

void read_block_rowmajor(std::istream& in, Eigen::Ref<Eigen::MatrixXd> m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64(in);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

}  // namespace

void save_problem(const SyncProblem& problem, const std::string& path) {
  auto out = open_out(path, std::ios::binary);
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  write_u64(out, static_cast<std::uint64_t>(n));
  write_u64(out, static_cast<std::uint64_t>(d));
  write_f64(out, problem.sigma);
  write_u64(out, problem.seed);
  write_block_rowmajor(out, problem.truth.data);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      write_block_rowmajor(out, problem.observation.block(i, j));
  if (!out) throw IoError("write failed: " + path);
}

SyncProblem load_problem(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  const int n = static_cast<int>(read_u64(in));
  const int d = static_cast<int>(read_u64(in));
  if (n < 2 || d < 1 || n > (1 << 20) || d > (1 << 12))
    throw IoError("corrupt problem header: " + path);
  SyncProblem problem;
  problem.sigma = read_f64(in);
  problem.seed = read_u64(in);
  problem.truth = BlockStack(n, d);
  read_block_rowmajor(in, problem.truth.data);
  problem.observation = Observation(n, d);
  Observation& c = problem.observation;
  for (int i = 0; i < n; ++i) c.block(i, i) = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::MatrixXd blk(d, d);
      read_block_rowmajor(in, blk);
      c.block(i, j) = blk;
      c.block(j, i) = blk.transpose();
    }
  if (!in) throw IoError("truncated problem file: " + path);
  return problem;
}

void save_problem_text(const SyncProblem& problem, const std::string& path) {
  auto out = open_out(path, std::ios::out);
  out.precision(std::numeric_limits<double>::max_digits10);
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  out << "n " << n << "\nd " << d << "\nsigma " << problem.sigma << "\nseed "
      << problem.seed << "\n";
  out << "truth\n";
  for (Eigen::Index r = 0; r < problem.truth.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c)
      out << problem.truth.data(r, c) << (c + 1 < d ? ' ' : '\n');
  }
  out << "observation_upper\n";
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      out << "block " << i << ' ' << j << '\n';
      const auto blk = problem.observation.block(i, j);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          out << blk(r, c) << (c + 1 < d ? ' ' : '\n');
    }
  if (!out) throw IoError("write failed: " + path);
}

void save_blockstack(const BlockStack& stack, const std::string& path) {
  auto out = open_out(path, std::ios::binary);
  write_u64(out, static_cast<std::uint64_t>(stack.n));
  write_u64(out, static_cast<std::uint64_t>(stack.d));
  write_block_rowmajor(out, stack.data);
  if (!out) throw IoError("write failed: " + path);
}

BlockStack load_blockstack(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  const int n = static_cast<int>(read_u64(in));
  const int d = static_cast<int>(read_u64(in));
  if (n < 1 || d < 1 || n > (1 << 20) || d > (1 << 12))
    throw IoError("corrupt block stack header: " + path);
  BlockStack stack(n, d);
  read_block_rowmajor(in, stack.data);
  if (!in) throw IoError("truncated block stack file: " + path);
  return stack;
}

void save_blockstack_text(const BlockStack& stack, const std::string& path) {
  auto out = open_out(path, std::ios::out);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "n " << stack.n << "\nd " << stack.d << "\n";
  for (Eigen::Index r = 0; r < stack.data.rows(); ++r)
    for (Eigen::Index c = 0; c < stack.d; ++c)
      out << stack.data(r, c) << (c + 1 < stack.d ? ' ' : '\n');
  if (!out) throw IoError("write failed: " + path);
}

void save_metadata(const std::vector<std::pair<std::string, std::string>>& kv,
                   const std::string& path) {
  auto out = open_out(path, std::ios::out);
  for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace orthosync::io
