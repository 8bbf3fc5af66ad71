#pragma once

#include <string>
#include <utility>
#include <vector>

#include "orthosync/model.hpp"

namespace orthosync::io {

// Problem files are flat little-endian binary:
//   u64 n, u64 d, f64 sigma, u64 seed,
//   truth blocks row-major (n*d*d doubles),
//   observation blocks C_ij for i < j, row-major within each block.
// Diagonal blocks are identity and lower blocks are transposes, so only the
// strict upper triangle is stored.
void save_problem(const SyncProblem& problem, const std::string& path);
SyncProblem load_problem(const std::string& path);

// Lossless text form of the same content (17 significant digits).
void save_problem_text(const SyncProblem& problem, const std::string& path);

// Block stack files: u64 n, u64 d, then data row-major.
void save_blockstack(const BlockStack& stack, const std::string& path);
BlockStack load_blockstack(const std::string& path);
void save_blockstack_text(const BlockStack& stack, const std::string& path);

// key=value lines, one per entry.
void save_metadata(const std::vector<std::pair<std::string, std::string>>& kv,
                   const std::string& path);

}  // namespace orthosync::io
