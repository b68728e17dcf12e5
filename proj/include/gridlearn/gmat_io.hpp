#pragma once
#include <filesystem>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace gridlearn {

// Binary matrix container: 16-byte magic ("GMAT0001" + 8 zero bytes),
// u64 rows, u64 cols, then the payload as row-major little-endian f64.
void write_gmat(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_gmat(const std::filesystem::path& path);

// Plain CSV, one row per line, values printed with round-trip precision.
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

// Sparse triplet CSV "row,col,value" for entries with |value| >= zero_tol.
void write_sparse_triplets(const std::filesystem::path& path,
                           const Eigen::MatrixXd& m, double zero_tol);

// Flat key=value manifest, one pair per line, keys written in sorted order.
void write_manifest(const std::filesystem::path& path,
                    const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

// Round-trip double formatting used by all text outputs.
std::string format_double(double v);

}  // namespace gridlearn
