#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grtm/eval.hpp"
#include "grtm/generator.hpp"
#include "grtm/model.hpp"

namespace grtm {

/*
 * Binary feature file, little-endian:
 *
 *   char[8]  "GRTMFEAT"
 *   u32      version (1)
 *   u32      number of users N
 *   u32      feature dimension D
 *   u32[N]   images per user
 *   f64[...] image vectors, user-major, D values each
 *
 * Model file, little-endian:
 *
 *   char[8]  "GRTMMODL"
 *   u32      version (1)
 *   f64 alpha, u32 K, f64 rho, u8 cov kind (0 diagonal, 1 full),
 *   u32 max_iters, f64 elbo_rel_tol, u64 seed
 *   u32      D
 *   K x { f64[D] mean, f64[D] variances | f64[D*D] column-major covariance }
 *   f64[K]   eta, f64 nu
 *   u32 N, u8 has_phi
 *   N x { f64[K] gamma, f64[K] usage, [u32 N_u, f64[N_u*K] row-major phi] }
 *   u32 trace length, f64[...] elbo trace
 */
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct IdMap {
    bool reindexed = false;
    std::vector<long long> original_ids; // original_ids[dense id]
};

/// Reads the binary format above, or CSV rows `user_id,f0,f1,...` (optional
/// header line, `#` comments). CSV user ids are mapped to dense ids in
/// ascending order; when that changes any id, the mapping is written next to
/// the input as `<path>.idmap`.
Corpus load_features(const std::filesystem::path& path, IdMap* id_map = nullptr);
void save_features(const Corpus& corpus, const std::filesystem::path& path);
void save_features_csv(const Corpus& corpus, const std::filesystem::path& path);

// One `u v` pair per line; `#` starts a comment.
LinkSet load_links(const std::filesystem::path& path);
void save_links(const LinkSet& links, const std::filesystem::path& path);

void save_model(const FittedModel& model, const std::filesystem::path& path, bool include_phi = true);
FittedModel load_model(const std::filesystem::path& path);

// Writes roc.csv, pr.csv and summary.txt into dir, each via a temporary file and rename.
void export_report(const EvalReport& report, const std::filesystem::path& dir);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

// Writes to `<path>.tmp` then renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Shortest decimal that round-trips, "inf"/"-inf" for infinities.
std::string format_real(double x);

} // namespace grtm
