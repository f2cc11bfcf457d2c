#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "emofuse/dataset.hpp"
#include "emofuse/model.hpp"
#include "emofuse/training.hpp"
#include "emofuse/vision.hpp"

namespace emofuse {

/// Held-out evaluation outcome for one actor.
struct FoldResult {
  std::string held_out_actor;
  double accuracy = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::int64_t n_test = 0;
  std::int64_t epochs_ran = 0;
};

struct LooSummary {
  std::vector<FoldResult> per_fold;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation
  FusionMode mode = FusionMode::AudioVideo;
  std::vector<std::vector<std::int64_t>> pooled_confusion;
};

/// All clips of the named actor become the test side, everything else the
/// train side; the two sides partition the manifest.
std::pair<std::vector<ClipRecord>, std::vector<ClipRecord>> split_loo(
    const DatasetManifest& manifest, const std::string& actor);

/// Mean and population standard deviation over fold accuracies plus the
/// pooled confusion matrix. Folds are ordered by actor id first, which
/// makes the result independent of the order they are handed in.
LooSummary summarize(std::vector<FoldResult> per_fold);

struct LooOptions {
  ModelConfig model;
  TrainConfig train;
  FusionMode mode = FusionMode::AudioVideo;
  /// When set, finished folds are persisted here (write-then-rename) and
  /// re-runs skip them.
  std::filesystem::path fold_dir;
  std::uint64_t seed = 0;
  /// Augmented copies added per training clip (0 disables augmentation).
  std::int64_t augment_copies = 0;
  AugmentOptions augment;
};

/// Leave-one-actor-out protocol: for every actor, a fresh model (the
/// visual-only variant in video mode) is trained on the remaining actors
/// with one seeded actor carved out for validation, then evaluated on the
/// held-out actor. A failed fold aborts with the actor named.
LooSummary run_loo(const DatasetManifest& manifest, const LooOptions& options,
                   ClipLoader& loader);

// Fold persistence and summary output.
void save_fold_result(const FoldResult& fold, const std::filesystem::path& path);
FoldResult load_fold_result(const std::filesystem::path& path);
std::filesystem::path fold_file_path(const std::filesystem::path& dir,
                                     const std::string& actor);

/// Machine-readable per-fold rows: actor,accuracy,n_test,epochs.
void write_summary_csv(const LooSummary& summary,
                       const std::filesystem::path& path);
/// Human-readable table with the mean/std footer.
std::string format_summary_table(const LooSummary& summary);

}  // namespace emofuse
