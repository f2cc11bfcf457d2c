#include "emofuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "emofuse/error.hpp"

namespace emofuse {

namespace {

using std::int64_t;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= std::uint64_t(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return out;
}

std::vector<std::vector<int64_t>> zero_confusion(std::size_t n) {
  return std::vector<std::vector<int64_t>>(n, std::vector<int64_t>(n, 0));
}

}  // namespace

std::pair<std::vector<ClipRecord>, std::vector<ClipRecord>> split_loo(
    const DatasetManifest& manifest, const std::string& actor) {
  std::vector<ClipRecord> train, test;
  for (const ClipRecord& r : manifest.records) {
    (r.actor_id == actor ? test : train).push_back(r);
  }
  if (test.empty()) {
    throw ConfigError("actor '" + actor + "' not present in the manifest");
  }
  return {std::move(train), std::move(test)};
}

LooSummary summarize(std::vector<FoldResult> per_fold) {
  if (per_fold.empty()) throw ConfigError("summarize needs at least one fold");
  std::sort(per_fold.begin(), per_fold.end(),
            [](const FoldResult& a, const FoldResult& b) {
              return a.held_out_actor < b.held_out_actor;
            });

  LooSummary summary;
  const std::size_t n_classes = per_fold.front().confusion.size();
  summary.pooled_confusion = zero_confusion(n_classes);

  double mean = 0.0;
  for (const FoldResult& f : per_fold) {
    mean += f.accuracy;
    for (std::size_t i = 0; i < n_classes && i < f.confusion.size(); ++i) {
      for (std::size_t j = 0; j < n_classes; ++j) {
        summary.pooled_confusion[i][j] += f.confusion[i][j];
      }
    }
  }
  mean /= double(per_fold.size());

  double var = 0.0;
  for (const FoldResult& f : per_fold) {
    var += (f.accuracy - mean) * (f.accuracy - mean);
  }
  var /= double(per_fold.size());  // population std over the fold accuracies

  summary.mean_accuracy = mean;
  summary.std_accuracy = std::sqrt(var);
  summary.per_fold = std::move(per_fold);
  return summary;
}

std::filesystem::path fold_file_path(const std::filesystem::path& dir,
                                     const std::string& actor) {
  return dir / ("fold_" + sanitize(actor) + ".csv");
}

void save_fold_result(const FoldResult& fold,
                      const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.precision(17);
    out << "actor,accuracy,n_test,epochs_ran\n";
    out << fold.held_out_actor << "," << fold.accuracy << "," << fold.n_test
        << "," << fold.epochs_ran << "\n";
    for (const auto& row : fold.confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ",";
        out << row[j];
      }
      out << "\n";
    }
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);  // atomic publish
}

FoldResult load_fold_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fold file " + path.string());
  std::string header, values;
  if (!std::getline(in, header) || header != "actor,accuracy,n_test,epochs_ran" ||
      !std::getline(in, values)) {
    throw FormatError(path.string() + ": unrecognized fold file header");
  }
  FoldResult fold;
  {
    std::istringstream fields(values);
    std::string acc, n_test, epochs;
    if (!std::getline(fields, fold.held_out_actor, ',') ||
        !std::getline(fields, acc, ',') || !std::getline(fields, n_test, ',') ||
        !std::getline(fields, epochs)) {
      throw FormatError(path.string() + ": bad fold record '" + values + "'");
    }
    fold.accuracy = std::stod(acc);
    fold.n_test = std::stoll(n_test);
    fold.epochs_ran = std::stoll(epochs);
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<int64_t> row;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) row.push_back(std::stoll(cell));
    fold.confusion.push_back(std::move(row));
  }
  return fold;
}

LooSummary run_loo(const DatasetManifest& manifest, const LooOptions& options,
                   ClipLoader& loader) {
  const std::vector<std::string> actors = manifest.actor_ids();
  if (actors.size() < 2) {
    throw ConfigError("leave-one-out needs at least 2 actors, got " +
                      std::to_string(actors.size()));
  }
  const bool with_audio = options.mode == FusionMode::AudioVideo;
  if (!options.fold_dir.empty()) {
    std::filesystem::create_directories(options.fold_dir);
  }

  std::vector<FoldResult> folds;
  for (const std::string& actor : actors) {
    if (!options.fold_dir.empty()) {
      const auto path = fold_file_path(options.fold_dir, actor);
      if (std::filesystem::exists(path)) {
        folds.push_back(load_fold_result(path));
        continue;
      }
    }

    try {
      auto [train_records, test_records] = split_loo(manifest, actor);

      // Validation carve-out: one seeded actor from the training side, so
      // early stopping never sees the held-out identity. With a single
      // training actor there is nothing to carve out and the epoch cap
      // alone applies.
      std::vector<std::string> train_actors;
      for (const ClipRecord& r : train_records) train_actors.push_back(r.actor_id);
      std::sort(train_actors.begin(), train_actors.end());
      train_actors.erase(std::unique(train_actors.begin(), train_actors.end()),
                         train_actors.end());
      std::string val_actor;
      if (train_actors.size() >= 2) {
        std::mt19937_64 rng(options.seed ^ fnv1a(actor));
        val_actor = train_actors[std::size_t(rng() % train_actors.size())];
      }

      std::vector<ClipSample> train_samples, val_samples;
      for (const ClipRecord& r : train_records) {
        ClipSample s = loader.load(r, with_audio);
        if (r.actor_id == val_actor) {
          val_samples.push_back(std::move(s));
          continue;
        }
        train_samples.push_back(s);
        // Augmented variants stay on the training side with their original.
        if (options.augment_copies > 0) {
          const VisualSample base{s.visual};
          const std::uint64_t clip_seed = options.seed ^ fnv1a(r.clip_id);
          const auto expanded = expand_dataset(base, clip_seed,
                                               options.augment_copies,
                                               options.augment);
          for (std::size_t i = 1; i < expanded.size(); ++i) {
            ClipSample aug = s;
            aug.clip_id = s.clip_id + "#aug" + std::to_string(i);
            aug.visual = expanded[i].stack;
            train_samples.push_back(std::move(aug));
          }
        }
      }

      ModelConfig model_cfg = options.model;
      model_cfg.mode = options.mode;
      model_cfg.init_seed = options.model.init_seed ^ fnv1a(actor);
      const FusionModel model = init_model(model_cfg);

      const TrainResult trained =
          train(model, train_samples, val_samples, options.train);

      std::vector<ClipSample> test_samples;
      for (const ClipRecord& r : test_records) {
        test_samples.push_back(loader.load(r, with_audio));
      }
      const EvalResult eval = evaluate(trained.model, test_samples);

      FoldResult fold;
      fold.held_out_actor = actor;
      fold.accuracy = eval.accuracy;
      fold.confusion = eval.confusion;
      fold.n_test = int64_t(test_samples.size());
      fold.epochs_ran = int64_t(trained.reports.size());

      if (!options.fold_dir.empty()) {
        save_fold_result(fold, fold_file_path(options.fold_dir, actor));
      }
      folds.push_back(std::move(fold));
    } catch (const Error& e) {
      throw Error("fold for actor '" + actor + "' failed: " + e.what());
    }
  }

  LooSummary summary = summarize(std::move(folds));
  summary.mode = options.mode;
  return summary;
}

void write_summary_csv(const LooSummary& summary,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "actor,accuracy,n_test,epochs\n";
  for (const FoldResult& f : summary.per_fold) {
    out << f.held_out_actor << "," << f.accuracy << "," << f.n_test << ","
        << f.epochs_ran << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_summary_table(const LooSummary& summary) {
  std::ostringstream out;
  out << "mode: "
      << (summary.mode == FusionMode::AudioVideo ? "audio+video" : "video-only")
      << "\n";
  out << std::left << std::setw(16) << "actor" << std::right << std::setw(10)
      << "accuracy" << std::setw(8) << "n" << std::setw(8) << "epochs" << "\n";
  for (const FoldResult& f : summary.per_fold) {
    out << std::left << std::setw(16) << f.held_out_actor << std::right
        << std::setw(10) << std::fixed << std::setprecision(4) << f.accuracy
        << std::setw(8) << f.n_test << std::setw(8) << f.epochs_ran << "\n";
  }
  out << "mean accuracy over " << summary.per_fold.size() << " actors: "
      << std::fixed << std::setprecision(4) << summary.mean_accuracy << "\n";
  out << "standard deviation: " << std::fixed << std::setprecision(4)
      << summary.std_accuracy << "\n";
  return out.str();
}

}  // namespace emofuse
