#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pip/corpus.hpp"

namespace pip::corpus {

struct FetchOptions {
  int max_parallel = 4;
  int max_attempts = 3;
  // Exponential backoff with full jitter; base kept configurable so stub
  // tests run fast.
  int backoff_base_ms = 1000;
  uint64_t jitter_seed = 0;
};

struct FetchRecordResult {
  std::string canvas_uri;
  std::string path;  // final file path (relative to output_root)
  bool success = false;
  bool skipped = false;  // file already present
  size_t bytes = 0;
  int retry_count = 0;
  std::string error;
};

struct FetchReport {
  std::vector<FetchRecordResult> records;  // in input record order
  size_t downloaded = 0;
  size_t skipped = 0;
  size_t failed = 0;
};

// Downloads each record's full-resolution image to
// output_root/<robin_category>/<manifest-id>/<sequence_index>.jpg.
// Idempotent: existing files are skipped. Files are written to a temporary
// name and renamed, so a partial download is never visible under the final
// name. Individual failures are recorded; an unwritable output_root is
// fatal.
FetchReport fetch_corpus(const std::vector<CanvasRecord>& records,
                         const std::string& output_root,
                         const FetchOptions& options = {});

}  // namespace pip::corpus
