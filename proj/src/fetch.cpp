#include "pip/fetch.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "pip/errors.hpp"

namespace pip::corpus {

namespace fs = std::filesystem;

namespace {

// Splits "http://host:port/path" into (scheme://host:port, /path).
std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("not an absolute URL: " + url);
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string safe_component(const std::string& s) {
  // Manifest ids are URIs; keep only the last path segment.
  size_t slash = s.find_last_of('/');
  std::string tail = slash == std::string::npos ? s : s.substr(slash + 1);
  if (tail.empty()) tail = "manifest";
  for (char& c : tail)
    if (c == ':' || c == '?' || c == '#') c = '_';
  return tail;
}

FetchRecordResult fetch_one(const CanvasRecord& rec, const fs::path& root,
                            const FetchOptions& options) {
  FetchRecordResult result;
  result.canvas_uri = rec.canvas_uri;

  std::string category =
      rec.robin_category ? std::string(1, *rec.robin_category) : "unknown";
  fs::path rel = fs::path(category) / safe_component(rec.manifest_id) /
                 (std::to_string(rec.sequence_index) + ".jpg");
  result.path = rel.string();
  fs::path target = root / rel;

  std::error_code ec;
  if (fs::exists(target, ec) && fs::file_size(target, ec) > 0) {
    result.success = true;
    result.skipped = true;
    result.bytes = fs::file_size(target, ec);
    return result;
  }
  fs::create_directories(target.parent_path(), ec);
  if (ec) {
    result.error = "cannot create " + target.parent_path().string();
    return result;
  }

  std::string url =
      build_image_url(rec, Region{}, Size{});  // full region, full size
  std::mt19937_64 rng(options.jitter_seed ^
                      std::hash<std::string>{}(rec.canvas_uri));
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    if (attempt > 0) {
      result.retry_count = attempt;
      int cap = options.backoff_base_ms << (attempt - 1);
      std::uniform_int_distribution<int> jitter(0, cap);
      std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
    }
    try {
      auto [host, path] = split_url(url);
      httplib::Client client(host);
      client.set_connection_timeout(30);
      client.set_read_timeout(120);
      auto res = client.Get(path);
      if (!res) {
        result.error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        result.error = "HTTP " + std::to_string(res->status);
        if (res->status >= 400 && res->status < 500 && res->status != 429)
          break;  // non-transient
        continue;
      }
      // Write-then-rename so readers never see a partial file.
      fs::path tmp = target;
      tmp += ".part";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
          result.error = "cannot write " + tmp.string();
          break;
        }
        out.write(res->body.data(),
                  static_cast<std::streamsize>(res->body.size()));
      }
      fs::rename(tmp, target, ec);
      if (ec) {
        result.error = "rename failed: " + ec.message();
        break;
      }
      result.success = true;
      result.bytes = res->body.size();
      result.error.clear();
      return result;
    } catch (const std::exception& e) {
      result.error = e.what();
    }
  }
  return result;
}

}  // namespace

FetchReport fetch_corpus(const std::vector<CanvasRecord>& records,
                         const std::string& output_root,
                         const FetchOptions& options) {
  if (options.max_parallel < 1)
    throw ValidationError("fetch_corpus requires max_parallel >= 1");
  fs::path root(output_root);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root))
    throw IoError("output root is not writable: " + output_root);
  // Probe writability up front; a bad root is fatal, not per-record.
  {
    fs::path probe = root / ".write-probe";
    std::ofstream out(probe);
    if (!out) throw IoError("output root is not writable: " + output_root);
    out.close();
    fs::remove(probe, ec);
  }

  FetchReport report;
  report.records.resize(records.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      report.records[i] = fetch_one(records[i], root, options);
    }
  };
  size_t workers = std::min<size_t>(options.max_parallel, records.size());
  std::vector<std::thread> threads;
  for (size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  for (const auto& r : report.records) {
    if (r.skipped)
      ++report.skipped;
    else if (r.success)
      ++report.downloaded;
    else
      ++report.failed;
  }
  return report;
}

}  // namespace pip::corpus
