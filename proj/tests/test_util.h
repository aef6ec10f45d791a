#ifndef PAIRCTX_TESTS_TEST_UTIL_H_
#define PAIRCTX_TESTS_TEST_UTIL_H_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <unistd.h>

namespace pairctx::testing {

// Example sentences from the task description.
inline constexpr std::string_view kGofSentence =
    "Mutations in SHP-2 phosphatase that cause hyperactivation of its "
    "catalytic activity have been identified in human leukemias, particularly "
    "juvenile myelomonocytic leukemia.";
inline constexpr std::string_view kRegSentence =
    "Lynch syndrome (LS) caused by mutations in DNA mismatch repair genes "
    "MLH1.";

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pairctx_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pairctx::testing

#endif  // PAIRCTX_TESTS_TEST_UTIL_H_
