#ifndef SCHWARZ_CLI_HPP
#define SCHWARZ_CLI_HPP

#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "schwarz/manysub.hpp"
#include "schwarz/spectrum.hpp"
#include "schwarz/twosub.hpp"

namespace schwarz::cli {

inline constexpr const char* kVersion = "schwarzlab v0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // bad keys, bad values, short fits
inline constexpr int kExitNumeric = 3;  // solver/optimizer/scan failure

/**
 * Flat key=value configuration. Files hold one `key = value` per line with
 * `#` comments; later assignments win. Typed getters record which keys were
 * read so finish() can reject unknown ones.
 */
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  RunConfig() = default;

  void set(const std::string& key, const std::string& value);
  void assign(const std::string& key_eq_value);  // "key=value"

  bool has(const std::string& key) const;
  std::string str(const std::string& key, const std::string& def) const;
  double num(const std::string& key, double def) const;
  int integer(const std::string& key, int def) const;
  bool flag(const std::string& key, bool def) const;
  cplx complex_pair(const std::string& stem, cplx def) const;  // stem_re/_im
  std::vector<double> num_list(const std::string& key) const;  // comma list

  /// Throws ConfigError naming any key that was never consumed.
  void finish() const;

  /// Sorted resolved view for CSV metadata.
  std::vector<std::pair<std::string, std::string>> entries() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
};

/** Rows of printf("%.12e") cells under a # metadata preamble. */
class CsvWriter {
 public:
  CsvWriter(std::string command, const RunConfig& cfg);

  void meta(const std::string& key, const std::string& value);
  void meta(const std::string& key, double value);
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& cells);

  /// Creates missing parent directories; never writes timestamps.
  void write(const std::string& path) const;
  std::string text() const;

 private:
  std::vector<std::string> pre_, lines_;
  std::size_t width_ = 0;
};

TwoSubConfig parse_twosub(const RunConfig& cfg);
FreqPolicy parse_policy(const RunConfig& cfg);
ChainSpec parse_chain(const RunConfig& cfg);

int cmd_rho2(const RunConfig& cfg, std::ostream& log);
int cmd_opt2(const RunConfig& cfg, std::ostream& log);
int cmd_chain(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_grid(const RunConfig& cfg, std::ostream& log);
int cmd_blocklu(const RunConfig& cfg, std::ostream& log);

/// Dispatch by subcommand name; maps ConfigError to 2, numeric errors to 3.
int run(const std::string& command, const RunConfig& cfg, std::ostream& log);

}  // namespace schwarz::cli

#endif  // SCHWARZ_CLI_HPP
