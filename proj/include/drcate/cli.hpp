#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "drcate/types.hpp"

namespace drcate::cli {

enum ExitCode : int { success = 0, usage = 1, data_error = 2, failure_threshold = 3 };

// Fully resolved command configuration.
struct RunConfig {
  std::string command;

  // simulate
  std::string scenario = "linear";
  std::vector<Index> n{200};
  Index p = 0;
  Index replicates = 200;
  std::string query = "random";
  Index query_count = 100;
  bool fixed_query = false;

  // estimation
  std::vector<std::string> methods{"DR-Linear"};
  bool crossfit = false;
  Index draws = 500;
  Index burnin = 500;
  Index resamples = 250;
  std::uint64_t seed = 1;
  double clip = 0.01;
  std::string basis = "linear";
  int spline_df = 3;
  double level = 0.95;
  std::string outcome_terms = "full";
  std::string propensity_terms = "full";
  bool standardize = true;

  // analyze / univariate
  std::string data;
  std::string outcome;
  std::vector<std::string> treatment;
  std::vector<std::string> confounders;
  std::vector<std::string> modifiers;
  bool dichotomize = false;
  std::string query_file;
  std::string external_p1;
  std::string external_m1;
  std::string external_m0;
  std::vector<std::string> curves;  // modifiers to curve; empty = all
  Index grid = 100;

  // not echoed: they do not change results
  std::string out = ".";
  unsigned threads = 0;

  // Result-relevant settings as sorted key/value pairs, in config-file syntax.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Comment header embedded at the top of every output file.
std::string config_header(const RunConfig& config);

// Parses arguments (argv[0] is the program name) and runs the command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drcate::cli
