#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedhcdr/types.hpp"

namespace fedhcdr {

struct RawInteraction {
  std::string user_id;
  std::string item_id;
  std::string domain_tag;
  std::optional<std::int64_t> timestamp;
};

using Edge = std::pair<int, int>;  // (user_index, item_index)

struct InteractionSet {
  std::string domain_tag;
  int n_users = 0;
  int n_items = 0;
  std::vector<Edge> train_edges;
  std::vector<Edge> valid_edges;
  std::vector<Edge> test_edges;
  std::vector<std::string> user_keys;  // dense index -> external key
  std::vector<std::string> item_keys;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  // users with <3 interactions in this domain: everything went to train
  std::vector<int> all_train_users;
};

struct Scenario {
  std::string name;
  std::vector<InteractionSet> domains;
};

// Per-pass counts from the iterative filtering in build_scenario, useful when
// chasing a mismatch against expected corpus statistics.
struct FilterStageStats {
  int iteration = 0;
  std::string stage;  // "item_filter", "user_filter", "overlap", "train_support"
  std::string domain_tag;
  std::int64_t users = 0;
  std::int64_t items = 0;
  std::int64_t interactions = 0;
};

// Reads a TSV of user<TAB>item[<TAB>timestamp]. Keeps first occurrence of a
// (user,item) pair, preserves order, skips blank lines, throws on malformed
// lines with the 1-based line number.
std::vector<RawInteraction> load_interactions(const std::filesystem::path& path,
                                              const std::string& domain_tag);

struct SplitResult {
  std::vector<Edge> train;
  std::vector<Edge> valid;
  std::vector<Edge> test;
  std::vector<int> all_train_users;
};

// Per user with >=3 interactions, moves one uniform pick to valid and one to
// test; users below the threshold keep everything in train and are flagged.
// user_items[u] must be this user's (deduplicated) item list.
SplitResult leave_one_out_split(const std::vector<std::vector<int>>& user_items, Rng& rng);

// k uniform draws without replacement from [0,n_items) minus `exclusion`
// (sorted ascending). Throws if fewer than k candidates exist.
std::vector<int> sample_negatives(int k, int n_items, const std::vector<int>& exclusion,
                                  Rng& rng);

SpMat incidence_matrix(const std::vector<Edge>& train_edges, int n_users, int n_items);

// Applies the item/user support filters and the cross-domain user
// intersection to a fixed point, splits leave-one-out, and drops items left
// without train support (restarting the pipeline when that happens).
Scenario build_scenario(const std::vector<std::vector<RawInteraction>>& raw,
                        int min_user_inter = 5, int min_item_inter = 10,
                        std::uint64_t seed = 0, const std::string& name = "scenario",
                        std::vector<FilterStageStats>* stats = nullptr);

// Consistency checks for the InteractionSet/Scenario invariants; throws on
// violation. Used by tests and after deserialization.
void validate_scenario(const Scenario& s);

}  // namespace fedhcdr
