#include "fedhcdr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace fedhcdr {

namespace {

std::string make_pair_key(const std::string& u, const std::string& v) {
  std::string k;
  k.reserve(u.size() + v.size() + 1);
  k += u;
  k += '\x1f';
  k += v;
  return k;
}

}  // namespace

std::vector<RawInteraction> load_interactions(const std::filesystem::path& path,
                                              const std::string& domain_tag) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path.string());

  std::vector<RawInteraction> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    auto fail = [&](const std::string& what) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed interaction line (" + what + ")");
    };
    if (fields.size() < 2 || fields.size() > 3) fail("expected 2 or 3 tab-separated fields");
    if (fields[0].empty()) fail("empty user id");
    if (fields[1].empty()) fail("empty item id");

    RawInteraction r;
    r.user_id = fields[0];
    r.item_id = fields[1];
    r.domain_tag = domain_tag;
    if (fields.size() == 3) {
      std::int64_t ts = 0;
      const char* b = fields[2].data();
      const char* e = b + fields[2].size();
      auto [p, ec] = std::from_chars(b, e, ts);
      if (ec != std::errc() || p != e) fail("bad timestamp '" + fields[2] + "'");
      r.timestamp = ts;
    }
    if (seen.insert(make_pair_key(r.user_id, r.item_id)).second) out.push_back(std::move(r));
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading " + path.string());
  return out;
}

SplitResult leave_one_out_split(const std::vector<std::vector<int>>& user_items, Rng& rng) {
  SplitResult res;
  for (int u = 0; u < static_cast<int>(user_items.size()); ++u) {
    std::vector<int> items = user_items[u];
    if (items.size() < 3) {
      for (int it : items) res.train.emplace_back(u, it);
      if (!items.empty()) res.all_train_users.push_back(u);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_valid(0, items.size() - 1);
    const std::size_t vi = pick_valid(rng);
    const int valid_item = items[vi];
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(vi));
    std::uniform_int_distribution<std::size_t> pick_test(0, items.size() - 1);
    const std::size_t ti = pick_test(rng);
    const int test_item = items[ti];
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(ti));

    for (int it : items) res.train.emplace_back(u, it);
    res.valid.emplace_back(u, valid_item);
    res.test.emplace_back(u, test_item);
  }
  return res;
}

std::vector<int> sample_negatives(int k, int n_items, const std::vector<int>& exclusion,
                                  Rng& rng) {
  if (k < 0) throw std::invalid_argument("sample_negatives: k < 0");
  const int candidates = n_items - static_cast<int>(exclusion.size());
  if (k > candidates)
    throw std::invalid_argument("sample_negatives: only " + std::to_string(candidates) +
                                " candidates for k=" + std::to_string(k));
  if (k == 0) return {};

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  if (candidates < 64 || 2 * k >= candidates) {
    // enumerate candidates, partial Fisher-Yates
    std::vector<int> pool;
    pool.reserve(static_cast<std::size_t>(candidates));
    std::size_t ei = 0;
    for (int v = 0; v < n_items; ++v) {
      while (ei < exclusion.size() && exclusion[ei] < v) ++ei;
      if (ei < exclusion.size() && exclusion[ei] == v) continue;
      pool.push_back(v);
    }
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[d(rng)]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
  } else {
    std::unordered_set<int> chosen;
    std::uniform_int_distribution<int> d(0, n_items - 1);
    while (static_cast<int>(out.size()) < k) {
      const int v = d(rng);
      if (std::binary_search(exclusion.begin(), exclusion.end(), v)) continue;
      if (!chosen.insert(v).second) continue;
      out.push_back(v);
    }
  }
  return out;
}

SpMat incidence_matrix(const std::vector<Edge>& train_edges, int n_users, int n_items) {
  std::vector<Triplet> trips;
  trips.reserve(train_edges.size());
  for (const auto& [u, v] : train_edges) {
    if (u < 0 || u >= n_users || v < 0 || v >= n_items)
      throw std::out_of_range("incidence_matrix: edge index out of range");
    trips.emplace_back(u, v, 1.0);
  }
  SpMat H(n_users, n_items);
  H.setFromTriplets(trips.begin(), trips.end(), [](double, double) { return 1.0; });
  H.makeCompressed();
  return H;
}

namespace {

struct Pair {
  std::string user;
  std::string item;
};

using DomainPairs = std::vector<Pair>;

void note_stats(std::vector<FilterStageStats>* stats, int iteration, const std::string& stage,
                const std::string& tag, const DomainPairs& pairs) {
  if (!stats) return;
  std::unordered_set<std::string> users, items;
  for (const auto& p : pairs) {
    users.insert(p.user);
    items.insert(p.item);
  }
  stats->push_back(FilterStageStats{iteration, stage, tag,
                                    static_cast<std::int64_t>(users.size()),
                                    static_cast<std::int64_t>(items.size()),
                                    static_cast<std::int64_t>(pairs.size())});
}

}  // namespace

Scenario build_scenario(const std::vector<std::vector<RawInteraction>>& raw,
                        int min_user_inter, int min_item_inter, std::uint64_t seed,
                        const std::string& name, std::vector<FilterStageStats>* stats) {
  const std::size_t n_domains = raw.size();
  if (n_domains < 2) throw std::invalid_argument("build_scenario: need at least 2 domains");
  for (std::size_t d = 0; d < n_domains; ++d)
    if (raw[d].empty())
      throw std::invalid_argument("build_scenario: domain " + std::to_string(d) + " is empty");

  std::vector<std::string> tags(n_domains);
  std::vector<DomainPairs> base(n_domains);
  for (std::size_t d = 0; d < n_domains; ++d) {
    tags[d] = raw[d].front().domain_tag;
    std::unordered_set<std::string> seen;
    for (const auto& r : raw[d]) {
      if (r.user_id.empty() || r.item_id.empty())
        throw std::invalid_argument("build_scenario: empty user or item key");
      if (seen.insert(make_pair_key(r.user_id, r.item_id)).second)
        base[d].push_back(Pair{r.user_id, r.item_id});
    }
  }

  // items removed because they ended up with no train support after a split
  std::vector<std::unordered_set<std::string>> banned(n_domains);

  while (true) {
    std::vector<DomainPairs> pairs(n_domains);
    for (std::size_t d = 0; d < n_domains; ++d)
      for (const auto& p : base[d])
        if (!banned[d].count(p.item)) pairs[d].push_back(p);

    // iterate item filter / user filter / overlap to a fixed point
    int iteration = 0;
    bool changed = true;
    while (changed) {
      changed = false;
      ++iteration;

      for (std::size_t d = 0; d < n_domains; ++d) {
        std::unordered_map<std::string, int> item_count;
        for (const auto& p : pairs[d]) ++item_count[p.item];
        DomainPairs kept;
        kept.reserve(pairs[d].size());
        for (const auto& p : pairs[d])
          if (item_count[p.item] >= min_item_inter) kept.push_back(p);
        if (kept.size() != pairs[d].size()) changed = true;
        pairs[d] = std::move(kept);
        note_stats(stats, iteration, "item_filter", tags[d], pairs[d]);
      }

      std::unordered_map<std::string, int> user_total;
      for (std::size_t d = 0; d < n_domains; ++d)
        for (const auto& p : pairs[d]) ++user_total[p.user];
      for (std::size_t d = 0; d < n_domains; ++d) {
        DomainPairs kept;
        kept.reserve(pairs[d].size());
        for (const auto& p : pairs[d])
          if (user_total[p.user] >= min_user_inter) kept.push_back(p);
        if (kept.size() != pairs[d].size()) changed = true;
        pairs[d] = std::move(kept);
        note_stats(stats, iteration, "user_filter", tags[d], pairs[d]);
      }

      std::unordered_map<std::string, unsigned> presence;
      for (std::size_t d = 0; d < n_domains; ++d) {
        std::unordered_set<std::string> users_here;
        for (const auto& p : pairs[d]) users_here.insert(p.user);
        for (const auto& u : users_here) presence[u] += 1;
      }
      for (std::size_t d = 0; d < n_domains; ++d) {
        DomainPairs kept;
        kept.reserve(pairs[d].size());
        for (const auto& p : pairs[d])
          if (presence[p.user] == n_domains) kept.push_back(p);
        if (kept.size() != pairs[d].size()) changed = true;
        pairs[d] = std::move(kept);
        note_stats(stats, iteration, "overlap", tags[d], pairs[d]);
      }
    }

    // shared user universe, dense indices in sorted external-key order
    std::set<std::string> user_set;
    for (const auto& p : pairs[0]) user_set.insert(p.user);
    if (user_set.empty())
      throw std::runtime_error("build_scenario: filtering left an empty scenario");

    Scenario scenario;
    scenario.name = name;
    std::vector<std::string> user_keys(user_set.begin(), user_set.end());
    std::unordered_map<std::string, int> user_index;
    for (int i = 0; i < static_cast<int>(user_keys.size()); ++i) user_index[user_keys[i]] = i;

    bool restart = false;
    for (std::size_t d = 0; d < n_domains; ++d) {
      InteractionSet set;
      set.domain_tag = tags[d];
      set.n_users = static_cast<int>(user_keys.size());
      set.user_keys = user_keys;
      set.user_index = user_index;

      std::set<std::string> item_set;
      for (const auto& p : pairs[d]) item_set.insert(p.item);
      set.item_keys.assign(item_set.begin(), item_set.end());
      set.n_items = static_cast<int>(set.item_keys.size());
      for (int j = 0; j < set.n_items; ++j) set.item_index[set.item_keys[j]] = j;

      std::vector<std::vector<int>> user_items(set.user_keys.size());
      for (const auto& p : pairs[d])
        user_items[static_cast<std::size_t>(user_index[p.user])].push_back(set.item_index[p.item]);
      for (auto& lst : user_items) std::sort(lst.begin(), lst.end());

      Rng split_rng(mix_seed(seed, "split", d));
      SplitResult split = leave_one_out_split(user_items, split_rng);
      set.train_edges = std::move(split.train);
      set.valid_edges = std::move(split.valid);
      set.test_edges = std::move(split.test);
      set.all_train_users = std::move(split.all_train_users);

      // re-filter items that ended up only in valid/test
      std::vector<int> train_support(static_cast<std::size_t>(set.n_items), 0);
      for (const auto& [u, v] : set.train_edges) ++train_support[static_cast<std::size_t>(v)];
      for (int j = 0; j < set.n_items; ++j) {
        if (train_support[static_cast<std::size_t>(j)] == 0) {
          banned[d].insert(set.item_keys[static_cast<std::size_t>(j)]);
          restart = true;
        }
      }
      note_stats(stats, 0, "train_support", tags[d], pairs[d]);
      scenario.domains.push_back(std::move(set));
    }
    if (restart) continue;
    return scenario;
  }
}

void validate_scenario(const Scenario& s) {
  if (s.domains.size() < 2) throw std::runtime_error("scenario: fewer than 2 domains");
  const auto& keys0 = s.domains.front().user_keys;
  for (const auto& d : s.domains) {
    if (d.n_users != static_cast<int>(keys0.size()) || d.user_keys != keys0)
      throw std::runtime_error("scenario: user universe differs across domains");
    std::set<Edge> train(d.train_edges.begin(), d.train_edges.end());
    std::set<Edge> valid(d.valid_edges.begin(), d.valid_edges.end());
    std::set<Edge> test(d.test_edges.begin(), d.test_edges.end());
    if (train.size() != d.train_edges.size())
      throw std::runtime_error("scenario: duplicate train edges in " + d.domain_tag);

    std::vector<int> valid_per_user(static_cast<std::size_t>(d.n_users), 0);
    std::vector<int> test_per_user(valid_per_user);
    std::vector<int> inter_per_user(valid_per_user);
    std::vector<int> item_train(static_cast<std::size_t>(d.n_items), 0);
    auto check_edge = [&](const Edge& e) {
      if (e.first < 0 || e.first >= d.n_users || e.second < 0 || e.second >= d.n_items)
        throw std::runtime_error("scenario: edge out of range in " + d.domain_tag);
    };
    for (const auto& e : d.train_edges) {
      check_edge(e);
      ++inter_per_user[static_cast<std::size_t>(e.first)];
      ++item_train[static_cast<std::size_t>(e.second)];
    }
    for (const auto& e : d.valid_edges) {
      check_edge(e);
      if (train.count(e) || test.count(e))
        throw std::runtime_error("scenario: split overlap in " + d.domain_tag);
      ++valid_per_user[static_cast<std::size_t>(e.first)];
      ++inter_per_user[static_cast<std::size_t>(e.first)];
    }
    for (const auto& e : d.test_edges) {
      check_edge(e);
      if (train.count(e) || valid.count(e))
        throw std::runtime_error("scenario: split overlap in " + d.domain_tag);
      ++test_per_user[static_cast<std::size_t>(e.first)];
      ++inter_per_user[static_cast<std::size_t>(e.first)];
    }
    for (int u = 0; u < d.n_users; ++u) {
      const bool qualifies = inter_per_user[static_cast<std::size_t>(u)] >= 3;
      const int nv = valid_per_user[static_cast<std::size_t>(u)];
      const int nt = test_per_user[static_cast<std::size_t>(u)];
      if (qualifies && (nv != 1 || nt != 1))
        throw std::runtime_error("scenario: user " + std::to_string(u) +
                                 " lacks held-out edges in " + d.domain_tag);
      if (!qualifies && (nv != 0 || nt != 0))
        throw std::runtime_error("scenario: under-threshold user has held-out edges");
      if (inter_per_user[static_cast<std::size_t>(u)] == 0)
        throw std::runtime_error("scenario: user " + std::to_string(u) + " absent from " +
                                 d.domain_tag);
    }
    for (int j = 0; j < d.n_items; ++j)
      if (item_train[static_cast<std::size_t>(j)] == 0)
        throw std::runtime_error("scenario: item without train support in " + d.domain_tag);
  }
}

}  // namespace fedhcdr
