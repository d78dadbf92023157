#pragma once

// Rebuilds the transaction tree from a trace, for op accounting and for
// invariant checks that need tree shape or per-node activity times. Restored
// transactions reappear in traces as txn_start events marked restored=1, so a
// replay never needs runtime state.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tcml/trace.hpp"

namespace tcml::rt {

struct ReplayNode {
  std::string parent;  // "" means the root
  std::vector<std::string> kids;
  // Committed workload ops riding on this node until it splices upward.
  std::int64_t credit = 0;
  std::int64_t last_activity = 0;
};

class TraceTree {
 public:
  explicit TraceTree(std::string binder = "op") : binder_(std::move(binder)) {}

  // Path components of "/a.0/b.1" are {"a.0", "b.1"}.
  static std::vector<std::string> components(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
      if (path[i] == '/') {
        ++i;
        continue;
      }
      std::size_t j = path.find('/', i);
      if (j == std::string::npos) j = path.size();
      out.push_back(path.substr(i, j - i));
      i = j;
    }
    return out;
  }

  bool has(const std::string& key) const { return nodes_.count(key) != 0; }

  const ReplayNode* find(const std::string& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  std::int64_t total_ops() const { return total_ops_; }

  // Events that do not change tree shape or activity are ignored.
  void apply(const TraceEvent& ev) {
    const std::string& kind = ev.kind;
    if (kind == "txn_start") {
      auto comps = components(ev.path);
      std::string parent = comps.size() > 1 ? comps[comps.size() - 2] : "";
      ensure(ev.txn, parent, ev.wall_nanos);
      bump(ev.path, ev.wall_nanos);
    } else if (kind == "co" || kind == "sync") {
      bump(ev.path, ev.wall_nanos);
    } else if (kind == "embed") {
      bump(ev.path, ev.wall_nanos);
      if (ev.get("unit_kind") == "txn") {
        std::string moved = ev.get("unit");
        auto comps = components(ev.path);
        std::string target = comps.empty() ? ev.txn : comps.back();
        if (!has(moved)) ensure(moved, "", ev.wall_nanos);
        if (!has(target)) ensure(target, "", ev.wall_nanos);
        unlink(moved);
        link(moved, target);
      }
    } else if (kind == "commit") {
      bump(ev.path, ev.wall_nanos);
      auto it = nodes_.find(ev.txn);
      if (it == nodes_.end()) return;
      std::int64_t credit =
          it->second.credit + (ev.get("src") == binder_ ? 1 : 0);
      std::string parent = it->second.parent;
      // Children of the dissolved node splice into its parent, keeping
      // whatever credit they have accumulated themselves.
      for (const std::string& kid : std::vector<std::string>(it->second.kids)) {
        unlink(kid);
        link(kid, parent);
      }
      if (parent.empty())
        total_ops_ += credit;
      else
        nodes_[parent].credit += credit;
      unlink(ev.txn);
      nodes_.erase(ev.txn);
    } else if (kind == "abort") {
      bump(ev.path, ev.wall_nanos);
      erase_subtree(ev.txn);
    }
  }

 private:
  void ensure(const std::string& key, const std::string& parent,
              std::int64_t t) {
    if (has(key)) return;
    ReplayNode n;
    n.parent = parent;
    n.last_activity = t;
    nodes_.emplace(key, std::move(n));
    if (!parent.empty()) {
      if (!has(parent)) ensure(parent, "", t);
      nodes_[parent].kids.push_back(key);
    }
  }

  void bump(const std::string& path, std::int64_t t) {
    for (const std::string& c : components(path)) {
      auto it = nodes_.find(c);
      if (it != nodes_.end()) it->second.last_activity = t;
    }
  }

  void link(const std::string& key, const std::string& parent) {
    nodes_[key].parent = parent;
    if (!parent.empty()) nodes_[parent].kids.push_back(key);
  }

  void unlink(const std::string& key) {
    auto it = nodes_.find(key);
    if (it == nodes_.end() || it->second.parent.empty()) return;
    auto pit = nodes_.find(it->second.parent);
    if (pit != nodes_.end()) {
      auto& kids = pit->second.kids;
      for (auto k = kids.begin(); k != kids.end(); ++k)
        if (*k == key) {
          kids.erase(k);
          break;
        }
    }
    it->second.parent.clear();
  }

  void erase_subtree(const std::string& key) {
    auto it = nodes_.find(key);
    if (it == nodes_.end()) return;
    for (const std::string& kid : std::vector<std::string>(it->second.kids))
      erase_subtree(kid);
    unlink(key);
    nodes_.erase(key);
  }

  std::map<std::string, ReplayNode> nodes_;
  std::string binder_;
  std::int64_t total_ops_ = 0;
};

}  // namespace tcml::rt
