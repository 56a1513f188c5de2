#include "bvc/graded_core.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace bvc {

Config& config() {
  static Config c;
  return c;
}

int Partition::n() const {
  int m = 0;
  for (const auto& b : blocks) m += static_cast<int>(b.size());
  return m;
}

std::string Partition::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i) os << "|";
    os << "{";
    for (size_t j = 0; j < blocks[i].size(); ++j) {
      if (j) os << ",";
      os << blocks[i][j] + 1;
    }
    os << "}";
  }
  return os.str();
}

namespace {

void normalize_partition(Partition& p) {
  for (auto& b : p.blocks) std::sort(b.begin(), b.end());
  std::sort(p.blocks.begin(), p.blocks.end(),
            [](const auto& a, const auto& b) { return a.back() < b.back(); });
}

std::vector<Partition> build_partitions(int n) {
  std::vector<Partition> cur{Partition{}};
  for (int k = 0; k < n; ++k) {
    std::vector<Partition> next;
    for (const auto& p : cur) {
      for (size_t b = 0; b < p.blocks.size(); ++b) {
        Partition q = p;
        q.blocks[b].push_back(k);
        next.push_back(std::move(q));
      }
      Partition q = p;
      q.blocks.push_back({k});
      next.push_back(std::move(q));
    }
    cur = std::move(next);
  }
  for (auto& p : cur) normalize_partition(p);
  return cur;
}

}  // namespace

const std::vector<Partition>& enumerate_partitions(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<Partition>> cache;
  if (n < 0) throw InputError("negative arity");
  if (n > config().arity_cap)
    throw ResourceError("arity " + std::to_string(n) + " exceeds the cap " +
                        std::to_string(config().arity_cap));
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_partitions(n)).first;
  return it->second;
}

int koszul_sign(const Partition& p, const std::vector<int>& degrees) {
  std::vector<int> seq;
  for (const auto& b : p.blocks) seq.insert(seq.end(), b.begin(), b.end());
  return sort_sign(seq, [&](int i) { return degrees[i]; });
}

std::vector<int> insertion_blocks(const Partition& p) {
  std::vector<int> out;
  const int n = p.n();
  const int m = p.size();
  for (int i = 0; i < m; ++i)
    if (static_cast<int>(p.blocks[i].size()) == n - m + 1) out.push_back(i);
  return out;
}

bool same_block(const Partition& p, int a, int b) {
  for (const auto& bl : p.blocks) {
    bool ha = std::find(bl.begin(), bl.end(), a) != bl.end();
    bool hb = std::find(bl.begin(), bl.end(), b) != bl.end();
    if (ha || hb) return ha && hb;
  }
  return false;
}

int canonicalize(Key& tuple, const std::vector<int>& ghosts) {
  int s = sort_sign(tuple, [&](int i) { return ghosts[i]; });
  for (size_t i = 0; i + 1 < tuple.size(); ++i)
    if (tuple[i] == tuple[i + 1] && parity(ghosts[tuple[i]])) return 0;
  return s;
}

std::string key_str(const Key& k) {
  std::string s = "(";
  for (size_t i = 0; i < k.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(k[i]);
  }
  return s + ")";
}

std::vector<Key> symmetric_keys(int dim, int n, const std::vector<int>& ghosts) {
  std::vector<Key> out;
  Key cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == n) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < dim; ++i) {
      if (!cur.empty() && cur.back() == i && parity(ghosts[i])) continue;
      cur.push_back(i);
      self(self, i);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const size_t t = std::max(1, config().threads);
  if (t == 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errs(n);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += t) {
        try {
          fn(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

Rational factorial(int n) {
  Rational r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

int64_t bell_number(int n) {
  // Bell triangle.
  std::vector<int64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<int64_t> next{row.back()};
    for (int64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

}  // namespace bvc
