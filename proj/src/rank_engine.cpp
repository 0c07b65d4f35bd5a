#include "seqrank/rank_engine.hpp"

#include <algorithm>
#include <cmath>

#include "seqrank/rng.hpp"

namespace seqrank {

void RankState::update_size(std::int32_t t) {
  Node& nd = nodes_[t];
  nd.size = nd.mult;
  if (nd.left >= 0) nd.size += nodes_[nd.left].size;
  if (nd.right >= 0) nd.size += nodes_[nd.right].size;
}

std::int32_t RankState::rotate_right(std::int32_t t) {
  const std::int32_t l = nodes_[t].left;
  nodes_[t].left = nodes_[l].right;
  nodes_[l].right = t;
  update_size(t);
  update_size(l);
  return l;
}

std::int32_t RankState::rotate_left(std::int32_t t) {
  const std::int32_t r = nodes_[t].right;
  nodes_[t].right = nodes_[r].left;
  nodes_[r].left = t;
  update_size(t);
  update_size(r);
  return r;
}

std::int32_t RankState::insert_node(std::int32_t t, double x, bool& fresh) {
  if (t < 0) {
    Node nd;
    nd.key = x;
    nd.prio = mix64(0x51a9b32c6f84d1e7ULL + ++prio_counter_);
    fresh = true;
    nodes_.push_back(nd);
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }
  if (x == nodes_[t].key) {
    nodes_[t].mult += 1;
    nodes_[t].size += 1;
    return t;
  }
  if (x < nodes_[t].key) {
    nodes_[t].left = insert_node(nodes_[t].left, x, fresh);
    update_size(t);
    if (nodes_[nodes_[t].left].prio > nodes_[t].prio) t = rotate_right(t);
  } else {
    nodes_[t].right = insert_node(nodes_[t].right, x, fresh);
    update_size(t);
    if (nodes_[nodes_[t].right].prio > nodes_[t].prio) t = rotate_left(t);
  }
  return t;
}

RankPair RankState::insert_and_rank(double x) {
  if (!std::isfinite(x)) {
    throw InvalidObservation("non-finite observation");
  }
  bool fresh = false;
  root_ = insert_node(root_, x, fresh);
  n_ += 1;
  RankPair out;
  out.lt = below(x);
  out.le = out.lt + at(x);
  out.n = n_;
  return out;
}

std::int64_t RankState::below(double x) const {
  std::int64_t count = 0;
  std::int32_t t = root_;
  while (t >= 0) {
    const Node& nd = nodes_[t];
    if (x <= nd.key) {
      t = nd.left;
    } else {
      count += nd.mult;
      if (nd.left >= 0) count += nodes_[nd.left].size;
      t = nd.right;
    }
  }
  return count;
}

std::int64_t RankState::at(double x) const {
  std::int32_t t = root_;
  while (t >= 0) {
    const Node& nd = nodes_[t];
    if (x == nd.key) return nd.mult;
    t = (x < nd.key) ? nd.left : nd.right;
  }
  return 0;
}

std::vector<std::pair<double, std::int64_t>> RankState::sorted_values() const {
  std::vector<std::pair<double, std::int64_t>> out;
  out.reserve(nodes_.size());
  // Iterative in-order traversal.
  std::vector<std::int32_t> stack;
  std::int32_t t = root_;
  while (t >= 0 || !stack.empty()) {
    while (t >= 0) {
      stack.push_back(t);
      t = nodes_[t].left;
    }
    t = stack.back();
    stack.pop_back();
    out.emplace_back(nodes_[t].key, nodes_[t].mult);
    t = nodes_[t].right;
  }
  return out;
}

std::int32_t RankState::build_balanced(
    std::span<const std::pair<double, std::int64_t>> values) {
  if (values.empty()) return -1;
  const std::size_t mid = values.size() / 2;
  Node nd;
  nd.key = values[mid].first;
  nd.mult = values[mid].second;
  nd.prio = mix64(0x51a9b32c6f84d1e7ULL + ++prio_counter_);
  nodes_.push_back(nd);
  const std::int32_t me = static_cast<std::int32_t>(nodes_.size()) - 1;
  nodes_[me].left = build_balanced(values.first(mid));
  nodes_[me].right = build_balanced(values.subspan(mid + 1));
  // A balanced rebuild ignores priorities; queries do not depend on shape,
  // and later inserts re-heapify locally.
  update_size(me);
  return me;
}

RankState RankState::from_sorted_values(
    std::span<const std::pair<double, std::int64_t>> values) {
  RankState st;
  st.nodes_.reserve(values.size());
  st.root_ = st.build_balanced(values);
  for (const auto& [key, mult] : values) {
    (void)key;
    if (mult <= 0) throw CorruptSnapshot("non-positive multiplicity");
    st.n_ += mult;
  }
  return st;
}

double randomize(const RankPair& pair, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidRandomizer("randomizer must lie in (0,1)");
  }
  return u * pair.fhat() + (1.0 - u) * pair.fhat_minus();
}

RankRectangle rank_rectangle(const RankPair& px, const RankPair& py) {
  if (px.multiplicity() != 1 || py.multiplicity() != 1) {
    throw TiesPresent("tied observation: rank rectangle undefined");
  }
  RankRectangle rect;
  rect.x_lo = static_cast<double>(px.le - 1) / static_cast<double>(px.n);
  rect.x_hi = px.fhat();
  rect.y_lo = static_cast<double>(py.le - 1) / static_cast<double>(py.n);
  rect.y_hi = py.fhat();
  return rect;
}

std::vector<double> batch_ranks(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("batch_ranks: empty input");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidObservation("non-finite observation");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double d = static_cast<double>(values.size());
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), values[i]) -
                    sorted.begin();
    out[i] = static_cast<double>(le) / d;
  }
  return out;
}

}  // namespace seqrank
