#include "congest/pa_instance.hpp"

#include <sstream>
#include <stdexcept>

#include "congest/rng.hpp"

namespace congest {

void validate_pa_instance(const NetworkGraph& g, const PaInstance& inst) {
  if (static_cast<int>(inst.values.size()) != g.n())
    throw std::invalid_argument("instance values do not cover every node");
  if (static_cast<int>(inst.partition.part_of.size()) != g.n())
    throw std::invalid_argument("instance partition does not cover every node");
  validate_partition(g, inst.partition);
  if (!inst.has_leaders()) return;
  if (static_cast<int>(inst.leaders.size()) != inst.partition.count)
    throw std::invalid_argument("leader list does not match part count");
  for (int i = 0; i < inst.partition.count; ++i) {
    int l = inst.leaders[i];
    if (l < 0 || l >= g.n() || inst.partition.part_of[l] != i)
      throw std::invalid_argument("leader of part " + std::to_string(i) +
                                  " is not one of its members");
  }
}

PaInstance random_pa_instance(const NetworkGraph& g, int parts, AggOp op, uint64_t seed,
                              bool with_leaders) {
  PaInstance inst;
  inst.op = op;
  inst.partition = gen_random_connected_partition(g, parts, seed);
  inst.values.resize(g.n());
  Rng rng(split_seed(seed, 0x7a1u));
  for (int v = 0; v < g.n(); ++v) {
    uint64_t raw = rng.next();
    inst.values[v] = op == AggOp::first_by_id ? first_by_id_pack(v, raw) : raw;
  }
  if (with_leaders) inst.leaders = min_id_leaders(inst.partition);
  return inst;
}

std::string format_pa_instance(const PaInstance& inst) {
  std::ostringstream os;
  os << "op " << agg_name(inst.op) << '\n' << "values\n";
  for (size_t v = 0; v < inst.values.size(); ++v) os << v << ' ' << inst.values[v] << '\n';
  os << "partition\n" << format_partition(inst.partition);
  return os.str();
}

PaInstance parse_pa_instance(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  if (!(is >> word) || word != "op")
    throw std::invalid_argument("instance file must start with an op line");
  if (!(is >> word)) throw std::invalid_argument("missing operator name");
  PaInstance inst;
  inst.op = agg_from_name(word);
  if (!(is >> word) || word != "values")
    throw std::invalid_argument("expected the values section");
  std::vector<std::pair<int, uint64_t>> vals;
  while (is >> word) {
    if (word == "partition") break;
    int v = std::stoi(word);
    uint64_t x;
    if (!(is >> x)) throw std::invalid_argument("value line for node " + word + " is short");
    vals.push_back({v, x});
  }
  if (word != "partition") throw std::invalid_argument("expected the partition section");
  int n = static_cast<int>(vals.size());
  inst.values.assign(n, 0);
  std::vector<char> seen(n, 0);
  for (auto [v, x] : vals) {
    if (v < 0 || v >= n || seen[v])
      throw std::invalid_argument("values section must list every node exactly once");
    seen[v] = 1;
    inst.values[v] = x;
  }
  std::ostringstream rest;
  rest << is.rdbuf();
  inst.partition = parse_partition(rest.str(), n);
  return inst;
}

}  // namespace congest
