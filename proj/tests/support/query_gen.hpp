// Random queries built from atoms whose descriptor components are known up
// front, so the expected shape never comes from the library under test.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oracle {

struct Atom {
  const char* text;
  std::vector<Triple> funcs;
};

inline const std::vector<Atom>& atoms() {
  static const std::vector<Atom> a{
      {"a = 1", {{"=", "FIELD", "LITERAL"}}},
      {"b = c", {{"=", "FIELD", "FIELD"}}},
      {"d > 2", {{">", "FIELD", "LITERAL"}}},
      {"e LIKE 'x%'", {{"LIKE", "FIELD", "LITERAL"}}},
      {"f IN (1, 2)", {{"IN", "FIELD", "LITERAL"}}},
      {"g <> h", {{"<>", "FIELD", "FIELD"}}},
      {"ABS(k) < 3", {{"ABS", "FIELD", "NONE"}, {"<", "LITERAL", "LITERAL"}}},
      {"1 = 1", {{"=", "LITERAL", "LITERAL"}}},
      {"m = SLEEP(1)", {{"=", "FIELD", "LITERAL"}, {"SLEEP", "LITERAL", "NONE"}}},
      {"n <= 'OR'", {{"<=", "FIELD", "LITERAL"}}},
  };
  return a;
}

struct Generated {
  std::string sql;
  Shape shape;
  std::vector<std::string> tables;  // FROM list, in order
  std::vector<std::size_t> atoms;   // indices into atoms()
  std::vector<bool> ands;           // connective before atom k+1
};

inline Generated assemble(int op, const std::vector<std::string>& tables, const std::vector<std::size_t>& idx,
                          const std::vector<bool>& ands) {
  Generated g;
  g.shape.op = op;
  g.tables = tables;
  g.atoms = idx;
  g.ands = ands;
  std::string from;
  for (const auto& t : tables) {
    from += (from.empty() ? "" : ", ") + t;
    g.shape.tables.insert(t);
  }
  std::string where;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) {
      where += ands[k - 1] ? " AND " : " OR ";
      g.shape.cond.insert(ands[k - 1] ? "AND" : "OR");
    }
    const Atom& a = atoms()[idx[k]];
    where += a.text;
    g.shape.funcs.insert(a.funcs.begin(), a.funcs.end());
  }
  g.sql = std::string(op == 3 ? "DELETE FROM " : "SELECT * FROM ") + from + " WHERE " + where;
  return g;
}

// SELECT or DELETE over one or two of three tables, zero to three connectives.
inline Generated random_query(std::mt19937_64& rng) {
  static const char* names[] = {"t1", "t2", "t3"};
  bool del = rng() % 4 == 0;
  std::vector<std::string> tables{names[rng() % 3]};
  if (!del && rng() % 3 == 0) tables.push_back(names[rng() % 3]);
  std::vector<std::size_t> idx{rng() % atoms().size()};
  std::vector<bool> ands;
  for (std::size_t k = 0, n = rng() % 4; k < n; ++k) {
    ands.push_back(rng() % 2);
    idx.push_back(rng() % atoms().size());
  }
  return assemble(del ? 3 : 0, tables, idx, ands);
}

// A query built mostly from `base`'s own pieces, so a profile trained on
// `base` tends to admit it; one in three gets a foreign piece mixed in.
inline Generated near_query(std::mt19937_64& rng, const Generated& base) {
  std::vector<std::string> tables{base.tables[rng() % base.tables.size()]};
  std::vector<std::size_t> idx{base.atoms[rng() % base.atoms.size()]};
  std::vector<bool> ands;
  for (std::size_t k = 0, n = base.ands.empty() ? 0 : rng() % 3; k < n; ++k) {
    ands.push_back(base.ands[rng() % base.ands.size()]);
    idx.push_back(base.atoms[rng() % base.atoms.size()]);
  }
  int op = base.shape.op;
  switch (rng() % 15) {
    case 0: op = op == 0 ? 3 : 0; break;
    case 1: tables.push_back(rng() % 2 ? "t1" : "t3"); break;
    case 2: idx.push_back(rng() % atoms().size()); ands.push_back(rng() % 2); break;
    case 3: if (!ands.empty()) ands.back() = !ands.back(); break;
    case 4: idx[0] = rng() % atoms().size(); break;
    default: break;
  }
  if (op == 3) tables.resize(1);
  return assemble(op, tables, idx, ands);
}

}  // namespace oracle
