#pragma once

// Loads and samples the lifted concept repository that seeds statement
// generation. Two on-disk forms are accepted: the hierarchical
// domain/topic/concept layout the bundled fixture uses, and a flat CSV for
// custom repositories.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forge/rng.hpp"
#include "forge/sha256.hpp"
#include "forge/statement_model.hpp"
#include "forge/util.hpp"

namespace forge {

class ConceptRepository {
 public:
  static ConceptRepository load(const std::filesystem::path& path) {
    std::string content = fsio::read_file(path);
    ConceptRepository repo;
    repo.content_hash_ = sha256_hex(content);
    if (looks_like_csv(content)) {
      repo.parse_csv(content, path.string());
    } else {
      repo.parse_hierarchical(content, path.string());
    }
    if (repo.concepts_.empty()) throw ParseError(path.string() + ": no concepts");
    repo.build_index();
    return repo;
  }

  const std::vector<Concept>& concepts() const { return concepts_; }
  size_t size() const { return concepts_.size(); }

  size_t domain_count() const { return index_.size(); }

  size_t topic_count() const {
    size_t n = 0;
    for (const auto& [domain, topics] : index_) n += topics.size();
    return n;
  }

  const Concept& by_id(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ForgeError("unknown concept id: " + id);
    return concepts_[it->second];
  }

  // Uniform draw over unordered distinct pairs, canonicalized by repository
  // order so the same seed always yields the same pair.
  std::pair<Concept, Concept> sample_pair(SeededRng& rng) const {
    if (concepts_.size() < 2) throw ForgeError("repository needs at least 2 concepts to sample");
    size_t n = concepts_.size();
    size_t i = static_cast<size_t>(rng.below(n));
    size_t j = static_cast<size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);
    return {concepts_[i], concepts_[j]};
  }

  nlohmann::json stats() const {
    nlohmann::json per_domain = nlohmann::json::array();
    for (const auto& [domain, topics] : index_) {
      size_t concept_count = 0;
      for (const auto& [topic, ids] : topics) concept_count += ids.size();
      per_domain.push_back({{"domain", domain},
                            {"topics", topics.size()},
                            {"concepts", concept_count}});
    }
    return nlohmann::json{{"domains", domain_count()},
                          {"topics", topic_count()},
                          {"concepts", size()},
                          {"per_domain", per_domain}};
  }

  const std::string& content_hash() const { return content_hash_; }

 private:
  static bool looks_like_csv(const std::string& content) {
    auto lines = str::split_lines(content);
    for (const auto& line : lines) {
      auto t = str::strip(line);
      if (t.empty() || t[0] == '#') continue;
      return str::starts_with(str::replace_all(std::string(t), " ", ""), "domain,topic,concept");
    }
    return false;
  }

  void add_concept(const std::string& domain, const std::string& topic, const std::string& name,
                   const std::string& where) {
    if (name.empty()) throw ParseError(where + ": empty concept name");
    std::string key = domain + "\x1f" + topic + "\x1f" + name;
    if (!seen_.insert(key).second) {
      throw ParseError(where + ": duplicate concept '" + name + "' in " + domain + " / " + topic);
    }
    concepts_.push_back(Concept{concept_id(domain, topic, name), name, topic, domain});
  }

  void parse_hierarchical(const std::string& content, const std::string& path) {
    std::string domain;
    std::string topic;
    size_t topic_concepts = 0;
    bool domain_has_topics = false;
    auto lines = str::split_lines(content);

    auto close_topic = [&](const std::string& where) {
      if (!topic.empty() && topic_concepts == 0) {
        throw ParseError(where + ": empty topic '" + topic + "' in domain '" + domain + "'");
      }
    };
    auto close_domain = [&](const std::string& where) {
      close_topic(where);
      if (!domain.empty() && !domain_has_topics) {
        throw ParseError(where + ": domain '" + domain + "' has no topics");
      }
    };

    for (size_t ln = 0; ln < lines.size(); ++ln) {
      const std::string& raw = lines[ln];
      std::string where = path + ":" + std::to_string(ln + 1);
      if (raw.find('\t') != std::string::npos) throw ParseError(where + ": tabs not supported");
      auto stripped = str::strip(raw);
      if (stripped.empty() || stripped[0] == '#') continue;
      size_t indent = raw.find_first_not_of(' ');

      if (str::starts_with(stripped, "- ")) {
        if (topic.empty()) throw ParseError(where + ": concept outside a topic");
        add_concept(domain, topic, std::string(str::strip(stripped.substr(2))), where);
        ++topic_concepts;
        continue;
      }
      if (!stripped.empty() && stripped.back() == ':') {
        std::string name(str::strip(stripped.substr(0, stripped.size() - 1)));
        if (name.empty()) throw ParseError(where + ": empty header name");
        if (indent == 0) {
          close_domain(where);
          domain = name;
          topic.clear();
          topic_concepts = 0;
          domain_has_topics = false;
        } else {
          if (domain.empty()) throw ParseError(where + ": topic outside a domain");
          close_topic(where);
          topic = name;
          topic_concepts = 0;
          domain_has_topics = true;
        }
        continue;
      }
      throw ParseError(where + ": unrecognized line '" + std::string(stripped.substr(0, 40)) + "'");
    }
    close_domain(path + ":end");
  }

  void parse_csv(const std::string& content, const std::string& path) {
    auto lines = str::split_lines(content);
    bool header_seen = false;
    for (size_t ln = 0; ln < lines.size(); ++ln) {
      std::string where = path + ":" + std::to_string(ln + 1);
      auto t = str::strip(lines[ln]);
      if (t.empty() || t[0] == '#') continue;
      auto fields = split_csv_row(std::string(t), where);
      if (!header_seen) {
        header_seen = true;  // validated by looks_like_csv
        continue;
      }
      if (fields.size() != 3) {
        throw ParseError(where + ": expected 3 fields, got " + std::to_string(fields.size()));
      }
      add_concept(fields[0], fields[1], fields[2], where);
    }
  }

  static std::vector<std::string> split_csv_row(const std::string& row, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < row.size(); ++i) {
      char c = row[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < row.size() && row[i + 1] == '"') {
            cur.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cur.push_back(c);
        }
      } else if (c == '"' && cur.empty()) {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::string(str::strip(cur)));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (quoted) throw ParseError(where + ": unterminated quote");
    fields.push_back(std::string(str::strip(cur)));
    return fields;
  }

  void build_index() {
    for (size_t i = 0; i < concepts_.size(); ++i) {
      const auto& c = concepts_[i];
      index_[c.domain][c.topic].push_back(c.id);
      by_id_[c.id] = i;
    }
    if (by_id_.size() != concepts_.size()) throw ParseError("concept id collision");
  }

  std::vector<Concept> concepts_;
  // std::map keeps stats output in a stable order.
  std::map<std::string, std::map<std::string, std::vector<std::string>>> index_;
  std::unordered_map<std::string, size_t> by_id_;
  std::set<std::string> seen_;
  std::string content_hash_;
};

}  // namespace forge
