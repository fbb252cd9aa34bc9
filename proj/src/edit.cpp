#include "storyloom/edit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>
#include <sstream>

#include <spdlog/spdlog.h>

#include "storyloom/errors.hpp"
#include "storyloom/plan.hpp"
#include "storyloom/text.hpp"

namespace loom {

// ---------------------------------------------------------------------------
// Example bank

std::vector<KeyExample> parse_key_examples(const std::string& content) {
  std::vector<KeyExample> out;
  std::optional<KeyExample> current;
  auto flush = [&]() {
    if (current && !current->lines.empty()) out.push_back(std::move(*current));
    current.reset();
  };
  std::size_t line_no = 0;
  for (const auto& raw : text::split_lines(content)) {
    ++line_no;
    const std::string line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "----") {
      flush();
      continue;
    }
    if (line.starts_with("Context (")) {
      flush();
      const auto close = line.find("): ");
      if (close == std::string::npos) {
        throw ConfigError("key examples line " + std::to_string(line_no) + ": expected 'Context (Name): text'");
      }
      current = KeyExample{line.substr(9, close - 9), line.substr(close + 3), {}};
      continue;
    }
    if (!current) throw ConfigError("key examples line " + std::to_string(line_no) + ": output line before context");
    current->lines.push_back(line);
  }
  flush();
  return out;
}

std::vector<KeyExample> load_key_examples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read key examples: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto bank = parse_key_examples(ss.str());
  if (bank.empty()) throw ConfigError("key example file has no examples: " + path);
  return bank;
}

const std::vector<KeyExample>& builtin_key_examples() {
  static const std::vector<KeyExample> bank = {
      {"Nora Johnson", "Selma Vincenti is Nora's friend who recently got engaged to Bill.",
       {"Nora Johnson's friend's name is Selma Vincenti", "Nora Johnson is Selma's friend"}},
      {"Shannon", "Kathleen O'Brien is Shannon's mother.",
       {"Shannon's mother's name is Kathleen O'Brien", "Shannon is Kathleen's daughter"}},
      {"Rachel Kim", "Rachel Kim's father loves her children dearly.", {"Rachel Kim's gender is female"}},
      {"Johnny", "Johnny is a friendly and outgoing person, and he loves spending time with his sister Mira.",
       {"Johnny's gender is male", "Johnny's sister's name is Mira", "Johnny is Mira's brother"}},
      {"Tina Palmer", "Tina Palmer befriends Amy Sinkhorn.",
       {"Tina Palmer is Amy's friend", "Tina Palmer's friend's name is Amy Sinkhorn"}},
  };
  return bank;
}

const char* to_string(MergeOutcome outcome) {
  switch (outcome) {
    case MergeOutcome::added: return "added";
    case MergeOutcome::kept_existing: return "kept_existing";
    case MergeOutcome::replaced: return "replaced";
    case MergeOutcome::flagged: return "flagged";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

std::string first_name(const std::string& full) {
  const auto w = text::split_words(full);
  return w.empty() ? full : w.front();
}

// Full name first so "Karen Zellerion's" is preferred over "Karen".
std::vector<std::string> name_forms(const std::string& character) {
  std::vector<std::string> forms{character};
  const std::string first = first_name(character);
  if (first != character) forms.push_back(first);
  return forms;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (std::ispunct(static_cast<unsigned char>(s.back())) && s.back() != '\'')) s.pop_back();
  return text::trim(s);
}

std::string clean_value(const std::string& raw) {
  std::string v = text::trim(raw);
  v = v.substr(0, v.find('\n'));
  v = strip_trailing_punct(v);
  while (!v.empty() && v.front() == '"') v.erase(0, 1);
  return text::trim(v);
}

std::string possessive_subject(const std::string& key) {
  return text::strip_possessive(key);
}

bool all_capitalized(const std::string& s) {
  const auto words = text::split_words(s);
  return !words.empty() && std::all_of(words.begin(), words.end(), [](const std::string& w) {
           return text::is_capitalized(w);
         });
}

GenParams sampling(int max_tokens, int samples, double temperature, std::vector<std::string> stops) {
  GenParams p;
  p.max_tokens = max_tokens;
  p.num_samples = samples;
  p.temperature = temperature;
  p.stop_sequences = std::move(stops);
  return p;
}

}  // namespace

bool is_possessive_key(const std::string& key) {
  if (!(key.ends_with("'s") || key.ends_with("\xE2\x80\x99s"))) return false;
  return all_capitalized(possessive_subject(key));
}

std::string attribute_sentence(const std::string& character, const std::string& key, const std::string& value,
                               const TemplateSet& templates) {
  const char* name = is_possessive_key(key) ? "attribute_sentence_possessive" : "attribute_sentence_plain";
  return templates.render(name, {{"character", character}, {"key", key}, {"value", value}});
}

std::optional<std::string> resolve_character(const std::string& mention, const std::vector<std::string>& known) {
  for (const auto& k : known) {
    if (text::to_lower(k) == text::to_lower(mention)) return k;
  }
  const auto words = text::split_words(text::to_lower(mention));
  if (words.empty()) return std::nullopt;
  for (const auto& k : known) {
    const auto kw = text::split_words(text::to_lower(k));
    if (std::all_of(words.begin(), words.end(),
                    [&](const std::string& w) { return std::find(kw.begin(), kw.end(), w) != kw.end(); })) {
      return k;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Facts

std::vector<Fact> list_facts(const std::string& passage, const std::string& character, int passage_index,
                             const Backends& backends, const EditConfig& cfg, const TemplateSet& templates) {
  const std::string prompt = templates.render("facts", {{"passage", passage}, {"character", character}});
  const auto outputs = backends.lm->complete(
      prompt, sampling(cfg.fact_max_tokens, cfg.fact_samples, cfg.temperature, {}));

  std::vector<std::vector<std::string>> lists;
  for (const auto& out : outputs) {
    if (auto items = parse_numbered_list("1. " + character + out)) {
      std::vector<std::string> sentences;
      for (const auto& item : *items) {
        const std::string s = text::first_sentences(item, 1);
        if (!s.empty()) sentences.push_back(s);
      }
      lists.push_back(std::move(sentences));
    } else {
      lists.emplace_back();
    }
  }
  if (std::all_of(lists.begin(), lists.end(), [](const auto& l) { return l.empty(); })) {
    spdlog::debug("no parseable fact list for {}", character);
    return {};
  }

  std::vector<Fact> kept;
  std::vector<std::string> kept_norm;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (const auto& f : lists[i]) {
      const std::string norm = text::normalize_statement(f);
      if (std::find(kept_norm.begin(), kept_norm.end(), norm) != kept_norm.end()) continue;
      bool agreed = false;
      for (std::size_t j = 0; j < lists.size() && !agreed; ++j) {
        if (j == i) continue;
        for (const auto& g : lists[j]) {
          if (text::normalize_statement(g) == norm) {
            agreed = true;
            break;
          }
        }
      }
      for (std::size_t j = 0; j < lists.size() && !agreed; ++j) {
        if (j == i) continue;
        for (const auto& g : lists[j]) {
          if (backends.entailment->entail(g, f).p_entail > cfg.entail_threshold) {
            agreed = true;
            break;
          }
        }
      }
      if (agreed) {
        kept.push_back({character, f, passage_index});
        kept_norm.push_back(norm);
      }
    }
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Keys and values

std::optional<std::string> parse_attribute_line(const std::string& raw, const std::string& character) {
  const std::string line = strip_trailing_punct(text::trim(raw));
  for (const auto& name : name_forms(character)) {
    if (line.starts_with(name + "'s ")) {
      const std::string rest = line.substr(name.size() + 3);
      const auto is = rest.find(" is ");
      if (is == std::string::npos || is == 0) continue;
      const std::string key = text::trim(rest.substr(0, is));
      const std::string value = text::trim(rest.substr(is + 4));
      if (key.empty() || value.empty()) continue;
      return key;
    }
    if (line.starts_with(name + " is ")) {
      const std::string rest = line.substr(name.size() + 4);
      const auto pos = rest.find("'s ");
      if (pos == std::string::npos) continue;
      const std::string owner = rest.substr(0, pos);
      const std::string value = text::trim(rest.substr(pos + 3));
      if (!all_capitalized(owner) || value.empty()) continue;
      return owner + "'s";
    }
  }
  return std::nullopt;
}

std::vector<std::string> extract_attribute_keys(const Fact& fact, const std::string& passage,
                                                const std::vector<KeyExample>& bank,
                                                const std::vector<std::string>& known, const Backends& backends,
                                                const EditConfig& cfg, const TemplateSet& templates) {
  if (bank.empty()) throw PreconditionError("extract_attribute_keys: empty example bank");
  const std::string& character = fact.character;

  // Examples most relevant to the fact, best first.
  std::vector<std::string> texts{fact.text};
  for (const auto& ex : bank) texts.push_back(ex.context);
  const auto vecs = backends.embedder->embed(texts);
  std::vector<std::size_t> order(bank.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return relevance(vecs[0], vecs[a + 1]) > relevance(vecs[0], vecs[b + 1]);
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(cfg.example_count)));

  std::string examples;
  for (std::size_t i : order) {
    examples += templates.render("key_example", {{"character", bank[i].character},
                                                 {"context", bank[i].context},
                                                 {"lines", text::join(bank[i].lines, "\n")}});
  }
  const std::string prompt = templates.render(
      "key_extraction", {{"examples", examples}, {"character", character}, {"fact", fact.text}});
  const std::string out = backends.lm->complete(prompt, sampling(cfg.key_max_tokens, 1, 0.0, {"----"})).front();

  std::vector<std::string> lines = text::split_lines(character + out);
  std::vector<std::string> keys;
  for (const auto& line : lines) {
    auto key = parse_attribute_line(line, character);
    if (!key) continue;
    if (is_possessive_key(*key)) {
      const auto owner = resolve_character(possessive_subject(*key), known);
      if (owner) {
        if (*owner == character) continue;
        *key = *owner + "'s";
      }
    }
    if (std::find(keys.begin(), keys.end(), *key) == keys.end()) keys.push_back(*key);
  }

  std::vector<std::string> gated;
  for (const auto& key : keys) {
    const std::string question =
        is_possessive_key(key)
            ? templates.render("qa_relation_question", {{"character", character}, {"other", possessive_subject(key)}})
            : templates.render("qa_question", {{"character", character}, {"key", key}});
    double best = 0.0;
    for (const std::string* ctx : {&fact.text, &passage}) {
      if (text::trim(*ctx).empty()) continue;
      const QAResult r = backends.qa->answer(question, *ctx);
      if (!r.answer.empty()) best = std::max(best, r.confidence);
    }
    if (best >= cfg.qa_threshold) {
      gated.push_back(key);
    } else {
      spdlog::debug("dropping key '{}' for {}: qa confidence {}", key, character, best);
    }
  }
  return gated;
}

std::optional<std::string> infer_value(const Fact& fact, const std::string& key, const Backends& backends,
                                       const EditConfig& cfg, const TemplateSet& templates) {
  const std::string& character = fact.character;
  const char* tmpl = is_possessive_key(key) ? "value_possessive" : "value_plain";
  const std::string prompt =
      templates.render(tmpl, {{"fact", fact.text}, {"character", character}, {"key", key}});
  std::vector<std::string> values;
  for (const auto& out : backends.lm->complete(
           prompt, sampling(cfg.value_max_tokens, cfg.value_samples, cfg.temperature, {"\n"}))) {
    std::string v = clean_value(out);
    if (!v.empty()) values.push_back(std::move(v));
  }
  if (values.empty()) return std::nullopt;

  std::optional<std::string> chosen;
  std::size_t best_count = 1;
  for (const auto& v : values) {
    const std::string norm = text::normalize_statement(v);
    const auto count = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [&](const std::string& w) {
      return text::normalize_statement(w) == norm;
    }));
    if (count > best_count) {
      best_count = count;
      chosen = v;
    }
  }
  if (!chosen) {
    for (std::size_t i = 0; i < values.size() && !chosen; ++i) {
      const std::string hyp = attribute_sentence(character, key, values[i], templates);
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (j == i) continue;
        const std::string premise = attribute_sentence(character, key, values[j], templates);
        if (backends.entailment->entail(premise, hyp).p_entail > cfg.entail_threshold) {
          chosen = values[i];
          break;
        }
      }
    }
  }
  if (!chosen) return std::nullopt;
  const std::string sentence = attribute_sentence(character, key, *chosen, templates);
  if (backends.entailment->entail(fact.text, sentence).p_entail <= cfg.entail_threshold) return std::nullopt;
  return chosen;
}

// ---------------------------------------------------------------------------
// Dictionary maintenance

MergeResult merge_attribute(AttributeDictionary& dict, const std::string& character, const AttributeEntry& entry,
                            EntailmentModel& entailment, const EditConfig& cfg, const TemplateSet& templates) {
  if (entry.key.empty() || entry.value.empty() || entry.key.find('\n') != std::string::npos) {
    throw PreconditionError("attribute entries need a single-line key and a value");
  }
  MergeResult result;
  auto it = dict.entries.find(entry.key);
  if (it == dict.entries.end()) {
    dict.entries.emplace(entry.key, entry);
    result.outcome = MergeOutcome::added;
    return result;
  }
  result.conflict = true;
  const AttributeEntry& old = it->second;
  const std::string old_s = attribute_sentence(character, old.key, old.value, templates);
  const std::string new_s = attribute_sentence(character, entry.key, entry.value, templates);
  const EntailmentVerdict forward = entailment.entail(old_s, new_s);   // old entails new
  const EntailmentVerdict backward = entailment.entail(new_s, old_s);  // new entails old
  result.p_contradict = std::max(forward.p_contradict, backward.p_contradict);

  const bool old_entails = forward.p_entail > cfg.entail_threshold;
  const bool new_entails = backward.p_entail > cfg.entail_threshold;
  if (old_entails || new_entails) {
    const bool keep_new = new_entails && (!old_entails || backward.p_entail > forward.p_entail);
    if (keep_new) {
      it->second = entry;
      result.outcome = MergeOutcome::replaced;
    } else {
      result.outcome = MergeOutcome::kept_existing;
    }
    return result;
  }
  if (result.p_contradict > cfg.contradict_threshold) {
    result.outcome = MergeOutcome::flagged;
    result.flag = ContradictionFlag{character, entry.key, old, entry, result.p_contradict};
    return result;
  }
  result.outcome = MergeOutcome::kept_existing;
  return result;
}

std::vector<RelationAddition> complete_relations(std::map<std::string, AttributeDictionary>& kb,
                                                 const std::string& character, const std::string& key,
                                                 const std::string& value, const Fact& fact,
                                                 const Backends& backends, const EditConfig& cfg,
                                                 const TemplateSet& templates) {
  if (!is_possessive_key(key)) return {};
  std::vector<std::string> known;
  for (const auto& [name, dict] : kb) known.push_back(name);
  const auto other = resolve_character(possessive_subject(key), known);
  if (!other || *other == character) return {};

  const std::string sentence = attribute_sentence(character, *other + "'s", value, templates);
  const std::string prompt =
      templates.render("reciprocal", {{"fact", sentence}, {"other", *other}, {"character", character}});
  const std::string reciprocal =
      clean_value(backends.lm->complete(prompt, sampling(cfg.value_max_tokens, 1, 0.0, {"\n"})).front());
  if (reciprocal.empty()) {
    spdlog::debug("no reciprocal relation for {} / {}", character, *other);
    return {};
  }

  const std::vector<std::tuple<std::string, std::string, std::string>> implied = {
      {*other, character + "'s", reciprocal},
      {character, value + "'s name", *other},
      {*other, reciprocal + "'s name", character},
  };
  std::vector<RelationAddition> out;
  for (const auto& [who, k, v] : implied) {
    AttributeEntry e{k, v, Fact{who, sentence, fact.passage_index}, 1.0};
    MergeResult r = merge_attribute(kb[who], who, e, *backends.entailment, cfg, templates);
    out.push_back({who, k, v, std::move(r)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection

namespace {

bool mentions(const std::string& passage, const std::string& name) {
  std::size_t pos = 0;
  while ((pos = passage.find(name, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(passage[pos - 1]));
    const std::size_t end = pos + name.size();
    const bool right_ok = end >= passage.size() || !std::isalnum(static_cast<unsigned char>(passage[end]));
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

void process_character(const std::string& passage, const std::string& character, int passage_index,
                       StoryState& state, const std::vector<KeyExample>& bank, const Backends& backends,
                       const EditConfig& cfg, const TemplateSet& templates, DetectResult& result) {
  std::vector<std::string> known;
  for (const auto& [name, dict] : state.kb) known.push_back(name);

  std::vector<Fact> facts;
  try {
    facts = list_facts(passage, character, passage_index, backends, cfg, templates);
  } catch (const Error& e) {
    spdlog::warn("fact listing failed for {}: {}", character, e.what());
    return;
  }
  auto note = [&](const MergeResult& r) {
    if (r.conflict) result.max_p_contradict = std::max(result.max_p_contradict, r.p_contradict);
    if (r.flag) result.flags.push_back(*r.flag);
  };
  for (const auto& fact : facts) {
    result.facts.push_back(fact);
    try {
      for (const auto& key : extract_attribute_keys(fact, passage, bank, known, backends, cfg, templates)) {
        const auto value = infer_value(fact, key, backends, cfg, templates);
        if (!value) continue;
        const MergeResult r = merge_attribute(state.kb[character], character, AttributeEntry{key, *value, fact, 1.0},
                                              *backends.entailment, cfg, templates);
        note(r);
        if (r.outcome == MergeOutcome::added || r.outcome == MergeOutcome::replaced) {
          for (const auto& add :
               complete_relations(state.kb, character, key, *value, fact, backends, cfg, templates)) {
            note(add.result);
          }
        }
      }
    } catch (const Error& e) {
      spdlog::warn("skipping fact '{}': {}", fact.text, e.what());
    }
  }
}

}  // namespace

std::vector<std::string> characters_in(const std::string& passage,
                                       const std::map<std::string, AttributeDictionary>& kb) {
  std::vector<std::string> out;
  for (const auto& [name, dict] : kb) {
    if (mentions(passage, name) || mentions(passage, first_name(name))) out.push_back(name);
  }
  return out;
}

DetectResult detect(const std::string& passage, int passage_index, StoryState& state,
                    const std::vector<KeyExample>& bank, const Backends& backends, const EditConfig& cfg,
                    DetectMode mode, const TemplateSet& templates) {
  DetectResult result;
  if (text::trim(passage).empty()) return result;
  for (const auto& character : characters_in(passage, state.kb)) {
    process_character(passage, character, passage_index, state, bank, backends, cfg, templates, result);
  }
  if (mode == DetectMode::boolean) {
    spdlog::debug("detect: {} flags over {} facts", result.flags.size(), result.facts.size());
  }
  return result;
}

void seed_knowledge_base(StoryState& state, const std::vector<KeyExample>& bank, const Backends& backends,
                         const EditConfig& cfg, const TemplateSet& templates) {
  for (const auto& c : state.plan.characters) state.kb[c.name];
  DetectResult ignored;
  for (const auto& c : state.plan.characters) {
    if (c.description.empty()) continue;
    process_character(c.description, c.name, -1, state, bank, backends, cfg, templates, ignored);
  }
}

// ---------------------------------------------------------------------------
// Correction

CorrectionResult correct(const std::string& passage, const ContradictionFlag& flag, LanguageModel& lm,
                         const Tokenizer& tokenizer, const EditConfig& cfg, const TemplateSet& templates) {
  CorrectionResult result;
  result.text = passage;
  result.instruction = templates.render("edit_instruction", {{"fact", flag.old_entry.source_fact.text}});
  const double limit = cfg.max_length_ratio * tokenizer.count_tokens(passage);
  for (int attempt = 0; attempt < cfg.correction_attempts; ++attempt) {
    ++result.attempts;
    std::string out;
    try {
      out = lm.edit(passage, result.instruction);
    } catch (const TransportError& e) {
      spdlog::warn("edit call failed: {}", e.what());
      continue;
    }
    if (text::trim(out).empty() || out == passage) continue;
    if (tokenizer.count_tokens(out) > limit) continue;
    result.text = std::move(out);
    result.resolved = true;
    return result;
  }
  spdlog::info("unresolved contradiction for {} / {}", flag.character, flag.key);
  return result;
}

std::string format_attributes(const AttributeDictionary& dict) {
  std::string out;
  for (const auto& [key, entry] : dict.entries) out += key + ": " + entry.value + "\n";
  return out;
}

}  // namespace loom
