#include "storyloom/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

using nlohmann::json;

void validate(const EvalTuple& tuple) {
  for (const std::string* s : {&tuple.s, &tuple.s_prime, &tuple.t, &tuple.t_prime}) {
    if (text::trim(*s).empty()) throw PreconditionError("tuple '" + tuple.id + "' has an empty text");
  }
}

std::vector<LabeledPair> expand_tuples(const std::vector<EvalTuple>& tuples) {
  std::vector<LabeledPair> out;
  out.reserve(tuples.size() * 4);
  for (const auto& tp : tuples) {
    out.push_back({tp.id, "s,t", tp.s, tp.t, false});
    out.push_back({tp.id, "s',t'", tp.s_prime, tp.t_prime, false});
    out.push_back({tp.id, "s,t'", tp.s, tp.t_prime, true});
    out.push_back({tp.id, "s',t", tp.s_prime, tp.t, true});
  }
  return out;
}

std::vector<EvalTuple> parse_tuples(const json& doc) {
  if (!doc.is_array()) throw ConfigError("tuple file must hold a JSON array");
  std::vector<EvalTuple> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    EvalTuple tp;
    try {
      tp.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                               : std::to_string(i);
      j.at("s").get_to(tp.s);
      j.at("s_prime").get_to(tp.s_prime);
      j.at("t").get_to(tp.t);
      j.at("t_prime").get_to(tp.t_prime);
    } catch (const json::exception& e) {
      throw ConfigError("tuple " + std::to_string(i) + ": " + e.what());
    }
    validate(tp);
    out.push_back(std::move(tp));
  }
  return out;
}

std::vector<EvalTuple> load_tuples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read tuples: " + path);
  try {
    return parse_tuples(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid tuple JSON in " + path + ": " + e.what());
  }
}

json tuples_to_json(const std::vector<EvalTuple>& tuples) {
  json arr = json::array();
  for (const auto& tp : tuples) {
    arr.push_back({{"id", tp.id}, {"s", tp.s}, {"s_prime", tp.s_prime}, {"t", tp.t}, {"t_prime", tp.t_prime}});
  }
  return arr;
}

double entailment_baseline(const std::string& setup, const std::string& story, EntailmentModel& entailment) {
  double best = 0.0;
  const auto story_sents = text::split_sentences(story);
  for (const auto& a : text::split_sentences(setup)) {
    for (const auto& b : story_sents) best = std::max(best, entailment.entail(a, b).p_contradict);
  }
  return best;
}

double entailment_dpr_baseline(const std::string& setup, const std::string& story, Embedder& embedder,
                               EntailmentModel& entailment) {
  const auto setup_sents = text::split_sentences(setup);
  const auto story_sents = text::split_sentences(story);
  if (setup_sents.empty() || story_sents.empty()) return 0.0;
  std::vector<std::string> all = setup_sents;
  all.insert(all.end(), story_sents.begin(), story_sents.end());
  const auto vecs = embedder.embed(all);
  double best = 0.0;
  for (std::size_t j = 0; j < story_sents.size(); ++j) {
    const auto& q = vecs[setup_sents.size() + j];
    std::size_t pick = 0;
    double pick_rel = relevance(q, vecs[0]);
    for (std::size_t i = 1; i < setup_sents.size(); ++i) {
      const double r = relevance(q, vecs[i]);
      if (r > pick_rel) {
        pick = i;
        pick_rel = r;
      }
    }
    best = std::max(best, entailment.entail(setup_sents[pick], story_sents[j]).p_contradict);
  }
  return best;
}

std::vector<CharacterSheet> parse_setup_characters(const std::string& setup) {
  std::vector<CharacterSheet> out;
  for (const auto& raw : text::split_lines(setup)) {
    const std::string line = text::trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size() || line[i] != '.' || line[i + 1] != ' ') continue;
    const std::string description = text::trim(line.substr(i + 2));
    std::vector<std::string> name;
    for (const auto& w : text::split_words(description)) {
      std::string bare = w;
      while (!bare.empty() && std::ispunct(static_cast<unsigned char>(bare.back())) && bare.back() != '\'') {
        bare.pop_back();
      }
      bare = text::strip_possessive(bare);
      if (!text::is_capitalized(bare)) break;
      name.push_back(bare);
      if (bare.size() != w.size()) break;  // punctuation or possessive ends the name
    }
    if (name.empty()) continue;
    const std::string full = text::join(name, " ");
    if (std::any_of(out.begin(), out.end(), [&](const CharacterSheet& c) { return c.name == full; })) continue;
    out.push_back({full, description, 0});
  }
  return out;
}

double structured_detector(const std::string& setup, const std::string& story, const Backends& backends,
                           const StructuredOptions& options) {
  StoryState state;
  state.plan.characters = parse_setup_characters(setup);
  if (state.plan.characters.empty()) {
    spdlog::warn("structured detector: no character descriptions in setup");
    return 0.0;
  }
  seed_knowledge_base(state, options.bank, backends, options.edit, options.templates);
  const DetectResult r =
      detect(story, 0, state, options.bank, backends, options.edit, DetectMode::probability, options.templates);
  return r.max_p_contradict;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw PreconditionError("roc_auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw PreconditionError("roc_auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw PreconditionError("roc_auc: NaN score");
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw PreconditionError("roc_auc: needs both positive and negative examples");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps tied (half-integer) ranks exact.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_avg_rank = static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) twice_rank_sum += twice_avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = (twice_rank_sum - p * (p + 1.0)) / 2.0;
  return u / (p * static_cast<double>(neg));
}

EvalMethod make_method(const std::string& name, const Backends& backends, const StructuredOptions& options) {
  if (name == "entailment") {
    if (!backends.entailment) throw ConfigError("entailment method needs an entailment backend");
    return {name, [b = backends](const std::string& s, const std::string& t) {
              return entailment_baseline(s, t, *b.entailment);
            }};
  }
  if (name == "entailment-dpr") {
    if (!backends.entailment || !backends.embedder) {
      throw ConfigError("entailment-dpr method needs entailment and embedding backends");
    }
    return {name, [b = backends](const std::string& s, const std::string& t) {
              return entailment_dpr_baseline(s, t, *b.embedder, *b.entailment);
            }};
  }
  if (name == "structured") {
    backends.require_all();
    auto opts = std::make_shared<StructuredOptions>(options);
    return {name, [b = backends, opts](const std::string& s, const std::string& t) {
              return structured_detector(s, t, b, *opts);
            }};
  }
  throw ConfigError("unknown evaluation method '" + name + "' (expected entailment, entailment-dpr or structured)");
}

EvalReport evaluate(const std::vector<EvalTuple>& tuples, const std::vector<EvalMethod>& methods, unsigned threads) {
  if (tuples.empty()) throw PreconditionError("evaluate: no tuples");
  for (const auto& t : tuples) validate(t);
  EvalReport report;
  report.pairs = expand_tuples(tuples);
  std::vector<int> labels;
  for (const auto& p : report.pairs) labels.push_back(p.contradictory ? 1 : 0);

  for (const auto& method : methods) {
    MethodResult res;
    res.method = method.name;
    res.pairs.resize(report.pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next++; i < report.pairs.size(); i = next++) {
        PairScore& ps = res.pairs[i];
        ps.pair = i;
        try {
          ps.score = method.score(report.pairs[i].setup, report.pairs[i].story);
          ps.ok = true;
        } catch (const std::exception& e) {
          ps.error = e.what();
        }
      }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(report.pairs.size())));
    if (n == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    std::vector<double> scores;
    std::vector<int> kept_labels;
    for (std::size_t i = 0; i < res.pairs.size(); ++i) {
      if (res.pairs[i].ok) {
        scores.push_back(res.pairs[i].score);
        kept_labels.push_back(labels[i]);
      } else {
        spdlog::warn("{}: pair {} ({} {}) excluded: {}", method.name, i, report.pairs[i].tuple_id,
                     report.pairs[i].kind, res.pairs[i].error);
      }
    }
    res.scored = scores.size();
    res.excluded = res.pairs.size() - scores.size();
    const bool both = std::count(kept_labels.begin(), kept_labels.end(), 1) > 0 &&
                      std::count(kept_labels.begin(), kept_labels.end(), 0) > 0;
    if (both) {
      res.auc = roc_auc(scores, kept_labels);
      res.auc_defined = true;
    }
    report.results.push_back(std::move(res));
  }
  return report;
}

std::string format_table(const EvalReport& report) {
  std::size_t width = std::string("Method").size();
  for (const auto& r : report.results) width = std::max(width, r.method.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("Method", width) << "  ROC-AUC  Scored  Excluded\n";
  for (const auto& r : report.results) {
    std::string auc = "n/a";
    if (r.auc_defined) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", r.auc);
      auc = buf;
    }
    char row[96];
    std::snprintf(row, sizeof row, "  %7s  %6zu  %8zu\n", auc.c_str(), r.scored, r.excluded);
    out << pad(r.method, width) << row;
  }
  return out.str();
}

json report_to_json(const EvalReport& report) {
  json methods = json::array();
  for (const auto& r : report.results) {
    json pairs = json::array();
    for (const auto& p : r.pairs) {
      json jp = {{"pair", p.pair}, {"ok", p.ok}};
      if (p.ok) {
        jp["score"] = p.score;
      } else {
        jp["error"] = p.error;
      }
      pairs.push_back(std::move(jp));
    }
    methods.push_back({{"method", r.method},
                       {"auc", r.auc_defined ? json(r.auc) : json(nullptr)},
                       {"scored", r.scored},
                       {"excluded", r.excluded},
                       {"pairs", std::move(pairs)}});
  }
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"tuple", p.tuple_id}, {"kind", p.kind}, {"contradictory", p.contradictory}});
  }
  return {{"schema_version", 1}, {"kind", "eval"}, {"pairs", std::move(pairs)}, {"results", std::move(methods)}};
}

NoisyEntailment::NoisyEntailment(std::shared_ptr<EntailmentModel> inner, std::uint64_t seed, double rate)
    : inner_(std::move(inner)), seed_(seed), rate_(rate) {
  if (!inner_) throw PreconditionError("NoisyEntailment needs an inner model");
  if (!(rate >= 0.0 && rate <= 1.0)) throw PreconditionError("noise rate must be in [0, 1]");
}

EntailmentVerdict NoisyEntailment::entail(const std::string& premise, const std::string& hypothesis) {
  EntailmentVerdict v = inner_->entail(premise, hypothesis);
  if (text::trim(premise) == text::trim(hypothesis)) return v;
  if (v.p_neutral < v.p_entail || v.p_neutral < v.p_contradict) return v;
  std::mt19937_64 rng(text::hash_combine(text::fnv1a(premise, seed_), text::fnv1a(hypothesis)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= rate_) return v;
  const double pc = unit(rng);
  const double rest = v.p_entail + v.p_neutral;
  if (rest > 0.0) {
    v.p_entail = v.p_entail / rest * (1.0 - pc);
    v.p_neutral = 1.0 - pc - v.p_entail;
  } else {
    v.p_entail = 0.0;
    v.p_neutral = 1.0 - pc;
  }
  v.p_contradict = pc;
  return v;
}

// ---------------------------------------------------------------------------
// Synthetic tuples

namespace {

struct AttributeKind {
  const char* key;
  std::vector<std::string> values;
  const char* setup_form;  // {n} name, {v} value, {x} filler
  const char* story_form;
};

const std::vector<AttributeKind>& attribute_kinds() {
  static const std::vector<AttributeKind> kinds = {
      {"occupation",
       {"baker", "fisherman", "teacher", "nurse", "carpenter", "lawyer", "pilot", "painter"},
       "{n} is a {v} in the town of {x}.",
       "{n} was still working as a {v} in the town of {x} that winter."},
      {"hometown",
       {"Lisbon", "Dublin", "Oslo", "Krakow", "Toronto", "Nairobi", "Osaka", "Lima"},
       "{n} grew up in {v} before moving to {x}.",
       "{n} still spoke fondly of growing up in {v}."},
      {"eye color",
       {"green", "brown", "gray", "blue", "hazel", "amber"},
       "{n} has {v} eyes and a quiet manner that people in {x} trust.",
       "{n} narrowed {v} eyes at the letter."},
      {"brother's name",
       {"Paul", "Marco", "Kenji", "Samuel", "Tomas", "Ivan", "Felix", "Arjun"},
       "{n} has a younger brother named {v} who lives in {x}.",
       "{n} phoned {v}, the younger brother, before sunrise."},
      {"dog's name",
       {"Biscuit", "Pepper", "Rufus", "Juniper", "Scout", "Maple", "Otis", "Clover"},
       "{n} owns a dog named {v} and walks it every evening in {x}.",
       "{n} called the dog named {v} home early that evening."},
  };
  return kinds;
}

const std::vector<std::string>& synthetic_first_names() {
  static const std::vector<std::string> v = {"Alice", "Beatrice", "Carmen", "Daria", "Elena", "Fiona",
                                             "Greta", "Hana", "Ingrid", "Jolene", "Kirsten", "Lorna",
                                             "Mirela", "Nadia", "Odette", "Priya", "Quinn", "Rosa",
                                             "Selma", "Tamsin", "Ulla", "Vera", "Wren", "Yara"};
  return v;
}

const std::vector<std::string>& synthetic_surnames() {
  static const std::vector<std::string> v = {"Moreau", "Okafor", "Lindqvist", "Brennan", "Castillo", "Novak",
                                             "Hartley", "Ferreira", "Abbott", "Kowalski", "Delacroix", "Haddad"};
  return v;
}

const std::vector<std::string>& synthetic_towns() {
  static const std::vector<std::string> v = {"Dunmore", "Ashford", "Kestrel Bay", "Millbrook", "Harrowgate",
                                             "Port Ellis", "Wexley", "Thornfield"};
  return v;
}

const std::vector<std::string>& companion_traits() {
  static const std::vector<std::string> v = {"a quiet man who keeps to himself", "a retired sailor with a loud laugh",
                                             "a shopkeeper who knows every rumor",
                                             "a young clerk with ambitions of his own"};
  return v;
}

const std::vector<std::string>& story_fillers() {
  static const std::vector<std::string> v = {
      "The morning fog rolled in from the water.", "Nobody else was awake yet.",
      "A cart rattled past on the cobblestones.", "The bells of the old church rang twice.",
      "Rain tapped against the window for an hour.", "The market was already crowded by noon."};
  return v;
}

std::string fill(std::string form, const std::string& n, const std::string& v, const std::string& x) {
  form = text::replace_all(std::move(form), "{n}", n);
  form = text::replace_all(std::move(form), "{v}", v);
  return text::replace_all(std::move(form), "{x}", x);
}

}  // namespace

SyntheticSet generate_synthetic_tuples(int count, std::uint64_t seed, const TemplateSet& templates) {
  if (count < 1) throw PreconditionError("synthetic tuple count must be >= 1");
  const EntailmentVerdict entails{0.95, 0.04, 0.01};
  const EntailmentVerdict contradicts{0.02, 0.03, 0.95};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& pool) -> const std::string& { return pool[rng() % pool.size()]; };

  SyntheticSet set;
  auto& fx = set.fixtures;
  const auto& firsts = synthetic_first_names();
  const auto& lasts = synthetic_surnames();
  for (int i = 0; i < count; ++i) {
    // Distinct full names across the set; companions come from the other end.
    const std::string name = firsts[static_cast<std::size_t>(i) % firsts.size()] + " " +
                             lasts[(static_cast<std::size_t>(i) / firsts.size() + rng() % lasts.size()) % lasts.size()];
    const std::string companion = "Walter " + lasts[(static_cast<std::size_t>(i) + 5) % lasts.size()];
    const std::string town = pick(synthetic_towns());
    const auto& kind = attribute_kinds()[rng() % attribute_kinds().size()];
    const std::size_t a = rng() % kind.values.size();
    const std::size_t b = (a + 1 + rng() % (kind.values.size() - 1)) % kind.values.size();
    const std::string& v = kind.values[a];
    const std::string& v_prime = kind.values[b];

    const std::string fact_s = fill(kind.setup_form, name, v, town);
    const std::string fact_sp = fill(kind.setup_form, name, v_prime, town);
    const std::string fact_t = fill(kind.story_form, name, v, town);
    const std::string fact_tp = fill(kind.story_form, name, v_prime, town);

    auto setup = [&](const std::string& fact) {
      return "Premise: In " + town + ", " + text::split_words(name).front() +
             " must decide whom to trust after a stranger arrives with a warning.\n\nSetting: The story is set in " +
             town + ", a small coastal town.\n\nCharacters:\n1. " + fact + "\n2. " + companion + " is " +
             pick(companion_traits()) + ".";
    };
    const auto& fillers = story_fillers();
    const std::size_t fa = rng() % fillers.size();
    const std::size_t fb = (fa + 1 + rng() % (fillers.size() - 1)) % fillers.size();
    const std::string& filler_a = fillers[fa];
    const std::string& filler_b = fillers[fb];
    auto story = [&](const std::string& fact) {
      return filler_a + " " + fact + " " + filler_b + " " + companion + " waited by the door.";
    };

    EvalTuple tp;
    tp.id = "synthetic-" + std::to_string(i + 1);
    tp.s = setup(fact_s);
    tp.s_prime = setup(fact_sp);
    tp.t = story(fact_t);
    tp.t_prime = story(fact_tp);
    set.tuples.push_back(tp);

    // Attribute pipeline: key line, QA confidence, value completion.
    const std::string key_line = "'s " + std::string(kind.key) + " is ";
    for (const auto& [fact, value] : std::vector<std::pair<std::string, std::string>>{
             {fact_s, v}, {fact_sp, v_prime}, {fact_t, v}, {fact_tp, v_prime}}) {
      fx.add_completion("Context (" + name + "): " + fact + "\n" + name, key_line + value);
      fx.add_completion(templates.render("value_plain", {{"fact", fact}, {"character", name}, {"key", kind.key}}),
                        " " + value + ".");
      fx.entail[{fact, attribute_sentence(name, kind.key, value, templates)}] = entails;
    }
    fx.qa.push_back({templates.render("qa_question", {{"character", name}, {"key", kind.key}}), "*", v, 0.9});

    // Ground truth between the two values, as rendered attributes and as
    // the original sentences.
    const std::string as = attribute_sentence(name, kind.key, v, templates);
    const std::string asp = attribute_sentence(name, kind.key, v_prime, templates);
    fx.entail[{as, asp}] = contradicts;
    fx.entail[{asp, as}] = contradicts;
    for (const auto& [x, y] : std::vector<std::pair<std::string, std::string>>{
             {fact_s, fact_t}, {fact_sp, fact_tp}, {fact_t, fact_s}, {fact_tp, fact_sp}}) {
      fx.entail[{x, y}] = entails;
    }
    for (const auto& [x, y] : std::vector<std::pair<std::string, std::string>>{
             {fact_s, fact_tp}, {fact_sp, fact_t}, {fact_tp, fact_s}, {fact_t, fact_sp},
             {fact_s, fact_sp}, {fact_sp, fact_s}, {fact_t, fact_tp}, {fact_tp, fact_t}}) {
      fx.entail[{x, y}] = contradicts;
    }
  }
  return set;
}

}  // namespace loom
