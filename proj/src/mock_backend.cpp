#include "storyloom/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

// ---------------------------------------------------------------------------
// Fixtures

void MockFixtures::add_completion(const std::string& match, const std::string& response) {
  for (auto& rule : complete) {
    if (rule.match == match) {
      rule.responses.push_back(response);
      return;
    }
  }
  complete.push_back({match, {response}});
}

void MockFixtures::merge(const MockFixtures& other) {
  for (const auto& r : other.complete) {
    for (const auto& resp : r.responses) add_completion(r.match, resp);
  }
  insert.insert(insert.end(), other.insert.begin(), other.insert.end());
  edit.insert(edit.end(), other.edit.begin(), other.edit.end());
  for (const auto& [k, v] : other.entail) entail[k] = v;
  qa.insert(qa.end(), other.qa.begin(), other.qa.end());
  coherence.insert(coherence.end(), other.coherence.begin(), other.coherence.end());
  relevance.insert(relevance.end(), other.relevance.begin(), other.relevance.end());
  non_person.insert(other.non_person.begin(), other.non_person.end());
}

namespace {

double parse_prob(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double p = std::stod(s, &used);
    if (used != s.size() || p < 0.0 || p > 1.0) throw std::invalid_argument(s);
    return p;
  } catch (const std::exception&) {
    throw ConfigError("fixtures line " + std::to_string(line_no) + ": bad probability '" + s + "'");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(text::unescape_line(line.substr(start, tab - start)));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string fmt_prob(double p) {
  std::ostringstream ss;
  ss.precision(17);
  ss << p;
  return ss.str();
}

}  // namespace

MockFixtures parse_fixtures(const std::string& content) {
  MockFixtures fx;
  std::size_t line_no = 0;
  for (const auto& raw : text::split_lines(content)) {
    ++line_no;
    if (text::trim(raw).empty() || raw.front() == '#') continue;
    const auto f = split_tabs(raw);
    const std::string& kind = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) {
        throw ConfigError("fixtures line " + std::to_string(line_no) + ": '" + kind + "' expects " +
                          std::to_string(n - 1) + " fields, got " + std::to_string(f.size() - 1));
      }
    };
    if (kind == "complete") {
      need(3);
      fx.add_completion(f[1], f[2]);
    } else if (kind == "insert") {
      need(4);
      fx.insert.push_back({f[1], f[2], f[3]});
    } else if (kind == "edit") {
      need(4);
      fx.edit.push_back({f[1], f[2], f[3]});
    } else if (kind == "entail") {
      need(6);
      EntailmentVerdict v{parse_prob(f[3], line_no), parse_prob(f[4], line_no),
                          parse_prob(f[5], line_no)};
      if (!is_valid(v)) {
        throw ConfigError("fixtures line " + std::to_string(line_no) + ": verdict must sum to 1");
      }
      fx.entail[{f[1], f[2]}] = v;
    } else if (kind == "qa") {
      need(5);
      fx.qa.push_back({f[1], f[2], f[3], parse_prob(f[4], line_no)});
    } else if (kind == "coherence") {
      need(3);
      fx.coherence.push_back({f[1], parse_prob(f[2], line_no)});
    } else if (kind == "relevance") {
      need(3);
      fx.relevance.push_back({f[1], parse_prob(f[2], line_no)});
    } else if (kind == "nonperson") {
      need(2);
      fx.non_person.insert(f[1]);
    } else {
      throw ConfigError("fixtures line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  return fx;
}

MockFixtures load_fixtures(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read fixtures file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fixtures(ss.str());
}

std::string MockFixtures::to_text() const {
  std::ostringstream out;
  auto row = [&out](std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out << '\t';
      out << text::escape_line(f);
      first = false;
    }
    out << '\n';
  };
  for (const auto& r : complete) {
    for (const auto& resp : r.responses) row({"complete", r.match, resp});
  }
  for (const auto& r : insert) row({"insert", r.suffix, r.prefix_match, r.bridge});
  for (const auto& r : edit) row({"edit", r.instruction, r.find, r.replace});
  for (const auto& [k, v] : entail) {
    row({"entail", k.first, k.second, fmt_prob(v.p_entail), fmt_prob(v.p_neutral),
         fmt_prob(v.p_contradict)});
  }
  for (const auto& r : qa) row({"qa", r.question, r.context_match, r.answer, fmt_prob(r.confidence)});
  for (const auto& r : coherence) row({"coherence", r.match, fmt_prob(r.probability)});
  for (const auto& r : relevance) row({"relevance", r.match, fmt_prob(r.probability)});
  for (const auto& n : non_person) row({"nonperson", n});
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthesis vocabulary

namespace {

using Pool = std::vector<std::string>;

const Pool kFemaleNames = {"Lila", "Mara", "Nora", "Elena", "Grace", "Hazel",
                           "Iris", "June", "Clara", "Vera", "Ada", "Rosa"};
const Pool kMaleNames = {"Owen", "Felix", "Jonah", "Silas", "Arthur", "Leo",
                         "Tobias", "Emmett", "Hugo", "Calvin", "Simon", "Miles"};
const Pool kSurnames = {"Rosen", "Petrova", "Jackson", "Whitfield", "Moreno", "Calloway",
                        "Hart", "Lindqvist", "Okafor", "Brennan", "Sato", "Delacroix"};
const Pool kJunkNames = {"the protagonist", "Age: 34", "Gender: female", "Dr. Helen Price",
                         "Unknown.", "Mrs. Ortiz", "main character"};
const Pool kOccupations = {"retired lighthouse keeper", "young botanist", "night-shift nurse",
                           "struggling violinist", "small-town detective", "ship's cartographer",
                           "high school teacher", "traveling clockmaker", "bakery owner",
                           "museum archivist"};
const Pool kPlaces = {"a fishing village", "a crowded port city", "a mountain monastery",
                      "a desert research station", "a sleepy river town", "an island observatory",
                      "a snowbound railway town", "a vineyard estate", "a flooded capital",
                      "a border outpost"};
const Pool kDiscoveries = {"a letter from a sister thought long dead",
                           "a map hidden inside an old violin",
                           "that the town's founder was a thief",
                           "a door that only appears at low tide",
                           "a journal predicting the week's events",
                           "a stranger who knows every family secret",
                           "that the harvest has been poisoned",
                           "a sealed vault beneath the chapel",
                           "an inheritance with impossible conditions",
                           "a radio signal from an abandoned ship"};
const Pool kGoals = {"uncover the truth", "protect the family name", "reunite with an old friend",
                     "repay a forgotten debt", "stop a rival from taking everything",
                     "decide whom to trust", "escape before the storm arrives",
                     "confront a painful past"};
const Pool kDeadlines = {"the winter festival", "the tide turns", "the election",
                         "the last train leaves", "the harvest ends", "the new moon"};
const Pool kSettingPlaces = {"the coastal village of Port Alder", "the hill town of Marrowgate",
                             "a crumbling estate outside Vienna", "the river city of Low Mersey",
                             "a remote research station in the Atacama desert",
                             "the mining town of Greyhollow", "a quiet suburb of Ridgefield"};
const Pool kSettingTimes = {"a long, cold winter", "the last weeks of summer", "the early 1920s",
                            "a season of endless rain", "the years after the war"};
const Pool kSettingExtras = {"Fishing boats line the harbor.", "Few strangers ever visit.",
                             "The streets are lit by gas lamps.", "Everyone knows everyone."};
const Pool kFeatures = {"curly brown hair and hazel eyes", "a quiet voice and a quick temper",
                        "weathered hands and a kind smile", "short grey hair and a sharp gaze",
                        "a limp from an old accident", "bright green eyes and freckles"};
const Pool kTraits = {"stubborn but loyal", "curious and restless", "gentle and patient",
                      "secretive and clever", "brave to a fault", "anxious but determined"};
const Pool kWishes = {"wants to leave town someday", "keeps a notebook of every secret",
                      "would do anything for family", "hopes to prove everyone wrong",
                      "still mourns a lost brother", "dreams of the sea"};
const Pool kEvents = {"discovers a secret that changes everything",
                      "faces an old rival in a tense confrontation",
                      "loses something precious and must search for it",
                      "forms an unlikely alliance with a stranger",
                      "uncovers the truth about the town's past",
                      "makes a sacrifice to protect the others",
                      "is betrayed by someone close",
                      "finds the courage to speak the truth",
                      "escapes a dangerous trap at the last moment",
                      "learns an important lesson about trust",
                      "returns home changed by the journey",
                      "sets out on a long and uncertain journey"};
const Pool kMinorEvents = {"notices a clue that others overlooked",
                           "argues with a friend about what to do next",
                           "travels to an unfamiliar part of town",
                           "hides from someone who is searching for them",
                           "finds an unexpected helper",
                           "makes a risky decision under pressure",
                           "receives troubling news",
                           "confronts a fear from childhood"};
const Pool kVerbsPast = {"carried", "studied", "dropped", "polished", "mended", "opened",
                         "hid", "found", "traced", "lifted", "folded", "guarded",
                         "painted", "weighed", "unwrapped", "counted", "buried", "sketched",
                         "inspected", "gathered", "balanced", "examined", "rescued", "borrowed",
                         "cleaned", "repaired", "stacked", "sorted", "wrapped", "returned"};
const Pool kAdjectives = {"old", "heavy", "fragile", "silver", "battered", "crooked", "faded",
                          "narrow", "quiet", "dusty", "polished", "curious", "broken", "warm",
                          "hollow", "rusted", "painted", "tiny", "enormous", "damp", "bright",
                          "crimson", "wooden", "brittle", "tangled", "scorched", "gentle",
                          "hidden", "pale", "ancient"};
const Pool kNouns = {"lantern", "letter", "compass", "basket", "ledger", "kettle", "violin",
                     "map", "key", "photograph", "blanket", "rope", "bottle", "journal",
                     "coin", "bucket", "ribbon", "candle", "hammer", "shovel", "mirror",
                     "trunk", "feather", "bell", "clock", "anchor", "pencil", "teacup",
                     "scarf", "ladder", "envelope", "helmet", "paddle", "saddle", "quilt",
                     "spool", "chisel", "flute", "locket", "satchel"};
const Pool kPreps = {"across", "beside", "behind", "under", "near", "inside", "along",
                     "past", "toward", "beyond", "around", "through"};
const Pool kPlaceNouns = {"yard", "kitchen", "harbor", "chapel", "cellar", "orchard", "bridge",
                          "market", "library", "stable", "attic", "garden", "station",
                          "workshop", "hallway", "porch", "pier", "meadow", "alley", "tower",
                          "bakery", "greenhouse", "courtyard", "riverbank", "schoolhouse"};
const Pool kAdverbs = {"slowly", "quietly", "carefully", "suddenly", "eagerly", "nervously",
                       "gently", "silently", "briskly", "stubbornly", "patiently", "softly",
                       "hastily", "warily", "calmly", "proudly", "sadly", "boldly",
                       "absently", "firmly", "lightly", "wearily", "cheerfully", "grimly",
                       "steadily"};
const Pool kIntransitive = {"creaked", "rattled", "flickered", "sighed", "settled", "swayed",
                            "hummed", "shivered", "glowed", "trembled", "whistled", "dripped"};
const Pool kDialogueOpeners = {"Find the", "Hide the", "Bring the", "Watch the", "Forget the",
                                "Where's the", "I lost the", "You took the", "We need the",
                                "Fetch the", "Mind the", "Drop the"};
const Pool kMotions = {"walked", "hurried", "drifted", "stepped", "ran", "wandered", "limped",
                       "marched", "crept", "strolled"};
const Pool kMotionPreps = {"toward", "into", "past", "around", "out of"};
const Pool kSaid = {"said", "whispered", "muttered", "replied", "answered", "insisted"};

const std::set<std::string> kNotNameWords = {
    "The", "A", "An", "In", "On", "At", "When", "After", "Before", "She", "He", "They", "It",
    "Chapter", "Full", "Relevant", "Previous", "Events", "Summary", "Premise", "Setting",
    "Characters", "Outline", "Question", "List", "Context", "Character", "Portrait", "Name",
    "This", "That", "There", "Her", "His", "Their", "One", "Later", "Write", "Describe"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  double unit() { return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0); }
  const std::string& pick(const Pool& pool) { return pool[below(pool.size())]; }

 private:
  std::mt19937_64 gen_;
};

std::string last_line(const std::string& s) {
  const std::string t = text::trim(s);
  const auto pos = t.rfind('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

std::string pronoun_for(const std::string& name) {
  const auto words = text::split_words(name);
  if (words.empty()) return "She";
  if (std::find(kMaleNames.begin(), kMaleNames.end(), words.front()) != kMaleNames.end()) return "He";
  return "She";
}

// "First Last" pairs found in `s`, in order of first appearance.
std::vector<std::string> full_names_in(const std::string& s) {
  static const std::regex re(R"(\b([A-Z][a-z]+) ([A-Z][a-z]+)\b)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    const std::string a = (*it)[1];
    const std::string b = (*it)[2];
    if (kNotNameWords.contains(a) || kNotNameWords.contains(b)) continue;
    const std::string name = a + " " + b;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

std::string first_name(const std::string& full) {
  const auto w = text::split_words(full);
  return w.empty() ? full : w.front();
}

std::string truncate_words(const std::string& s, int max_words) {
  WhitespaceTokenizer tok;
  if (tok.count_tokens(s) <= max_words) return s;
  // keep the leading max_words tokens
  std::size_t i = 0;
  int seen = 0;
  bool in_word = false;
  for (; i < s.size(); ++i) {
    const bool space = std::isspace(static_cast<unsigned char>(s[i])) != 0;
    if (!space && !in_word) {
      if (seen == max_words) break;
      ++seen;
    }
    in_word = !space;
  }
  return text::trim(s.substr(0, i));
}

std::string apply_stops(std::string s, const std::vector<std::string>& stops) {
  std::size_t cut = s.size();
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    const auto pos = s.find(stop);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }
  s.resize(cut);
  return s;
}

// Remainder of `sentence` after a leading name (full or first), or nullopt.
std::optional<std::string> after_leading_name(const std::string& sentence, const std::string& full) {
  for (const std::string& n : {full, first_name(full)}) {
    if (sentence.starts_with(n + " ") || sentence.starts_with(n + "'")) {
      return sentence.substr(n.size());
    }
  }
  return std::nullopt;
}

// --- prompt-kind synthesizers ----------------------------------------------

std::string synth_premise(std::uint64_t seed, int sample) {
  const std::size_t total = 24 * kOccupations.size() * kPlaces.size() * kDiscoveries.size();
  // 7919 is coprime with total (24000), so samples 0..total-1 are distinct.
  const std::size_t idx = (static_cast<std::size_t>(sample) * 7919 + seed % total) % total;
  std::size_t r = idx;
  const std::size_t name_i = r % 24;
  r /= 24;
  const std::size_t occ_i = r % kOccupations.size();
  r /= kOccupations.size();
  const std::size_t place_i = r % kPlaces.size();
  r /= kPlaces.size();
  const std::size_t disc_i = r % kDiscoveries.size();
  Rng rng(text::hash_combine(seed, static_cast<std::uint64_t>(sample) + 17));
  const bool female = name_i < 12;
  const std::string first = female ? kFemaleNames[name_i] : kMaleNames[name_i - 12];
  const std::string name = first + " " + rng.pick(kSurnames);
  return " " + name + ", a " + kOccupations[occ_i] + " in " + kPlaces[place_i] + ", discovers " +
         kDiscoveries[disc_i] + ". " + (female ? "She" : "He") + " must " + rng.pick(kGoals) +
         " before " + rng.pick(kDeadlines) + ".";
}

std::string synth_setting(Rng& rng) {
  return " " + rng.pick(kSettingPlaces) + " during " + rng.pick(kSettingTimes) + ". " +
         rng.pick(kSettingExtras);
}

std::string synth_name(const std::string& prompt, Rng& rng) {
  const auto premise_line = prompt.substr(0, prompt.find('\n'));
  const auto in_premise = full_names_in(premise_line);
  const std::size_t roll = rng.below(10);
  if (roll < 3 && !in_premise.empty()) return " " + in_premise[rng.below(in_premise.size())];
  if (roll < 5) return " " + rng.pick(kJunkNames);
  const bool female = rng.below(2) == 0;
  const std::string first = rng.pick(female ? kFemaleNames : kMaleNames);
  if (rng.below(10) < 7) return " " + first + " " + rng.pick(kSurnames);
  return " " + first;
}

std::string synth_description(const std::string& name, Rng& rng) {
  const std::string pron = pronoun_for(name);
  return " a " + rng.pick(kOccupations) + " with " + rng.pick(kFeatures) + ". " + pron + " is " +
         rng.pick(kTraits) + " and " + rng.pick(kWishes) + ".";
}

// Characters described as "First Last is ..." at the start of a line win;
// otherwise any capitalized name pair in the prompt.
std::vector<std::string> character_names_in(const std::string& prompt) {
  static const std::regex described(R"((?:^|\n)(?:\d+\. )?([A-Z][a-z]+ [A-Z][a-z]+) is )");
  std::vector<std::string> names;
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), described); it != std::sregex_iterator();
       ++it) {
    const std::string n = (*it)[1];
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  if (names.empty()) names = full_names_in(prompt);
  if (names.empty()) names = {"Lila Rosen", "Owen Hart"};
  return names;
}

std::string synth_outline(const std::string& prompt, Rng& rng, bool minor) {
  const auto names = character_names_in(prompt);
  std::size_t count = 4;
  if (!minor) {
    static const std::size_t kCounts[] = {3, 3, 4, 2};
    count = kCounts[rng.below(4)];
  }
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string subject = first_name(names[rng.below(names.size())]);
    const std::string event = rng.pick(minor ? kMinorEvents : kEvents);
    if (i == 0) {
      out += " " + subject + " " + event + ".";
    } else {
      out += "\n" + std::to_string(i + 1) + ". " + subject + " " + event + ".";
    }
  }
  return out;
}

std::string synth_summary(const std::string& prompt) {
  const auto pos = prompt.rfind("\n\nSummarize");
  const std::string passages = prompt.substr(0, pos);
  std::vector<std::string> firsts;
  for (const auto& para : text::split_paragraphs(passages)) {
    const auto s = text::split_sentences(para);
    if (!s.empty()) firsts.push_back(s.front());
  }
  if (firsts.size() > 4) firsts.resize(4);
  return " " + text::join(firsts, " ");
}

std::string synth_facts(const std::string& prompt, int sample) {
  const auto qpos = prompt.rfind("\n\nQuestion: List very brief facts about");
  const std::string passage = prompt.substr(0, qpos);
  const std::string ll = last_line(prompt);
  const std::string character = text::trim(ll.substr(ll.find('.') + 1));
  std::vector<std::string> facts;
  for (const auto& s : text::split_sentences(passage)) {
    if (s.find('"') != std::string::npos) continue;
    if (auto rest = after_leading_name(s, character)) {
      facts.push_back(character + *rest);
      if (facts.size() == 3) break;
    }
  }
  if (facts.empty()) facts.push_back(character + " is present in the passage.");
  if (sample % 3 == 2 && facts.size() >= 2) facts.pop_back();
  std::string out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (i == 0) {
      out += facts[i].substr(character.size());
    } else {
      out += "\n\n" + std::to_string(i + 1) + ". " + facts[i];
    }
  }
  return out;
}

std::string synth_keys(const std::string& prompt) {
  const auto cpos = prompt.rfind("Context (");
  const std::string tail = prompt.substr(cpos + 9);
  const auto close = tail.find("): ");
  const std::string character = tail.substr(0, close);
  std::string fact = tail.substr(close + 3);
  fact = fact.substr(0, fact.find('\n'));
  if (auto rest = after_leading_name(text::trim(fact), character)) {
    std::string r = *rest;
    while (!r.empty() && (r.back() == '.' || r.back() == '!')) r.pop_back();
    return r;
  }
  return " is unknown";
}

// Completes a short stem (the last line) from the paragraph(s) above it.
std::optional<std::string> synth_stem(const std::string& prompt) {
  const auto pos = prompt.rfind("\n\n");
  if (pos == std::string::npos) return std::nullopt;
  const std::string context = prompt.substr(0, pos);
  const std::string stem = prompt.substr(pos + 2);
  if (stem.empty() || stem.find('\n') != std::string::npos) return std::nullopt;
  const char last = stem.back();
  if (last == '.' || last == '!' || last == '?' || last == '"' || last == ':') return std::nullopt;
  const auto stem_words = text::split_words(stem);
  if (stem_words.size() < 2 || stem_words.size() > 12) return std::nullopt;

  auto value_after = [&](std::size_t at) {
    std::string rest = context.substr(at);
    const auto end = rest.find_first_of(".,;!?\n");
    return text::trim(rest.substr(0, end));
  };
  const std::string tail2 = stem_words[stem_words.size() - 2] + " " + stem_words.back();
  if (auto at = context.find(tail2 + " "); at != std::string::npos) {
    const std::string v = value_after(at + tail2.size() + 1);
    if (!v.empty()) return " " + v + ".";
  }
  if (auto at = context.find("'s "); at != std::string::npos) {
    const std::string v = value_after(at + 3);
    if (!v.empty()) return " " + v + ".";
  }
  return std::string(" unknown.");
}

std::string synth_story(const std::string& prompt, const GenParams& params, Rng& rng) {
  if (rng.below(40) == 0) return "";
  auto names = character_names_in(prompt);
  std::vector<std::string> firsts;
  for (const auto& n : names) firsts.push_back(first_name(n));

  const int max_words = params.max_tokens;
  const int target = std::max(1, static_cast<int>(max_words * (0.85 + 0.15 * rng.unit())));
  const bool first_person_leak = rng.below(12) == 0;

  WhitespaceTokenizer tok;
  std::vector<std::string> paragraphs;
  std::vector<std::string> current;
  int words = 0;
  std::size_t para_len = 3 + rng.below(3);
  int sentence_no = 0;
  while (true) {
    std::string s;
    const std::string& a = firsts[rng.below(firsts.size())];
    const std::string& b = firsts[rng.below(firsts.size())];
    switch (sentence_no == 3 && first_person_leak ? 6 : rng.below(6)) {
      case 0:
        s = a + " " + rng.pick(kVerbsPast) + " the " + rng.pick(kAdjectives) + " " +
            rng.pick(kNouns) + " " + rng.pick(kPreps) + " the " + rng.pick(kPlaceNouns) + ".";
        break;
      case 1:
        s = "The " + rng.pick(kNouns) + " " + rng.pick(kIntransitive) + " " + rng.pick(kAdverbs) +
            " as " + b + " " + rng.pick(kVerbsPast) + " a " + rng.pick(kAdjectives) + " " +
            rng.pick(kNouns) + ".";
        break;
      case 2:
        s = "\"" + rng.pick(kDialogueOpeners) + " " + rng.pick(kAdjectives) + " " + rng.pick(kNouns) +
            ",\" " + a + " " + rng.pick(kSaid) + " " + rng.pick(kAdverbs) + ".";
        break;
      case 3:
        s = pronoun_for(a) + " " + rng.pick(kVerbsPast) + " a " + rng.pick(kAdjectives) + " " +
            rng.pick(kNouns) + " and " + rng.pick(kMotions) + " " + rng.pick(kAdverbs) + " " +
            rng.pick(kMotionPreps) + " the " + rng.pick(kPlaceNouns) + ".";
        break;
      case 4:
        if (rng.below(6) == 0) {
          const bool female = rng.below(2) == 0;
          s = "Later that day, " + a + " met a stranger named " +
              rng.pick(female ? kFemaleNames : kMaleNames) + " " + rng.pick(kSurnames) +
              " near the " + rng.pick(kPlaceNouns) + ".";
        } else {
          s = "Near the " + rng.pick(kPlaceNouns) + ", " + a + " " + rng.pick(kVerbsPast) +
              " the " + rng.pick(kNouns) + " and " + rng.pick(kVerbsPast) + " the " +
              rng.pick(kAdjectives) + " " + rng.pick(kNouns) + ".";
        }
        break;
      case 5:
        s = a + " " + rng.pick(kAdverbs) + " " + rng.pick(kVerbsPast) + " a " + rng.pick(kNouns) +
            " while " + b + " " + rng.pick(kVerbsPast) + " the " + rng.pick(kAdjectives) + " " +
            rng.pick(kNouns) + ".";
        break;
      default:
        s = "I remember the " + rng.pick(kNouns) + " was " + rng.pick(kAdjectives) + ".";
        break;
    }
    const int n = tok.count_tokens(s);
    if (words + n > target) break;
    words += n;
    ++sentence_no;
    current.push_back(std::move(s));
    if (current.size() == para_len) {
      paragraphs.push_back(text::join(current, " "));
      current.clear();
      para_len = 3 + rng.below(3);
    }
  }
  if (!current.empty()) paragraphs.push_back(text::join(current, " "));
  return text::join(paragraphs, "\n\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(MockFixtures fixtures, MockOptions options)
    : fixtures_(std::move(fixtures)), options_(options) {}

std::string MockBackend::synthesize(const std::string& prompt, const GenParams& params,
                                    int sample) const {
  Rng rng(text::hash_combine(text::fnv1a(prompt, options_.seed ^ 0x5bd1e995ULL),
                             static_cast<std::uint64_t>(sample)));
  const std::string trimmed = text::trim(prompt);
  const std::string ll = last_line(prompt);

  if (trimmed.ends_with("Premise:")) return synth_premise(options_.seed, sample);
  if (trimmed.ends_with("The story is set in")) return synth_setting(rng);
  if (trimmed.ends_with("Full Name:")) return synth_name(prompt, rng);
  if (ll.starts_with("Character Portrait:") && trimmed.ends_with(" is")) {
    const std::string name = text::trim(ll.substr(19, ll.size() - 19 - 3));
    return synth_description(name, rng);
  }
  if (trimmed.ends_with("1.") && prompt.find("List the minor events") != std::string::npos) {
    return synth_outline(prompt, rng, true);
  }
  if (trimmed.ends_with("1.") && prompt.find("Outline the main plot points") != std::string::npos) {
    return synth_outline(prompt, rng, false);
  }
  if (prompt.find("\n\nSummarize the events above") != std::string::npos) return synth_summary(prompt);
  if (prompt.find("\n\nQuestion: List very brief facts about") != std::string::npos) {
    return synth_facts(prompt, sample);
  }
  if (prompt.starts_with("Extract attributes from the given context")) return synth_keys(prompt);
  if (auto stem = synth_stem(prompt)) return *stem;
  return synth_story(prompt, params, rng);
}

std::vector<std::string> MockBackend::complete(const std::string& prompt, const GenParams& params) {
  check_completion_request(*this, tokenizer_, prompt, params);

  const MockFixtures::CompleteRule* rule = nullptr;
  for (const auto& r : fixtures_.complete) {
    if (prompt.find(r.match) != std::string::npos &&
        (rule == nullptr || r.match.size() > rule->match.size())) {
      rule = &r;
    }
  }
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(params.num_samples));
  for (int k = 0; k < params.num_samples; ++k) {
    const int sample = params.sample_offset + k;
    std::string s = rule ? rule->responses[static_cast<std::size_t>(sample) % rule->responses.size()]
                         : synthesize(prompt, params, sample);
    s = apply_stops(std::move(s), params.stop_sequences);
    out.push_back(truncate_words(s, params.max_tokens));
  }
  return out;
}

std::string MockBackend::insert(const std::string& prefix, const std::string& suffix,
                                const GenParams& params) {
  if (text::trim(prefix).empty()) throw PreconditionError("insert: prefix must be non-empty");
  check_completion_request(*this, tokenizer_, prefix + suffix, params);
  std::string bridge;
  bool found = false;
  for (const auto& r : fixtures_.insert) {
    if (r.suffix == suffix && (r.prefix_match == "*" || prefix.find(r.prefix_match) != std::string::npos)) {
      bridge = r.bridge;
      found = true;
    }
  }
  if (!found) {
    Rng rng(text::hash_combine(text::fnv1a(prefix, options_.seed), text::fnv1a(suffix)));
    const auto names = character_names_in(prefix);
    bridge = first_name(names[rng.below(names.size())]) + " looked back on everything that had " +
             "happened. The " + rng.pick(kNouns) + " " + rng.pick(kIntransitive) + " " +
             rng.pick(kAdverbs) + ", and the long night was finally over.";
  }
  if (!suffix.empty()) bridge = text::replace_all(bridge, suffix, "");
  return truncate_words(text::trim(bridge), params.max_tokens);
}

std::string MockBackend::edit(const std::string& input, const std::string& instruction) {
  if (text::trim(input).empty()) throw PreconditionError("edit: text must be non-empty");
  if (text::trim(instruction).empty()) throw PreconditionError("edit: instruction must be non-empty");
  for (const auto& r : fixtures_.edit) {
    if (r.instruction == instruction && input.find(r.find) != std::string::npos) {
      return text::replace_all(input, r.find, r.replace);
    }
  }
  return input;
}

std::vector<std::vector<float>> MockBackend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw PreconditionError("embed: no texts");
  const auto dim = static_cast<std::size_t>(options_.embedding_dim);
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<float> v(dim, 0.0f);
    for (const auto& w : text::normalized_words(t)) v[text::fnv1a(w) % dim] += 1.0f;
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm > 0.0) {
      const float inv = static_cast<float>(1.0 / std::sqrt(norm));
      for (float& x : v) x *= inv;
    }
    out.push_back(std::move(v));
  }
  return out;
}

EntailmentVerdict MockBackend::entail(const std::string& premise, const std::string& hypothesis) {
  if (text::trim(premise).empty() || text::trim(hypothesis).empty()) {
    throw PreconditionError("entail: texts must be non-empty");
  }
  if (auto it = fixtures_.entail.find({premise, hypothesis}); it != fixtures_.entail.end()) {
    return it->second;
  }
  if (text::trim(premise) == text::trim(hypothesis)) return options_.reflexive;
  return options_.neutral_default;
}

QAResult MockBackend::answer(const std::string& question, const std::string& context) {
  if (text::trim(question).empty() || text::trim(context).empty()) {
    throw PreconditionError("answer: question and context must be non-empty");
  }
  for (const auto& r : fixtures_.qa) {
    if (r.question == text::trim(question) &&
        (r.context_match == "*" || context.find(r.context_match) != std::string::npos)) {
      return {r.answer, r.confidence};
    }
  }
  return {"", 0.0};
}

std::vector<Entity> MockBackend::detect_entities(const std::string& input) {
  if (text::trim(input).empty()) throw PreconditionError("detect_entities: empty text");
  std::vector<Entity> out;
  auto emit = [&](std::vector<std::string>& run) {
    if (run.empty()) return;
    std::string name = text::join(run, " ");
    run.clear();
    if (name == "I") return;
    if (std::any_of(out.begin(), out.end(), [&](const Entity& e) { return e.name == name; })) return;
    out.push_back({name, !fixtures_.non_person.contains(name)});
  };

  for (const auto& sentence : text::split_sentences(input)) {
    const auto words = text::split_words(sentence);
    std::vector<std::string> run;
    bool run_at_start = false;
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::string w = words[i];
      std::size_t b = 0;
      while (b < w.size() && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
      w = w.substr(b);
      bool ends_run = false;
      while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) {
        if (w.ends_with("'s")) break;
        w.pop_back();
        ends_run = true;
      }
      const std::string bare = text::strip_possessive(w);
      if (bare != w) ends_run = true;
      if (text::is_capitalized(bare)) {
        if (run.empty()) run_at_start = (i == 0);
        run.push_back(bare);
      } else {
        if (!run_at_start) emit(run);
        run.clear();
      }
      if (ends_run) {
        if (!run_at_start) emit(run);
        run.clear();
      }
    }
    if (!run_at_start) emit(run);
  }
  return out;
}

double MockBackend::coherence(const std::string& prefix, const std::string& continuation) {
  for (const auto& r : fixtures_.coherence) {
    if (continuation.find(r.match) != std::string::npos) return r.probability;
  }
  Rng rng(text::hash_combine(text::fnv1a(prefix, options_.seed), text::fnv1a(continuation)));
  return 0.2 + 0.75 * rng.unit();
}

double MockBackend::relevance(const std::string& summary, const std::string& passage) {
  for (const auto& r : fixtures_.relevance) {
    if (passage.find(r.match) != std::string::npos) return r.probability;
  }
  Rng rng(text::hash_combine(text::fnv1a(summary, options_.seed ^ 0xabcdefULL), text::fnv1a(passage)));
  return 0.2 + 0.75 * rng.unit();
}

Backends make_mock_backends(MockFixtures fixtures, MockOptions options) {
  auto mock = std::make_shared<MockBackend>(std::move(fixtures), options);
  Backends b;
  b.lm = mock;
  b.embedder = mock;
  b.entailment = mock;
  b.qa = mock;
  b.ner = mock;
  b.scorer = mock;
  b.tokenizer = std::make_shared<WhitespaceTokenizer>();
  return b;
}

}  // namespace loom
