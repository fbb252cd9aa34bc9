#include "oracles.hpp"

#include <regex>

namespace loom::support {

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

bool person_oracle_rejects(const std::string& sentence) {
  static const std::regex curly("\xE2\x80\x9C|\xE2\x80\x9D");
  static const std::regex quoted("\"[^\"]*(\"|$)");
  static const std::regex word("[A-Za-z0-9]+");
  std::string s = std::regex_replace(sentence, curly, "\"");
  s = std::regex_replace(s, quoted, " ");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), word); it != std::sregex_iterator(); ++it) {
    std::string w = it->str();
    if (w == "I") return true;
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (w == "we" || w == "you") return true;
  }
  return false;
}

std::string random_person_sentence(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {
      "Mara", "walked", "the", "old", "road", "I", "we", "We", "you", "You", "YOU", "Iris", "weather",
      "youth", "Ian", "i", "I'm", "we'd", "you're", "said", "quietly", "and", "then", "laughed", "home",
      "Wesley", "yours", "it", "Ivy", "whispered", "to", "her", "brother", "at", "dawn"};
  static const std::vector<std::string> quotes = {"\"", "\xE2\x80\x9C", "\xE2\x80\x9D"};
  std::uniform_int_distribution<int> len(3, 14);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<std::size_t> qpick(0, quotes.size() - 1);
  std::uniform_int_distribution<int> roll(0, 9);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i > 0) out += ' ';
    if (roll(rng) == 0) out += quotes[qpick(rng)];
    out += words[pick(rng)];
    if (roll(rng) == 0) out += quotes[qpick(rng)];
    if (roll(rng) == 0) out += ',';
  }
  out += '.';
  return out;
}

const std::vector<FilterCase>& filter_cases() {
  using R = FilterReason;
  static const std::vector<FilterCase> cases = {
      {"empty string", "", "", R::empty, "", {}},
      {"whitespace only", "   \n\t  ", "", R::empty, "", {}},
      {"plain passage", "Mara crossed the bridge at dusk. The river below was loud and cold.", "", R::none, "", {}},
      {"intra 5-gram", "the old man by the sea walked. the old man by the sea smiled.", "", R::repetition,
       "the old man by the", {}},
      {"intra 5-gram ignores case and punctuation",
       "The storm hit the harbor hard. Later, the storm hit the harbor again.", "", R::repetition, "5-gram", {}},
      {"intra 4-gram only", "Mara lit the small lamp. Then Owen lit the small fire outside.", "", R::none, "", {}},
      {"cross-prompt 5-gram", "Then she opened the heavy door and stepped outside.",
       "Earlier that night she opened the heavy door twice.", R::repetition, "shared with prompt", {}},
      {"cross-prompt 5-gram normalized", "At last SHE opened the heavy, door.",
       "she opened the heavy door", R::repetition, "shared with prompt", {}},
      {"cross-prompt 4-gram only", "Then she opened the heavy gate quietly.",
       "she opened the heavy door", R::none, "", {}},
      {"near duplicate at ratio boundary",
       "Mara carried the lantern down toward the old mill slowly. Mara carried the basket down toward the red mill slowly.",
       "", R::repetition, "near duplicates", {}},
      {"near duplicate below boundary passes with smaller ratio",
       "Mara carried the lantern down toward the old mill slowly. Mara carried the basket down toward the red mill slowly.",
       "", R::none, "", 0.2 - 1e-9},
      {"near duplicate with larger ratio",
       "Mara carried the lantern down toward the old mill slowly. Mara carried the basket down toward the red mill slowly.",
       "", R::repetition, "near duplicates", 0.2 + 1e-9},
      {"three edits in ten words passes",
       "Mara carried the lantern down toward the old mill slowly. Mara carried the basket down past the red mill slowly.",
       "", R::none, "", {}},
      {"near duplicate with unequal lengths",
       "Mara carried the lantern down toward the old mill so slowly. Mara carried the basket down toward the mill so slowly.",
       "", R::repetition, "near duplicates", {}},
      {"hard banned comment marker", "The night ended quietly.\nComment from a reader follows", "", R::narration,
       "banned string", {}},
      {"hard banned copyright", "Copyright held by the estate of the writer.", "", R::narration, "banned string", {}},
      {"single soft banned string", "The chapter of her life closed with the harvest.", "", R::none, "", {}},
      {"two soft banned strings", "The chapter ended and a summary of the events was posted.", "", R::narration,
       "soft banned", {}},
      {"same soft banned string twice", "The chapter ended. Another chapter of the town began.", "", R::none, "", {}},
      {"soft banned case-insensitive", "OUTLINE and Premise were both missing.", "", R::narration, "soft banned", {}},
      {"colon as first word", "Note: the story continues after the storm.", "", R::narration, "colon", {}},
      {"colon at fourth word", "They reached the gate: locked and cold.", "", R::narration, "colon", {}},
      {"colon at fifth word", "They finally reached the gate: locked and cold.", "", R::none, "", {}},
      {"colon heading second paragraph", "Mara slept.\n\nDawn: cold and grey over the fields.", "", R::narration,
       "colon", {}},
      {"first person outside quotes", "I walked home.", "", R::person, "'I'", {}},
      {"first person inside quotes", "\"I am here,\" she said. She left.", "", R::none, "", {}},
      {"we at sentence start", "We left early that morning.", "", R::person, "We", {}},
      {"you mid sentence", "The sign told you nothing about the road.", "", R::person, "you", {}},
      {"you inside quotes", "\"You should go now,\" Mara said.", "", R::none, "", {}},
      {"contraction of I", "Later I'm sure she cried alone.", "", R::person, "'I'", {}},
      {"names that start with I", "Iris and Ian waved from the porch.", "", R::none, "", {}},
      {"words containing we and you", "The weather turned cold and his youth was over.", "", R::none, "", {}},
      {"curly quotes", "\xE2\x80\x9CI know,\xE2\x80\x9D she whispered.", "", R::none, "", {}},
      {"unclosed quote runs to the end", "She said, \"we will see what happens.", "", R::none, "", {}},
      {"lowercase i is not first person", "The roman numeral i was carved above the door.", "", R::none, "", {}},
      {"person after closed quote", "\"Run,\" she said, and we ran.", "", R::person, "we", {}},
      {"repetition takes precedence over person",
       "I saw the old man by the sea. I saw the old man by the sea again.", "", R::repetition, "", {}},
      {"narration takes precedence over person", "Copyright notice: I own this.", "", R::narration, "", {}},
  };
  return cases;
}

EntailmentVerdict verdict_for(Direction d) {
  switch (d) {
    case Direction::entail: return {0.90, 0.07, 0.03};
    case Direction::neutral: return {0.05, 0.90, 0.05};
    case Direction::contradict: return {0.03, 0.07, 0.90};
  }
  return {};
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::entail: return "entail";
    case Direction::neutral: return "neutral";
    case Direction::contradict: return "contradict";
  }
  return "?";
}

const std::vector<MergeCell>& merge_truth_table() {
  using D = Direction;
  using M = MergeOutcome;
  static const std::vector<MergeCell> table = {
      {D::entail, D::entail, M::kept_existing},
      {D::entail, D::neutral, M::kept_existing},
      {D::entail, D::contradict, M::kept_existing},
      {D::neutral, D::entail, M::replaced},
      {D::neutral, D::neutral, M::kept_existing},
      {D::neutral, D::contradict, M::flagged},
      {D::contradict, D::entail, M::replaced},
      {D::contradict, D::neutral, M::flagged},
      {D::contradict, D::contradict, M::flagged},
  };
  return table;
}

}  // namespace loom::support
