#include "tmr/types.hpp"

namespace tmr {

// Built-in fixture corpus: 104 semantically related cue/target pairs.
std::vector<WordPairItem> default_word_corpus() {
  static const char* kPairs[kCorpusSize][2] = {
      {"event", "festival"},   {"bread", "butter"},     {"ocean", "wave"},
      {"winter", "snow"},      {"doctor", "nurse"},     {"table", "chair"},
      {"lamp", "light"},       {"king", "crown"},       {"river", "bridge"},
      {"cloud", "rain"},       {"engine", "train"},     {"violin", "orchestra"},
      {"pencil", "paper"},     {"garden", "flower"},    {"candle", "flame"},
      {"mirror", "glass"},     {"window", "curtain"},   {"ladder", "roof"},
      {"forest", "tree"},      {"needle", "thread"},    {"button", "shirt"},
      {"spider", "web"},       {"honey", "bee"},        {"saddle", "horse"},
      {"anchor", "ship"},      {"pillow", "blanket"},   {"hammer", "nail"},
      {"guitar", "string"},    {"camera", "photo"},     {"letter", "stamp"},
      {"soldier", "army"},     {"teacher", "school"},   {"farmer", "field"},
      {"singer", "stage"},     {"painter", "canvas"},   {"baker", "oven"},
      {"pilot", "airplane"},   {"sailor", "harbor"},    {"hunter", "forest"},
      {"dancer", "music"},     {"island", "beach"},     {"desert", "sand"},
      {"valley", "mountain"},  {"meadow", "grass"},     {"tunnel", "cave"},
      {"castle", "tower"},     {"church", "bell"},      {"market", "basket"},
      {"museum", "painting"},  {"library", "book"},     {"kitchen", "stove"},
      {"cellar", "wine"},      {"attic", "dust"},       {"stable", "straw"},
      {"harvest", "grain"},    {"journey", "suitcase"}, {"breakfast", "coffee"},
      {"dinner", "plate"},     {"lemon", "sour"},       {"pepper", "salt"},
      {"cherry", "pit"},       {"walnut", "shell"},     {"barrel", "cider"},
      {"bottle", "cork"},      {"kettle", "tea"},       {"spoon", "soup"},
      {"knife", "fork"},       {"wallet", "money"},     {"ticket", "cinema"},
      {"wheel", "bicycle"},    {"magnet", "iron"},      {"compass", "north"},
      {"clock", "hour"},       {"calendar", "month"},   {"thermometer", "fever"},
      {"umbrella", "storm"},   {"glove", "hand"},       {"scarf", "neck"},
      {"boot", "leather"},     {"ribbon", "gift"},      {"diamond", "ring"},
      {"pearl", "oyster"},     {"feather", "bird"},     {"turtle", "pond"},
      {"rabbit", "carrot"},    {"monkey", "banana"},    {"lion", "mane"},
      {"whale", "sea"},        {"eagle", "nest"},       {"salmon", "stream"},
      {"frog", "lily"},        {"wolf", "moon"},        {"sheep", "wool"},
      {"goat", "cheese"},      {"duck", "feather"},     {"owl", "night"},
      {"ant", "colony"},       {"firefly", "summer"},   {"maple", "leaf"},
      {"willow", "shade"},     {"cactus", "thorn"},     {"tulip", "spring"},
      {"ivy", "wall"},         {"moss", "stone"},
  };
  std::vector<WordPairItem> corpus;
  corpus.reserve(kCorpusSize);
  for (int i = 0; i < kCorpusSize; ++i)
    corpus.push_back({i + 1, kPairs[i][0], kPairs[i][1]});
  return corpus;
}

}  // namespace tmr
