// Rule-based structured filter extraction and the external-command extractor.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <set>
#include <sstream>

#include "facetsearch/bundled_data.hpp"
#include "facetsearch/error.hpp"
#include "facetsearch/queryfilter.hpp"

namespace facetsearch {

// ---------------------------------------------------------------------------
// Qualitative lexicon

QualitativeLexicon QualitativeLexicon::parse(std::string_view text) {
  QualitativeLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto arrow = line.find("=>");
    if (arrow == std::string::npos) throw ConfigError("qualitative lexicon line " + std::to_string(line_no) + ": missing =>");

    Entry entry;
    entry.words = lexicon_words(line.substr(0, arrow));
    std::istringstream rhs(line.substr(arrow + 2));
    std::string item;
    while (std::getline(rhs, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                 item.end());
      const auto eq = item.find('=');
      const auto field = eq == std::string::npos ? std::nullopt : parse_field_name(item.substr(0, eq));
      const auto level = eq == std::string::npos ? std::nullopt : parse_level(item.substr(eq + 1));
      if (!field || !level) {
        throw ConfigError("qualitative lexicon line " + std::to_string(line_no) + ": bad assignment '" + item + "'");
      }
      entry.assignments.emplace_back(*field, *level);
    }
    if (entry.words.empty() || entry.assignments.empty()) {
      throw ConfigError("qualitative lexicon line " + std::to_string(line_no) + ": empty phrase or assignment");
    }
    lex.entries_.push_back(std::move(entry));
  }
  std::stable_sort(lex.entries_.begin(), lex.entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.words.size() > b.words.size(); });
  return lex;
}

const QualitativeLexicon& QualitativeLexicon::bundled() {
  static const QualitativeLexicon lex = parse(bundled::kQualitativeLexicon);
  return lex;
}

// ---------------------------------------------------------------------------
// Rule extractor

namespace {

struct Token {
  std::string text;
  bool numeric = false;
  double value = 0.0;
  bool dollar = false;
  bool plus = false;
};

enum class Target { Price, Rating, Reviews, None };
enum class Direction { Min, Max };

const std::set<std::string, std::less<>> kStarWords = {"star", "stars"};
const std::set<std::string, std::less<>> kReviewWords = {"review", "reviews", "ratings", "rating"};
const std::set<std::string, std::less<>> kCurrencyWords = {"dollar", "dollars", "usd", "bucks"};
const std::set<std::string, std::less<>> kUnitWords = {
    "inch", "inches", "in",    "mm",    "cm",      "gb",     "tb",     "mb",    "mah",    "hz",
    "ft",   "feet",   "foot",  "w",     "watt",    "watts",  "mp",     "pack",  "packs",  "pcs",
    "pieces", "piece", "port", "ports", "year",    "years",  "month",  "months", "day",   "days",
    "hour", "hours",  "meter", "meters", "m",      "v",      "volt",   "volts", "amp",    "amps",
    "a",    "g",      "series", "pro",  "plus",    "max",    "mini",   "ultra", "gen",    "generation",
    "x",    "pk",     "count", "devices", "device", "phones", "phone", "cases", "case",  "in1",
    "band", "bands",  "mins",  "minutes", "lbs",   "oz",     "k"};
const std::set<std::string, std::less<>> kFillers = {"price", "priced", "of", "a", "the", "is",
                                                     "budget", "cost", "costing", "at"};
// Words allowed between a metric noun and its comparator or number.
const std::set<std::string, std::less<>> kMetricGap = {"of", "is", "that", "are", "at"};

// A comparator phrase and the bound it sets.
struct Cue {
  std::vector<std::string> words;
  Direction direction;
};

const std::vector<Cue>& cues() {
  static const std::vector<Cue> list = [] {
    std::vector<Cue> v = {
        {{"no", "more", "than"}, Direction::Max}, {{"not", "more", "than"}, Direction::Max},
        {{"no", "less", "than"}, Direction::Min}, {{"not", "less", "than"}, Direction::Min},
        {{"less", "than"}, Direction::Max},       {{"fewer", "than"}, Direction::Max},
        {{"lower", "than"}, Direction::Max},      {{"cheaper", "than"}, Direction::Max},
        {{"at", "most"}, Direction::Max},         {{"up", "to"}, Direction::Max},
        {{"more", "than"}, Direction::Min},       {{"greater", "than"}, Direction::Min},
        {{"higher", "than"}, Direction::Min},     {{"at", "least"}, Direction::Min},
        {{"starting", "at"}, Direction::Min},     {{"under"}, Direction::Max},
        {{"below"}, Direction::Max},              {{"max"}, Direction::Max},
        {{"maximum"}, Direction::Max},            {{"within"}, Direction::Max},
        {{"over"}, Direction::Min},               {{"above"}, Direction::Min},
        {{"min"}, Direction::Min},                {{"minimum"}, Direction::Min},
    };
    return v;
  }();
  return list;
}

// Trailing phrases that turn a bare number into a bound: "$50 or less".
const std::vector<Cue>& trailing_cues() {
  static const std::vector<Cue> list = {
      {{"or", "less"}, Direction::Max},  {{"or", "lower"}, Direction::Max},
      {{"or", "below"}, Direction::Max}, {{"or", "under"}, Direction::Max},
      {{"and", "under"}, Direction::Max}, {{"and", "below"}, Direction::Max},
      {{"or", "more"}, Direction::Min},  {{"or", "higher"}, Direction::Min},
      {{"or", "above"}, Direction::Min}, {{"and", "up"}, Direction::Min},
      {{"and", "above"}, Direction::Min}, {{"or", "better"}, Direction::Min},
  };
  return list;
}

// Parses "$1,299.99", "4.2+", "250+", "$2k"; nullopt for anything else.
std::optional<Token> parse_number(std::string_view s) {
  Token t;
  t.text = std::string(s);
  if (!s.empty() && s.front() == '$') {
    t.dollar = true;
    s.remove_prefix(1);
  }
  if (!s.empty() && s.back() == '+') {
    t.plus = true;
    s.remove_suffix(1);
  }
  double scale = 1.0;
  if (!s.empty() && s.back() == 'k') {
    scale = 1000.0;
    s.remove_suffix(1);
  }
  if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front())) ||
      !std::isdigit(static_cast<unsigned char>(s.back()))) {
    return std::nullopt;
  }
  std::string digits;
  bool dot = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
    } else if (c == ',' && !dot && i > 0 && i + 3 < s.size()) {
      // thousands separator: exactly three digits before the next separator
      const auto next = s.find_first_of(",.", i + 1);
      const auto group = (next == std::string_view::npos ? s.size() : next) - i - 1;
      if (group != 3) return std::nullopt;
    } else if (c == '.' && !dot) {
      dot = true;
      digits.push_back('.');
    } else {
      return std::nullopt;
    }
  }
  t.numeric = true;
  t.value = std::stod(digits) * scale;
  return t;
}

std::vector<Token> tokenize(std::string_view query) {
  static constexpr std::string_view kLeading = "\"'(";
  static constexpr std::string_view kTrailing = ".,;:!?)\"'";
  std::vector<Token> tokens;
  std::istringstream in{std::string(query)};
  std::string raw;
  while (in >> raw) {
    std::string_view s(raw);
    while (!s.empty() && kLeading.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
    while (!s.empty() && kTrailing.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
    if (s.empty()) continue;

    // "$100-$200" and "100-200" become "100 to 200".
    if (const auto dash = s.find('-'); dash != std::string_view::npos && dash > 0) {
      auto a = parse_number(s.substr(0, dash));
      auto b = parse_number(s.substr(dash + 1));
      if (a && b && !a->plus) {
        if (b->dollar) a->dollar = true;
        tokens.push_back(*a);
        tokens.push_back(Token{"to"});
        tokens.push_back(*b);
        continue;
      }
    }
    if (s == "$") {
      tokens.push_back(Token{"$"});
      continue;
    }
    if (auto num = parse_number(s)) {
      // "$ 300": fold the lone currency sign into the number.
      if (!tokens.empty() && tokens.back().text == "$") {
        tokens.pop_back();
        num->dollar = true;
      }
      tokens.push_back(*num);
    } else {
      tokens.push_back(Token{std::string(s)});
    }
  }
  return tokens;
}

class RuleParser {
 public:
  explicit RuleParser(std::vector<Token> tokens) : t_(std::move(tokens)), used_(t_.size(), false) {}

  void run(StructuredFilters& f) {
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (used_[i]) continue;
      if (try_range(i, f) || try_rated(i, f) || try_metric(i, f) || try_cue(i, f)) continue;
    }
    // Numbers not claimed by a comparator: "4+ stars", "500 reviews", "$300+".
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!used_[i] && t_[i].numeric) try_bare(i, f);
    }
  }

 private:
  bool word_at(std::size_t i, std::string_view w) const {
    return i < t_.size() && !t_[i].numeric && t_[i].text == w;
  }

  bool numeric_at(std::size_t i) const { return i < t_.size() && t_[i].numeric && !used_[i]; }

  // Length of `words` matched at i, 0 if no match.
  std::size_t match(std::size_t i, const std::vector<std::string>& words) const {
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (!word_at(i + j, words[j]) || used_[i + j]) return 0;
    }
    return words.size();
  }

  // Unit that follows the number at i.
  Target target_after(std::size_t i) const {
    const auto& num = t_[i];
    if (i + 1 < t_.size() && !t_[i + 1].numeric) {
      const auto& next = t_[i + 1].text;
      if (kStarWords.contains(next)) return Target::Rating;
      if (kReviewWords.contains(next)) return Target::Reviews;
      if (kCurrencyWords.contains(next)) return Target::Price;
      if (kUnitWords.contains(next)) return num.dollar ? Target::Price : Target::None;
    }
    return Target::Price;
  }

  bool has_unit(std::size_t i) const {
    if (i + 1 >= t_.size() || t_[i + 1].numeric) return false;
    const auto& next = t_[i + 1].text;
    return kStarWords.contains(next) || kReviewWords.contains(next) || kCurrencyWords.contains(next);
  }

  // Metric named by the noun at j: "rating", "reviews", "price".
  std::optional<Target> metric_noun(std::size_t j, double value) const {
    if (j >= t_.size() || used_[j] || t_[j].numeric) return std::nullopt;
    const auto& w = t_[j].text;
    if (w == "rating" || w == "ratings" || kStarWords.contains(w)) {
      return value <= 5.0 ? Target::Rating : Target::Reviews;
    }
    if (w == "review" || w == "reviews") return Target::Reviews;
    if (w == "price" || w == "priced" || w == "cost") return Target::Price;
    return std::nullopt;
  }

  // Metric named just before position i: "rating below 3.5", "reviews over 300".
  std::optional<Target> metric_before(std::size_t i, double value) const {
    std::size_t j = i;
    while (j > 0) {
      --j;
      if (auto m = metric_noun(j, value)) return m;
      if (used_[j] || t_[j].numeric || !kMetricGap.contains(t_[j].text)) return std::nullopt;
    }
    return std::nullopt;
  }

  // Marks the number and a trailing unit word.
  void consume_number(std::size_t i) {
    used_[i] = true;
    if (i + 1 < t_.size() && !t_[i + 1].numeric) {
      const auto& next = t_[i + 1].text;
      if (kStarWords.contains(next) || kReviewWords.contains(next) || kCurrencyWords.contains(next)) {
        used_[i + 1] = true;
      }
    }
  }

  static void assign(StructuredFilters& f, Target target, Direction dir, double value) {
    switch (target) {
      case Target::Price:
        (dir == Direction::Min ? f.price_min : f.price_max) = value;
        break;
      case Target::Rating:
        if (value > 5.0) return;
        (dir == Direction::Min ? f.average_rating_min : f.average_rating_max) = value;
        break;
      case Target::Reviews:
        (dir == Direction::Min ? f.review_count_min : f.review_count_max) = value;
        break;
      case Target::None:
        break;
    }
  }

  // "between X and Y", "from X to Y", "X to Y"
  bool try_range(std::size_t i, StructuredFilters& f) {
    std::size_t a = i;
    if (word_at(i, "between") || word_at(i, "from")) a = i + 1;
    if (!numeric_at(a) || t_[a].plus) return false;
    const bool opener = a != i;
    const auto joiner = a + 1;
    const bool joined = word_at(joiner, "to") || (opener && word_at(joiner, "and"));
    if (!joined || !numeric_at(joiner + 1)) return false;
    const auto b = joiner + 1;
    // A bare "X to Y" without an opener only counts with a currency mark.
    if (!opener && !t_[a].dollar && !t_[b].dollar && target_after(b) != Target::Rating &&
        target_after(b) != Target::Reviews) {
      return false;
    }
    const auto target = target_after(b);
    if (target == Target::None) return false;
    const double lo = std::min(t_[a].value, t_[b].value);
    const double hi = std::max(t_[a].value, t_[b].value);
    if (target == Target::Rating && hi > 5.0) return false;
    assign(f, target, Direction::Min, lo);
    assign(f, target, Direction::Max, hi);
    for (std::size_t j = i; j < b; ++j) used_[j] = true;
    consume_number(b);
    return true;
  }

  // "rated 4+", "rated 4.5 stars", "rated above 4"
  bool try_rated(std::size_t i, StructuredFilters& f) {
    if (!word_at(i, "rated")) return false;
    auto n = i + 1;
    auto dir = Direction::Min;
    for (const auto& cue : cues()) {
      if (const auto len = match(n, cue.words)) {
        dir = cue.direction;
        n += len;
        break;
      }
    }
    if (!numeric_at(n) || t_[n].dollar || t_[n].value > 5.0) return false;
    assign(f, Target::Rating, dir, t_[n].value);
    for (std::size_t j = i; j < n; ++j) used_[j] = true;
    consume_number(n);
    return true;
  }

  // "rating of 4.3 or higher", "reviews 500+"
  bool try_metric(std::size_t i, StructuredFilters& f) {
    if (i >= t_.size() || t_[i].numeric) return false;
    auto n = i + 1;
    while (n < t_.size() && !t_[n].numeric && kMetricGap.contains(t_[n].text)) ++n;
    if (!numeric_at(n) || t_[n].dollar || has_unit(n)) return false;
    const auto target = metric_noun(i, t_[n].value);
    if (!target || *target == Target::Price) return false;
    auto dir = Direction::Min;
    auto end = n + 1;
    for (const auto& cue : trailing_cues()) {
      if (const auto len = match(end, cue.words)) {
        dir = cue.direction;
        end += len;
        break;
      }
    }
    assign(f, *target, dir, t_[n].value);
    for (std::size_t j = i; j < end; ++j) used_[j] = true;
    return true;
  }

  // "under $300", "maximum price: $300", "at least 4 stars"
  bool try_cue(std::size_t i, StructuredFilters& f) {
    for (const auto& cue : cues()) {
      const auto len = match(i, cue.words);
      if (len == 0) continue;
      auto n = i + len;
      while (n < t_.size() && !t_[n].numeric && kFillers.contains(t_[n].text)) ++n;
      if (!numeric_at(n)) return false;
      auto target = target_after(n);
      if (target == Target::Price && !t_[n].dollar && !has_unit(n)) {
        if (const auto m = metric_before(i, t_[n].value)) target = *m;
      }
      if (target == Target::None) return false;
      assign(f, target, cue.direction, t_[n].value);
      for (std::size_t j = i; j < n; ++j) used_[j] = true;
      consume_number(n);
      return true;
    }
    return false;
  }

  void try_bare(std::size_t i, StructuredFilters& f) {
    const auto& num = t_[i];
    auto target = target_after(i);
    const bool has_unit = i + 1 < t_.size() && !t_[i + 1].numeric &&
                          (kStarWords.contains(t_[i + 1].text) || kReviewWords.contains(t_[i + 1].text) ||
                           kCurrencyWords.contains(t_[i + 1].text));
    // A bare price needs a currency mark; stars and reviews carry their own unit.
    if (target == Target::Price && !num.dollar && !has_unit) return;
    if (target == Target::None) return;

    auto after = has_unit ? i + 2 : i + 1;
    std::optional<Direction> dir;
    for (const auto& cue : trailing_cues()) {
      if (match(after, cue.words)) {
        dir = cue.direction;
        for (std::size_t j = 0; j < cue.words.size(); ++j) used_[after + j] = true;
        break;
      }
    }
    if (!dir && num.plus) dir = Direction::Min;
    if (!dir && target != Target::Price) dir = Direction::Min;  // "4 stars", "500 reviews"
    if (!dir) return;  // "$200" alone is ambiguous
    assign(f, target, *dir, num.value);
    consume_number(i);
  }

  std::vector<Token> t_;
  std::vector<bool> used_;
};

}  // namespace

StructuredFilters RuleExtractor::extract(std::string_view clean_query) const {
  StructuredFilters f;
  RuleParser(tokenize(clean_query)).run(f);

  // Qualitative phrases fill only fields left open by numbers.
  const auto words = lexicon_words(clean_query);
  std::vector<bool> taken(words.size(), false);
  StructuredFilters qualitative;
  for (const auto& entry : qualitative_.entries()) {
    const auto n = entry.words.size();
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      bool hit = true;
      for (std::size_t j = 0; j < n && hit; ++j) hit = !taken[i + j] && words[i + j] == entry.words[j];
      if (!hit) continue;
      std::fill_n(taken.begin() + static_cast<std::ptrdiff_t>(i), n, true);
      for (const auto& [field, level] : entry.assignments) {
        if (std::holds_alternative<std::monostate>(qualitative[field])) qualitative[field] = level;
      }
    }
  }
  for (const auto field : kFilterFields) {
    if (std::holds_alternative<std::monostate>(f[field])) f[field] = qualitative[field];
  }

  // Contradictory numeric bounds ("over $300 under $100") are read as a range.
  for (const auto& [lo, hi] : {std::pair{FilterField::PriceMin, FilterField::PriceMax},
                               std::pair{FilterField::ReviewCountMin, FilterField::ReviewCountMax},
                               std::pair{FilterField::AverageRatingMin, FilterField::AverageRatingMax}}) {
    auto* a = std::get_if<double>(&f[lo]);
    auto* b = std::get_if<double>(&f[hi]);
    if (a && b && *a > *b) std::swap(*a, *b);
  }

  f.subcategory = classify_subcategory(clean_query, accessories_);
  return f;
}

StructuredFilters extract_filters(std::string_view clean_query) {
  static const RuleExtractor extractor;
  return extractor.extract(clean_query);
}

// ---------------------------------------------------------------------------
// External command

namespace {

struct Fd {
  int fd = -1;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

}  // namespace

StructuredFilters CommandExtractor::extract(std::string_view clean_query) const {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  Fd w{to_child[1]}, r0{to_child[0]};
  if (::pipe(from_child) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  Fd r{from_child[0]}, w1{from_child[1]};

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  r0.reset();
  w1.reset();

  // Queries are short; the pipe buffer holds them without a reader thread.
  std::string input(clean_query);
  input.push_back('\n');
  auto* old = std::signal(SIGPIPE, SIG_IGN);
  std::size_t off = 0;
  while (off < input.size()) {
    const auto n = ::write(w.fd, input.data() + off, input.size() - off);
    if (n <= 0) break;
    off += static_cast<std::size_t>(n);
  }
  w.reset();

  std::string output;
  char buf[4096];
  for (;;) {
    const auto n = ::read(r.fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  std::signal(SIGPIPE, old);

  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("extractor command failed: " + command_);
  }
  const auto nl = output.find('\n');
  return parse_filters_text(std::string_view(output).substr(0, nl));
}

}  // namespace facetsearch
