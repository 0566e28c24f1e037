#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include <unistd.h>

#include <fmt/format.h>

namespace skillrec::testing {

namespace fs = std::filesystem;

namespace {

std::array<int, kTopicCount> levels(std::initializer_list<int> head) {
  std::array<int, kTopicCount> out{};
  std::size_t i = 0;
  for (int v : head) out[i++] = v;
  return out;
}

Problem make_problem(const std::string& id, ProblemRole role, int week,
                     std::array<int, kTopicCount> skills, std::string solution) {
  Problem p;
  p.problem_id = id;
  p.role = role;
  p.week = week;
  p.skills = SkillVector(skills);
  p.reference_solution = std::move(solution);
  return p;
}

}  // namespace

Corpus sample_corpus() {
  using enum ProblemRole;
  std::map<std::string, Problem> problems;
  auto add = [&](Problem p) { problems.emplace(p.problem_id, std::move(p)); };
  add(make_problem("P1", Lab, 2, levels({1}),
                   "int main() { int a, b; std::cin >> a >> b; std::cout << a + b; }"));
  add(make_problem("P2", Lab, 2, levels({2}),
                   "int main() { double r; std::cin >> r; std::cout << 3.14159 * r * r; }"));
  add(make_problem("P3", Lab, 3, levels({1, 1}),
                   "int main() { int n; std::cin >> n; if (n % 2 == 0) std::cout << \"even\"; "
                   "else std::cout << \"odd\"; }"));
  add(make_problem("P4", Lab, 3, levels({2, 2}),
                   "int main() { int a, b, c; std::cin >> a >> b >> c; int m = a; if (b > m) m = b; "
                   "if (c > m) m = c; std::cout << m; }"));
  add(make_problem("P5", Lab, 3, levels({3, 1}),
                   "int main() { double a, b, c; std::cin >> a >> b >> c; double d = b * b - 4 * a * c; "
                   "if (d < 0) std::cout << \"none\"; else std::cout << (-b + std::sqrt(d)) / (2 * a); }"));
  add(make_problem("P6", Lab, 4, levels({1, 1, 1}),
                   "int main() { int n; std::cin >> n; for (int i = 1; i <= n; ++i) "
                   "if (i % 3 == 0) std::cout << i << ' '; }"));
  add(make_problem("P7", Lab, 4, levels({1, 2, 2}),
                   "int main() { int x, count = 0; while (std::cin >> x) { if (x > 0 && x % 2 == 1) "
                   "++count; } std::cout << count; }"));
  add(make_problem("P8", Lab, 4, levels({3, 3, 1}),
                   "int main() { long n; std::cin >> n; bool prime = n > 1; for (long d = 2; d * d <= n; "
                   "++d) if (n % d == 0) prime = false; std::cout << (prime ? \"yes\" : \"no\"); }"));
  add(make_problem("P9", Lab, 4, levels({2, 3, 3}),
                   "int main() { int n; std::cin >> n; for (int i = 1; i <= n; ++i) { for (int j = 1; "
                   "j <= i; ++j) std::cout << (j % 2 ? '*' : '#'); std::cout << '\\n'; } }"));
  add(make_problem("P51", Homework, 2, levels({2}),
                   "int main() { double c; std::cin >> c; std::cout << c * 9 / 5 + 32; }"));
  add(make_problem("P52", Homework, 2, levels({3}),
                   "int main() { long s; std::cin >> s; std::cout << s / 3600 << ':' << s % 3600 / 60 "
                   "<< ':' << s % 60; }"));
  add(make_problem("P53", Homework, 3, levels({2, 2}),
                   "int main() { int y; std::cin >> y; bool leap = (y % 4 == 0 && y % 100 != 0) || "
                   "y % 400 == 0; if (leap) std::cout << \"leap\"; else std::cout << \"common\"; }"));
  add(make_problem("P54", Homework, 3, levels({3, 3}),
                   "int main() { double a, b, c; std::cin >> a >> b >> c; if (a + b > c && a + c > b && "
                   "b + c > a) { if (a == b && b == c) std::cout << \"equilateral\"; else if (a == b || "
                   "b == c || a == c) std::cout << \"isosceles\"; else std::cout << \"scalene\"; } }"));
  add(make_problem("P57", Homework, 4, levels({2, 3, 2}),
                   "int main() { int n; std::cin >> n; int best = 0; for (int i = 0; i < n; ++i) { int x; "
                   "std::cin >> x; if (i == 0 || x > best) best = x; } std::cout << best; }"));
  add(make_problem("P58", Homework, 4, levels({3, 2, 3}),
                   "int main() { long n; std::cin >> n; long a = 0, b = 1; for (long i = 0; i < n; ++i) "
                   "{ long t = a + b; a = b; b = t; } if (a % 2 == 0) std::cout << a; }"));

  using enum SkillTopic;
  std::vector<CourseWeek> weeks = {
      {2, {Math}, {"P1", "P2"}, {"P51", "P52"}},
      {3, {Conditional}, {"P3", "P4", "P5"}, {"P53", "P54"}},
      {4, {Repetition}, {"P6", "P7", "P8", "P9"}, {"P57", "P58"}},
  };
  std::map<int, CourseSchedule> schedules;
  schedules.emplace(2025, CourseSchedule(std::move(weeks)));

  std::vector<Submission> subs;
  auto sub = [&](const char* student, int lab, const char* problem, int attempt, bool correct,
                 std::optional<double> time, std::int64_t seq, std::string source) {
    subs.push_back({student, 2025, lab, problem, attempt, std::move(source), correct, time, seq});
  };
  sub("s01", 1, "P1", 1, false, 120.0, 1, "int main() { int a, b; std::cin >> a >> b; std::cout << a - b; }");
  sub("s01", 1, "P1", 2, true, 300.0, 2, "int main() { int a, b; std::cin >> a >> b; std::cout << a + b; }");
  sub("s01", 1, "P2", 1, true, 240.0, 3,
      "int main() { double r; std::cin >> r; double area = 3.14159 * r * r; std::cout << area; }");
  sub("s01", 2, "P3", 1, true, 200.0, 4,
      "int main() { int n; std::cin >> n; std::cout << (n % 2 == 0 ? \"even\" : \"odd\"); }");
  sub("s01", 2, "P4", 1, false, 150.0, 5,
      "int main() { int a, b, c; std::cin >> a >> b >> c; if (a > b) std::cout << a; else std::cout << b; }");
  sub("s01", 2, "P4", 2, true, 420.0, 6,
      "int main() { int a, b, c; std::cin >> a >> b >> c; int m = a; if (b > m) m = b; if (c > m) m = c; "
      "std::cout << m; }");
  sub("s01", 3, "P6", 1, true, 180.0, 7,
      "int main() { int n; std::cin >> n; for (int i = 3; i <= n; i += 3) std::cout << i << ' '; }");
  sub("s02", 1, "P2", 1, true, 500.0, 1,
      "int main() { double radius; std::cin >> radius; std::cout << radius * radius * 3.14159; }");
  sub("s02", 1, "P1", 1, true, 90.0, 2, "int main() { long x, y; std::cin >> x >> y; std::cout << x + y; }");
  sub("s02", 2, "P5", 1, false, std::nullopt, 3,
      "int main() { double a, b, c; std::cin >> a >> b >> c; std::cout << -b / (2 * a); }");
  sub("s02", 2, "P5", 2, false, 600.0, 4,
      "int main() { double a, b, c; std::cin >> a >> b >> c; double d = b * b - 4 * a * c; "
      "std::cout << (-b + d) / (2 * a); }");
  sub("s02", 2, "P3", 1, true, 210.0, 5,
      "int main() { int n; std::cin >> n; if (n % 2) std::cout << \"odd\"; else std::cout << \"even\"; }");
  return Corpus(std::move(schedules), std::move(problems), std::move(subs));
}

fs::path sample_dir() { return fs::path(SKILLREC_TEST_DATA) / "sample"; }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          fmt::format("{}-{}-{}-{}", tag, ::getpid(), counter++, rd());
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

double gaussian(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SyntheticCorpus::write(const fs::path& dir) const {
  save_corpus(corpus, dir);
  write_embedding_file(dir / "embeddings.jsonl", "synthetic", dim, embeddings);
}

std::string SyntheticCorpus::provider_spec(const fs::path& dir) {
  return "precomputed:" + (dir / "embeddings.jsonl").string();
}

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// One-hot (topic, level) code scaled by `amplitude`, then `extra` trailing
// dimensions, with Gaussian noise of sd `noise` on every component.
std::vector<double> encode(const SkillVector& skills, double amplitude, std::vector<double> extra,
                           double noise, std::mt19937_64& rng) {
  std::vector<double> v(kTopicCount * kLevelCount, 0.0);
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    v[t * kLevelCount + static_cast<std::size_t>(skills.at(t).value())] = amplitude;
  }
  v.insert(v.end(), extra.begin(), extra.end());
  for (double& x : v) x += noise * gaussian(rng);
  return v;
}

void store(SyntheticCorpus& out, const std::string& source, std::vector<double> values) {
  const std::string digest = sha256_hex(source);
  out.embeddings[digest] = Embedding{std::move(values), "synthetic", digest};
}

std::vector<double> noise_vector(std::size_t dim, std::mt19937_64& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = gaussian(rng);
  return v;
}

}  // namespace

SyntheticCorpus accuracy_fixture(LabelMode mode, std::uint64_t seed, double amplitude) {
  constexpr int kWeeks = 8;
  const int per_week = mode == LabelMode::Constant ? 6 : 60;
  const int students = mode == LabelMode::Constant ? 5 : 2;
  const std::vector<int> years = {2022, 2023, 2024, 2025};
  std::mt19937_64 rng(seed);

  SyntheticCorpus out;
  out.dim = kTopicCount * kLevelCount;
  std::map<int, CourseSchedule> schedules;
  std::map<std::string, Problem> problems;
  std::vector<Submission> subs;

  const SkillVector constant(levels({2, 1}));
  for (int year : years) {
    std::vector<CourseWeek> weeks;
    for (int w = 1; w <= kWeeks; ++w) {
      CourseWeek week{w, {}, {}, {}};
      if (w == 1 && mode != LabelMode::Constant) {
        week.lecture_topics.assign(kAllTopics.begin(), kAllTopics.end());
      } else if (w == 1) {
        week.lecture_topics = {SkillTopic::Math, SkillTopic::Conditional};
      }
      for (int i = 0; i < per_week; ++i) {
        const std::string id = fmt::format("Y{}W{}L{:02}", year, w, i);
        std::array<int, kTopicCount> lv{};
        if (mode != LabelMode::Constant) {
          for (auto& l : lv) l = uniform_int(rng, 0, 3);
        } else {
          lv = constant.as_ints();
        }
        problems.emplace(id, make_problem(id, ProblemRole::Lab, w, lv, "// reference " + id));
        week.lab_problems.push_back(id);
      }
      weeks.push_back(std::move(week));
    }
    schedules.emplace(year, CourseSchedule(std::move(weeks)));

    for (int s = 0; s < students; ++s) {
      const std::string student = fmt::format("y{}s{:02}", year, s);
      std::int64_t seq = 0;
      for (int w = 1; w <= kWeeks; ++w) {
        for (int i = 0; i < per_week; ++i) {
          const std::string pid = fmt::format("Y{}W{}L{:02}", year, w, i);
          const std::string source = fmt::format("// {} solves {}\nint main() {{ return 0; }}\n",
                                                 student, pid);
          subs.push_back({student, year, w, pid, 1, source, true, 60.0, ++seq});
          if (mode == LabelMode::Encoded) {
            store(out, source, encode(problems.at(pid).skills, amplitude, {}, 0.05 * amplitude, rng));
          } else {
            store(out, source, noise_vector(out.dim, rng));
          }
        }
      }
    }
  }
  out.corpus = Corpus(std::move(schedules), std::move(problems), std::move(subs));
  return out;
}

SyntheticCorpus suitability_fixture(std::uint64_t seed, double amplitude, int students) {
  constexpr int kLabProblems = 2;
  const std::vector<int> years = {2024, 2025};
  std::mt19937_64 rng(seed);
  const double noise = 0.05 * amplitude;

  SyntheticCorpus out;
  out.dim = kTopicCount * kLevelCount + 1;
  std::map<int, CourseSchedule> schedules;
  std::map<std::string, Problem> problems;
  std::vector<Submission> subs;

  auto week_labels = [](int w) {
    std::array<int, kTopicCount> lv{};
    for (int t = 0; t < w; ++t) lv[static_cast<std::size_t>(t)] = 2;
    return lv;
  };

  for (int year : years) {
    std::vector<CourseWeek> weeks;
    for (int w = 1; w <= kSuitabilityLabs; ++w) {
      CourseWeek week{w, {topic_from_index(static_cast<std::size_t>(w - 1))}, {}, {}};
      for (int i = 0; i < kLabProblems; ++i) {
        const std::string id = fmt::format("L{}-{}-{}", year, w, i);
        problems.emplace(id, make_problem(id, ProblemRole::Lab, w, week_labels(w), "// " + id));
        week.lab_problems.push_back(id);
      }
      // Suitable homework looks like the week's lab work; decoys look the same
      // to the skill models but carry the "fast, correct" style and also need
      // a topic this course never teaches.
      for (int i = 0; i < 2 * kSuitabilityHomeworkPerWeek; ++i) {
        const bool decoy = i >= kSuitabilityHomeworkPerWeek;
        const std::string id = fmt::format("{}{}-{}-{}", decoy ? "X" : "H", year, w, i);
        auto lv = week_labels(w);
        if (decoy) lv[topic_index(SkillTopic::Struct)] = 1;
        const std::string source = fmt::format("// reference solution of {}\n", id);
        problems.emplace(id, make_problem(id, ProblemRole::Homework, w, lv, source));
        store(out, source,
              encode(SkillVector(week_labels(w)), amplitude, {decoy ? amplitude : 0.0}, noise, rng));
        week.homework_pool.push_back(id);
      }
      weeks.push_back(std::move(week));
    }
    schedules.emplace(year, CourseSchedule(std::move(weeks)));

    for (int s = 0; s < students; ++s) {
      const std::string student = fmt::format("y{}s{:02}", year, s);
      std::int64_t seq = 0;
      for (int w = 1; w <= kSuitabilityLabs; ++w) {
        for (int i = 0; i < kLabProblems; ++i) {
          const std::string pid = fmt::format("L{}-{}-{}", year, w, i);
          const bool fast = (rng() & 1U) != 0;
          const int attempts = fast ? 1 : 2;
          for (int a = 1; a <= attempts; ++a) {
            const bool correct = a == attempts;
            const double seconds = (fast ? 30.0 : 600.0) * (1.0 + 0.1 * gaussian(rng));
            const std::string source =
                fmt::format("// {} attempt {} at {}\nint main() {{ return {}; }}\n", student, a,
                            pid, a);
            subs.push_back({student, year, w, pid, a, source, correct, std::max(1.0, seconds), ++seq});
            store(out, source,
                  encode(SkillVector(week_labels(w)), amplitude, {fast ? amplitude : 0.0}, noise,
                         rng));
          }
        }
      }
    }
  }
  out.corpus = Corpus(std::move(schedules), std::move(problems), std::move(subs));
  return out;
}

SuitabilityCase random_suitability_case(std::mt19937_64& rng) {
  std::vector<int> week_numbers;
  for (int w = 1; w <= 12; ++w) {
    if (rng() % 3 != 0) week_numbers.push_back(w);
  }
  if (week_numbers.empty()) week_numbers.push_back(1);
  if (week_numbers.size() > 10) week_numbers.resize(10);
  std::vector<CourseWeek> weeks;
  for (int w : week_numbers) weeks.push_back({w, {}, {}, {}});
  for (SkillTopic t : kAllTopics) {
    const auto slot = rng() % (weeks.size() + 2);  // the last two slots: never lectured
    if (slot < weeks.size()) weeks[slot].lecture_topics.push_back(t);
  }
  SuitabilityCase out;
  out.schedule = CourseSchedule(std::move(weeks));
  std::array<int, kTopicCount> lv{};
  for (auto& l : lv) l = rng() % 3 == 0 ? uniform_int(rng, 1, 3) : 0;
  out.problem = make_problem("X", ProblemRole::Homework, 1, lv, "x");
  const int last = out.schedule.last_week();
  out.current_week = uniform_int(rng, 0, last);
  out.last_week = uniform_int(rng, 0, out.current_week);
  return out;
}

}  // namespace skillrec::testing
