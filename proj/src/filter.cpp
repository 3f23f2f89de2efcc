#include "lmpe/filter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <optional>

#include "lmpe/csv.hpp"
#include "lmpe/parallel.hpp"

namespace lmpe {

namespace {

struct ScoredParagraph {
  std::size_t input_index = 0;
  std::optional<double> avg_nll;  // empty = failed in lenient mode
};

std::vector<ScoredParagraph> score_question_after_each(const Question& question,
                                                       const std::vector<Paragraph>& paragraphs,
                                                       Backend& backend,
                                                       const FilterOptions& options) {
  const int workers = options.workers > 0 ? options.workers : backend.parallelism();
  return parallel_map(paragraphs, workers,
                      [&](std::size_t i, const Paragraph& p) -> ScoredParagraph {
                        try {
                          const ScoredText scored =
                              backend.score(render_scoring_prefix(options.prompts, p), question.text);
                          return ScoredParagraph{i, scored.avg_nll};
                        } catch (const Error&) {
                          if (options.lenient) return ScoredParagraph{i, std::nullopt};
                          annotate_and_rethrow("paragraph '" + p.id + "': ");
                        }
                      });
}

}  // namespace

std::vector<RankedParagraph> rank_paragraphs(const Question& question,
                                             const std::vector<Paragraph>& paragraphs,
                                             Backend& backend, const FilterOptions& options) {
  if (paragraphs.empty()) throw Error("rank_paragraphs requires at least one paragraph");

  std::vector<ScoredParagraph> scored =
      score_question_after_each(question, paragraphs, backend, options);

  std::vector<ScoredParagraph> kept;
  kept.reserve(scored.size());
  for (ScoredParagraph& s : scored) {
    if (s.avg_nll) {
      kept.push_back(s);
    } else {
      std::cerr << "[lmpe] warning: excluding paragraph '" << paragraphs[s.input_index].id
                << "' from ranking after backend failure\n";
      if (options.failed_ids) options.failed_ids->push_back(paragraphs[s.input_index].id);
    }
  }

  // Stable sort on avg_nll alone keeps ties in input order.
  std::stable_sort(kept.begin(), kept.end(), [](const ScoredParagraph& a, const ScoredParagraph& b) {
    return *a.avg_nll < *b.avg_nll;
  });

  std::vector<RankedParagraph> out;
  out.reserve(kept.size());
  for (std::size_t rank = 0; rank < kept.size(); ++rank) {
    out.push_back(RankedParagraph{paragraphs[kept[rank].input_index].id, *kept[rank].avg_nll, rank});
  }
  return out;
}

std::vector<RankedParagraph> top_n(const std::vector<RankedParagraph>& ranking, std::size_t n) {
  if (n < 1) throw Error("top_n requires n >= 1");
  std::vector<RankedParagraph> out(ranking.begin(),
                                   ranking.begin() + static_cast<std::ptrdiff_t>(std::min(n, ranking.size())));
  return out;
}

Relevance classify_relevance_blackbox(const Question& question, const Paragraph& paragraph,
                                      const std::string& prompt_template, Backend& backend,
                                      ClassifyMode mode) {
  if (prompt_template.find("{paragraph}") == std::string::npos ||
      prompt_template.find("{question}") == std::string::npos) {
    throw Error("classification template must contain {paragraph} and {question}");
  }
  std::string prompt = render_template(prompt_template, "{paragraph}", paragraph.body);
  prompt = render_template(std::move(prompt), "{question}", question.text);

  if (mode == ClassifyMode::nll_comparison) {
    const double nll_yes = backend.score(prompt, "yes").avg_nll;
    const double nll_no = backend.score(prompt, "no").avg_nll;
    return nll_yes < nll_no ? Relevance::relevant : Relevance::irrelevant;
  }

  GenerationParams params;
  params.max_tokens = 8;
  params.stop_sequences = {"\n"};
  const Completion completion = backend.complete(prompt, params);
  std::string head;
  for (char c : completion.text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!head.empty()) break;
      continue;
    }
    head += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!head.empty() && (head.back() == '.' || head.back() == ',' || head.back() == '!')) {
    head.pop_back();
  }
  if (head == "yes") return Relevance::relevant;
  if (head == "no") return Relevance::irrelevant;
  throw AmbiguousGeneration("generative classification produced neither yes nor no: '" +
                            completion.text + "'");
}

LikelihoodMatrix likelihood_matrix(const std::vector<Question>& questions,
                                   const std::vector<Paragraph>& paragraphs, Backend& backend,
                                   const FilterOptions& options) {
  if (questions.empty() || paragraphs.empty()) {
    throw Error("likelihood_matrix requires non-empty questions and paragraphs");
  }
  LikelihoodMatrix matrix;
  for (const Question& q : questions) matrix.question_ids.push_back(q.id);
  for (const Paragraph& p : paragraphs) matrix.paragraph_ids.push_back(p.id);
  matrix.weights.reserve(questions.size());

  FilterOptions strict = options;
  strict.lenient = false;
  for (const Question& q : questions) {
    const std::vector<ScoredParagraph> scored =
        score_question_after_each(q, paragraphs, backend, strict);
    // Softmax of the negated avg NLL, max-shifted for stability.
    double best = -*scored[0].avg_nll;
    for (const ScoredParagraph& s : scored) best = std::max(best, -*s.avg_nll);
    std::vector<double> row(scored.size());
    double norm = 0.0;
    for (std::size_t j = 0; j < scored.size(); ++j) {
      row[j] = std::exp(-*scored[j].avg_nll - best);
      norm += row[j];
    }
    for (double& w : row) w /= norm;
    matrix.weights.push_back(std::move(row));
  }
  return matrix;
}

void write_csv(const LikelihoodMatrix& matrix, std::ostream& out) {
  out << "question_id";
  for (const std::string& pid : matrix.paragraph_ids) out << ',' << csv_escape(pid);
  out << '\n';
  for (std::size_t i = 0; i < matrix.question_ids.size(); ++i) {
    out << csv_escape(matrix.question_ids[i]);
    for (double w : matrix.weights[i]) out << ',' << format_double(w);
    out << '\n';
  }
}

}  // namespace lmpe
