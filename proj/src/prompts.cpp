#include "lmpe/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmpe/errors.hpp"

namespace lmpe {

namespace {

const char* kScoringTemplate = "{paragraph}\n\nQuestion: ";

const char* kClassifyTemplate =
    "Paragraph: {paragraph}\n"
    "Question: {question}\n"
    "Is the paragraph relevant to the question? Answer yes or no.\n"
    "Answer: ";

const char* kNoCotPreamble =
    "Answer each question with yes or no.\n"
    "\n"
    "Question: Is water wet?\n"
    "Answer: yes\n"
    "\n"
    "Question: Can a stone swim upstream?\n"
    "Answer: no\n"
    "\n";

const char* kCotPreamble =
    "Answer each question with a short line of reasoning that ends by stating the answer.\n"
    "\n"
    "Question: Is water wet?\n"
    "Reasoning: Water is a liquid and liquids wet the surfaces they touch. Thus, the answer is yes.\n"
    "\n"
    "Question: Can a stone swim upstream?\n"
    "Reasoning: Stones are inanimate and cannot swim at all. Thus, the answer is no.\n"
    "\n";

std::string read_override(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

PromptSet PromptSet::defaults() {
  PromptSet p;
  p.scoring_template = kScoringTemplate;
  p.classify_template = kClassifyTemplate;
  p.no_cot_preamble = kNoCotPreamble;
  p.cot_preamble = kCotPreamble;
  return p;
}

PromptSet PromptSet::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error("prompt directory not found: " + dir);
  }
  PromptSet p = defaults();
  struct Slot {
    const char* file;
    std::string* field;
  };
  const Slot slots[] = {
      {"scoring.txt", &p.scoring_template},
      {"classify.txt", &p.classify_template},
      {"no_cot.txt", &p.no_cot_preamble},
      {"cot.txt", &p.cot_preamble},
  };
  for (const Slot& slot : slots) {
    const fs::path file = fs::path(dir) / slot.file;
    if (fs::exists(file)) *slot.field = read_override(file);
  }
  return p;
}

std::string render_template(std::string tmpl, const std::string& placeholder,
                            const std::string& value) {
  std::size_t pos = 0;
  while ((pos = tmpl.find(placeholder, pos)) != std::string::npos) {
    tmpl.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return tmpl;
}

std::string render_scoring_prefix(const PromptSet& prompts, const Paragraph& paragraph) {
  return render_template(prompts.scoring_template, "{paragraph}", paragraph.body);
}

std::string render_classify_prompt(const PromptSet& prompts, const Question& question,
                                   const Paragraph& paragraph) {
  std::string out = render_template(prompts.classify_template, "{paragraph}", paragraph.body);
  return render_template(std::move(out), "{question}", question.text);
}

std::string render_facts_block(const std::vector<std::string>& facts) {
  if (facts.empty()) return "";
  std::string out = "Facts:\n";
  for (const std::string& fact : facts) {
    out += "- " + fact + "\n";
  }
  out += "\n";
  return out;
}

std::string render_answer_prompt(const PromptSet& prompts, const Question& question,
                                 const std::vector<std::string>& facts) {
  return prompts.no_cot_preamble + render_facts_block(facts) + "Question: " + question.text +
         "\nAnswer: ";
}

std::string render_reasoning_prompt(const PromptSet& prompts, const Question& question,
                                    const std::vector<std::string>& facts) {
  return prompts.cot_preamble + render_facts_block(facts) + "Question: " + question.text +
         "\nReasoning: ";
}

}  // namespace lmpe
