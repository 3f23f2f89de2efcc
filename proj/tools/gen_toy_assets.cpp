// Regenerates the bundled toy fixture: a 20-question synthetic dataset in the
// documented schema plus two scripted mock tables. The "success" table walks
// every question through its intended reasoning chain and answers correctly;
// the "inverted" table emits the opposite answer everywhere, which pins down
// that evaluations cannot leak gold labels.
//
// Usage: gen-toy-assets <output-dir>   (writes toy_dataset.json,
//        toy_mock.json, toy_mock_inverted.json)

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct ToyQuestion {
  std::string id;
  std::string question;
  bool yes;
  std::string fact_a;
  std::string fact_b;
  std::string title_a;
  std::string body_a;
  std::string title_b;
  std::string body_b;
  std::string step1;
  std::string step2;
};

std::vector<ToyQuestion> toy_questions() {
  return {
      {"q01", "Could a blue whale fit inside a standard school gymnasium?", false,
       "Adult blue whales commonly reach 30 meters in length.",
       "A standard school gymnasium is about 25 meters long.",
       "Blue whale",
       "The blue whale is the largest animal known to have ever lived. Adults commonly reach 24 "
       "to 30 meters in length and weigh up to 180 tonnes.",
       "Gymnasium",
       "A regulation school gymnasium encloses a basketball court and is typically around 25 "
       "meters long and 15 meters wide.",
       "Adult blue whales commonly reach 30 meters in length.",
       "A school gymnasium is only about 25 meters long, which is shorter than a blue whale."},
      {"q02", "Would a marathon runner cover a 5 kilometer race distance before finishing?", true,
       "A marathon is 42.195 kilometers long.",
       "A 5K race covers 5 kilometers.",
       "Marathon",
       "The marathon is a long-distance foot race with a standardized distance of 42.195 "
       "kilometers, usually run as a road race.",
       "5K run",
       "The 5K run is a long-distance road running competition over a distance of five "
       "kilometers, popular with novice runners.",
       "A marathon is 42.195 kilometers long.",
       "Five kilometers is far less than 42.195 kilometers, so the distance is covered early in "
       "a marathon."},
      {"q03", "Can a penguin fly to the top of Mount Everest?", false,
       "Penguins are flightless birds.",
       "Mount Everest is about 8,849 meters tall.",
       "Penguin",
       "Penguins are a group of aquatic flightless birds. Their wings have evolved into "
       "flippers suited for swimming rather than flight.",
       "Mount Everest",
       "Mount Everest is Earth's highest mountain above sea level, with a summit at 8,849 "
       "meters elevation.",
       "Penguins are flightless birds and cannot fly at all.",
       "Reaching the 8,849 meter summit of Mount Everest by air is impossible for a bird that "
       "cannot fly."},
      {"q04", "Could Julius Caesar have used a telephone?", false,
       "Julius Caesar died in 44 BC.",
       "The telephone was invented in 1876.",
       "Julius Caesar",
       "Gaius Julius Caesar was a Roman general and statesman who was assassinated on the Ides "
       "of March in 44 BC.",
       "Telephone",
       "The first practical telephone was patented by Alexander Graham Bell in 1876, more than "
       "eighteen centuries after antiquity.",
       "Julius Caesar died in 44 BC.",
       "The telephone was not invented until 1876, long after Caesar's death."},
      {"q05", "Is the Eiffel Tower taller than the Statue of Liberty?", true,
       "The Eiffel Tower is about 330 meters tall.",
       "The Statue of Liberty is about 93 meters tall including its pedestal.",
       "Eiffel Tower",
       "The Eiffel Tower is a wrought-iron lattice tower in Paris. Including antennas it "
       "stands about 330 meters tall.",
       "Statue of Liberty",
       "The Statue of Liberty in New York Harbor measures about 93 meters from ground level to "
       "torch, including the pedestal.",
       "The Eiffel Tower stands about 330 meters tall.",
       "The Statue of Liberty reaches only about 93 meters, far below 330 meters."},
      {"q06", "Could a housecat defeat an adult gorilla in a weightlifting contest?", false,
       "A housecat weighs around 4 to 5 kilograms.",
       "An adult gorilla can lift around 800 kilograms.",
       "Cat",
       "The domestic cat is a small carnivorous mammal, with adults typically weighing between "
       "4 and 5 kilograms.",
       "Gorilla",
       "Gorillas are the largest living primates; an adult silverback is estimated to lift as "
       "much as 800 kilograms.",
       "A housecat weighs only about 4 to 5 kilograms and has modest strength.",
       "A gorilla can lift roughly 800 kilograms, vastly more than any cat could move."},
      {"q07", "Does lemon juice have a lower pH than pure water?", true,
       "Lemon juice has a pH of about 2.",
       "Pure water has a neutral pH of 7.",
       "Lemon",
       "Lemon juice contains citric acid, giving it a pH of about 2, which makes it strongly "
       "acidic.",
       "Water",
       "Pure water is neutral, with a pH of 7 at room temperature, sitting midway on the pH "
       "scale.",
       "Lemon juice is acidic with a pH of about 2.",
       "Pure water has a pH of 7, so lemon juice's pH of 2 is clearly lower."},
      {"q08", "Can sound travel through the vacuum of outer space?", false,
       "Sound waves require a physical medium to travel.",
       "Outer space is an almost perfect vacuum.",
       "Sound",
       "Sound is a vibration that propagates as an acoustic wave through a transmission medium "
       "such as a gas, liquid or solid.",
       "Outer space",
       "Outer space is the expanse beyond celestial bodies; it is an almost perfect vacuum "
       "containing a hard vacuum with few particles.",
       "Sound waves need a physical medium such as air or water to travel.",
       "Outer space is an almost perfect vacuum, so there is no medium to carry sound."},
      {"q09", "Is the Great Wall of China longer than the road distance from Paris to Moscow?",
       true,
       "The Great Wall of China measures about 21,000 kilometers in total.",
       "The road distance from Paris to Moscow is about 2,800 kilometers.",
       "Great Wall of China",
       "The Great Wall of China with all of its branches measures out to an official total of "
       "about 21,196 kilometers.",
       "Paris to Moscow",
       "Driving from Paris to Moscow covers roughly 2,800 kilometers of road across Europe.",
       "The Great Wall of China totals about 21,000 kilometers.",
       "Paris to Moscow is only about 2,800 kilometers by road, far shorter than the wall."},
      {"q10", "Could an octopus wear three pairs of gloves at once on its arms?", true,
       "An octopus has eight arms.",
       "Three pairs of gloves amount to six gloves.",
       "Octopus",
       "The octopus is a soft-bodied mollusc with eight arms, each lined with suckers along "
       "its underside.",
       "Glove",
       "Gloves are garments covering the hand and are sold in pairs, so three pairs amount to "
       "six individual gloves.",
       "An octopus has eight arms available.",
       "Three pairs of gloves are six gloves, and eight arms are enough to wear six gloves."},
      {"q11", "Is a single day on Venus longer than a Venusian year?", true,
       "Venus rotates once every 243 Earth days.",
       "Venus orbits the Sun every 225 Earth days.",
       "Venus rotation",
       "Venus rotates extremely slowly, taking about 243 Earth days to complete one rotation "
       "about its axis.",
       "Venus orbit",
       "Venus completes one orbit around the Sun every 225 Earth days, making its year shorter "
       "than an Earth year.",
       "Venus takes about 243 Earth days to rotate once.",
       "A Venusian year lasts only 225 Earth days, which is shorter than its 243 day rotation."},
      {"q12", "Can a giant tortoise outlive a housefly by several decades?", true,
       "Giant tortoises can live well over 100 years.",
       "A housefly lives for about one month.",
       "Giant tortoise",
       "Giant tortoises are among the longest-lived animals, with individuals documented to "
       "live well over 100 years.",
       "Housefly",
       "The adult housefly has a typical lifespan of around two weeks to one month in the "
       "wild.",
       "Giant tortoises can live more than 100 years.",
       "A housefly lives about a month, so a tortoise outlives it by many decades."},
      {"q13", "Is the Sahara desert larger in area than Germany?", true,
       "The Sahara covers about 9.2 million square kilometers.",
       "Germany covers about 357,000 square kilometers.",
       "Sahara",
       "The Sahara is the largest hot desert in the world, covering about 9.2 million square "
       "kilometers of North Africa.",
       "Germany",
       "Germany is a country in Central Europe with a total area of about 357,000 square "
       "kilometers.",
       "The Sahara spans roughly 9.2 million square kilometers.",
       "Germany's 357,000 square kilometers is a small fraction of the Sahara's area."},
      {"q14", "Could a human swim across the Atlantic Ocean in a single day?", false,
       "The Atlantic Ocean is several thousand kilometers wide.",
       "Elite marathon swimmers cover at most around 100 kilometers in a day.",
       "Atlantic Ocean",
       "The Atlantic Ocean separates Europe and Africa from the Americas; crossing it spans "
       "several thousand kilometers of open water.",
       "Marathon swimming",
       "Even elite marathon swimmers manage at most around 100 kilometers within a single day "
       "under ideal conditions.",
       "Crossing the Atlantic means swimming several thousand kilometers.",
       "At best a swimmer covers about 100 kilometers per day, nowhere near enough in one day."},
      {"q15", "Do more people live in Tokyo than in all of Iceland?", true,
       "Tokyo has about 14 million residents.",
       "Iceland has about 370,000 inhabitants.",
       "Tokyo",
       "Tokyo is the capital of Japan; the metropolis proper is home to about 14 million "
       "residents.",
       "Iceland",
       "Iceland is a Nordic island country with a population of about 370,000 people.",
       "Tokyo is home to about 14 million people.",
       "Iceland's entire population is about 370,000, far below Tokyo's 14 million."},
      {"q16", "Is the boiling point of water higher than the melting point of iron?", false,
       "Water boils at 100 degrees Celsius at sea level.",
       "Iron melts at about 1,538 degrees Celsius.",
       "Boiling point",
       "At standard atmospheric pressure, water boils at 100 degrees Celsius.",
       "Iron",
       "Iron is a metal with a melting point of approximately 1,538 degrees Celsius.",
       "Water boils at 100 degrees Celsius.",
       "Iron does not melt until about 1,538 degrees Celsius, far above water's boiling point."},
      {"q17", "Could a cheetah outrun a city bus in a short sprint?", true,
       "Cheetahs sprint at over 100 kilometers per hour.",
       "City buses typically drive at no more than 50 kilometers per hour.",
       "Cheetah",
       "The cheetah is the fastest land animal, capable of short sprints at over 100 "
       "kilometers per hour.",
       "City bus",
       "City buses in urban traffic are typically limited to speeds of about 50 kilometers "
       "per hour.",
       "A cheetah sprints at over 100 kilometers per hour.",
       "A city bus tops out near 50 kilometers per hour, only half the cheetah's sprint speed."},
      {"q18", "Would a solid gold bar float in a bathtub of water?", false,
       "Gold has a density of about 19.3 grams per cubic centimeter.",
       "Objects denser than water sink.",
       "Gold",
       "Gold is a dense precious metal with a density of about 19.3 grams per cubic "
       "centimeter.",
       "Buoyancy",
       "An object placed in water floats only if its density is lower than water's density of "
       "1 gram per cubic centimeter; denser objects sink.",
       "Gold is about 19.3 times denser than water.",
       "Anything denser than water sinks, so a gold bar cannot float."},
      {"q19", "Can the naked human eye see an individual bacterium?", false,
       "The human eye can resolve objects down to about 0.1 millimeters.",
       "Bacteria are only a few micrometers long.",
       "Visual acuity",
       "The unaided human eye can typically resolve details no smaller than about 0.1 "
       "millimeters at reading distance.",
       "Bacteria",
       "Most bacteria measure between 1 and 5 micrometers, thousandths of a millimeter, far "
       "below unaided visual resolution.",
       "The naked eye resolves nothing smaller than about 0.1 millimeters.",
       "Bacteria measure just a few micrometers, well below the eye's resolution limit."},
      {"q20", "Is a decade shorter than 3,000 days?", false,
       "A decade lasts ten years.",
       "Ten years amount to about 3,652 days.",
       "Decade",
       "A decade is a period of ten consecutive years.",
       "Calendar year",
       "A calendar year averages 365.25 days, so ten years amount to about 3,652 days in "
       "total.",
       "A decade is ten years long.",
       "Ten years are about 3,652 days, which is more than 3,000 days, so a decade is longer."},
  };
}

std::string answer_sentence(bool yes) {
  return yes ? "Thus, the answer is yes." : "Thus, the answer is no.";
}

json dataset_json(const std::vector<ToyQuestion>& questions) {
  json paragraphs = json::array();
  json items = json::array();
  for (const ToyQuestion& q : questions) {
    const std::string pa = q.id + "a";
    const std::string pb = q.id + "b";
    paragraphs.push_back({{"id", pa}, {"title", q.title_a}, {"text", q.body_a}});
    paragraphs.push_back({{"id", pb}, {"title", q.title_b}, {"text", q.body_b}});
    items.push_back({{"id", q.id},
                     {"question", q.question},
                     {"answer", q.yes ? "yes" : "no"},
                     {"facts", {q.fact_a, q.fact_b}},
                     {"evidence", {pa, pb}}});
  }
  return json{{"questions", std::move(items)}, {"paragraphs", std::move(paragraphs)}};
}

/// The scripted model. With inverted=false every chain ends in the gold
/// answer; with inverted=true every answer flips while the chain scores stay
/// identical.
json mock_json(const std::vector<ToyQuestion>& questions, bool inverted) {
  json completions = json::array();
  json scores = json::array();

  for (const ToyQuestion& q : questions) {
    const bool emitted_yes = inverted ? !q.yes : q.yes;
    const std::string final_step = answer_sentence(emitted_yes);
    const std::string yes_sentence = answer_sentence(true);
    const std::string no_sentence = answer_sentence(false);

    // Step completions, most specific first: the answer step fires once the
    // second reasoning step is in context, regardless of the paragraph.
    completions.push_back(
        {{"prompt_contains", {q.question, q.step2}}, {"text", final_step}});
    completions.push_back(
        {{"prompt_contains", {q.question, q.body_b, q.step1}}, {"text", q.step2}});
    completions.push_back({{"prompt_contains", {q.question, q.body_a}}, {"text", q.step1}});
    // Single-line rationale for the reasoning modes.
    completions.push_back({{"prompt_contains", {q.question, "Reasoning:"}},
                           {"text", q.step1 + " " + q.step2 + " " + final_step}});

    // Context scores for the scripted steps: strongly bound to both the
    // paragraph and the question (very negative deltas). A context that
    // already contains the step scores it flat, so repetition chains rank
    // behind the intended continuation.
    auto step_scores = [&](const std::string& step, const std::string& body) {
      scores.push_back({{"continuation", step}, {"prefix_contains", {step}}, {"avg_nll", 2.5}});
      scores.push_back({{"continuation", step},
                        {"prefix_contains", {body, q.question}},
                        {"avg_nll", 0.05}});
      scores.push_back({{"continuation", step}, {"prefix_contains", {body}}, {"avg_nll", 2.0}});
      scores.push_back({{"continuation", step}, {"avg_nll", 2.5}});
    };
    step_scores(q.step1, q.body_a);
    step_scores(q.step2, q.body_b);

    // Forced-answer comparison: the emitted answer always wins.
    scores.push_back({{"continuation", emitted_yes ? yes_sentence : no_sentence},
                      {"prefix_contains", {q.question}},
                      {"avg_nll", 0.1}});
    scores.push_back({{"continuation", emitted_yes ? no_sentence : yes_sentence},
                      {"prefix_contains", {q.question}},
                      {"avg_nll", 3.0}});
    // Scoring the answer step inside a paragraph-only context (no question
    // line present, but the chain identifies the item via its second step).
    scores.push_back(
        {{"continuation", final_step}, {"prefix_contains", {q.step2}}, {"avg_nll", 0.05}});

    // Direct yes/no comparison for the answer-prompt modes.
    scores.push_back({{"continuation", emitted_yes ? "yes" : "no"},
                      {"prefix_contains", {q.question}},
                      {"avg_nll", 0.1}});
    scores.push_back({{"continuation", emitted_yes ? "no" : "yes"},
                      {"prefix_contains", {q.question}},
                      {"avg_nll", 3.0}});

    // Evidence ranking: the question is most likely after its own paragraphs.
    scores.push_back(
        {{"continuation", q.question}, {"prefix_contains", {q.body_a}}, {"avg_nll", 0.2}});
    scores.push_back(
        {{"continuation", q.question}, {"prefix_contains", {q.body_b}}, {"avg_nll", 0.25}});
  }

  return json{{"salt", 1337},
              {"fallback", {{"nll_range", {1.0, 3.0}}, {"completion_prefix", "step "}}},
              {"completions", std::move(completions)},
              {"scores", std::move(scores)}};
}

void write(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    std::exit(1);
  }
  out << j.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen-toy-assets <output-dir>\n";
    return 2;
  }
  const std::string dir = argv[1];
  const auto questions = toy_questions();
  write(dir + "/toy_dataset.json", dataset_json(questions));
  write(dir + "/toy_mock.json", mock_json(questions, false));
  write(dir + "/toy_mock_inverted.json", mock_json(questions, true));
  return 0;
}
