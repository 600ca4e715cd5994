#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scanqa/qa.hpp"

namespace scanqa {

enum class RejectionPattern { existence, count, color, scene_type };
const char* rejection_name(RejectionPattern p);

// Built-in object / scene class lists for the easy-question checker.
// File overrides use one entry per line.
const std::vector<std::string>& default_known_objects();
const std::vector<std::string>& default_known_scenes();
std::vector<std::string> load_lexicon(const std::string& path);

// First matching easy-question pattern (existence, count, color,
// scene_type) or nullopt. Word counting runs over whitespace tokens of
// the raw question; class matching is case-insensitive and tolerates a
// plural trailing s/es on the final class word.
std::optional<RejectionPattern> reject_easy_question(const std::string& question,
                                                     const std::vector<std::string>& known_objects,
                                                     const std::vector<std::string>& known_scenes);

enum class QuestionType { spatial, compare_avg, placement, viewpoint, aggregation };
const char* question_type_name(QuestionType t);

struct QuestionTypeLexicon {
    std::vector<std::string> spatial;
    std::vector<std::string> compare_avg;
    std::vector<std::string> placement;
    std::vector<std::string> viewpoint;
    std::vector<std::string> aggregation;
};

const QuestionTypeLexicon& default_question_type_lexicon();

// At most one label; evaluation order spatial -> compare-avg ->
// placement -> viewpoint -> aggregation, first match wins. Entries
// without spaces match whole tokens; entries carrying spaces match as
// substrings with their boundaries as written.
std::optional<QuestionType> classify_question_type(const std::string& question,
                                                   const QuestionTypeLexicon& lexicon);

enum class AnswerType { yes_no, color, number, other };
const char* answer_type_name(AnswerType t);

// yes_no if every correct answer is yes/no; number if every one parses
// as an integer or a spelled numeral zero..twenty; color if every one is
// a CSS 2.1 keyword; other otherwise.
AnswerType classify_answer_type(const QARecord& record);

bool is_spelled_or_numeric_integer(const std::string& text);

}  // namespace scanqa
