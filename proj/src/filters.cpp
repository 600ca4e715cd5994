#include "scanqa/filters.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "scanqa/appearance.hpp"

namespace scanqa {

const char* rejection_name(RejectionPattern p) {
    switch (p) {
        case RejectionPattern::existence: return "existence";
        case RejectionPattern::count: return "count";
        case RejectionPattern::color: return "color";
        case RejectionPattern::scene_type: return "scene_type";
    }
    return "?";
}

const std::vector<std::string>& default_known_objects() {
    static const std::vector<std::string> objects = {
        "wall", "floor", "ceiling", "cabinet", "bed", "chair", "sofa", "couch", "table",
        "door", "window", "bookshelf", "shelf", "picture", "counter", "desk", "curtain",
        "refrigerator", "toilet", "sink", "bathtub", "lamp", "stool", "armchair", "pillow",
        "mirror", "dresser", "wardrobe", "nightstand", "monitor", "television", "whiteboard",
        "trash can", "towel", "box",
    };
    return objects;
}

const std::vector<std::string>& default_known_scenes() {
    static const std::vector<std::string> scenes = {
        "bedroom", "bathroom", "kitchen", "living room", "office", "hotel", "hotel room",
        "classroom", "conference room", "laundry room", "apartment", "lobby", "hallway",
        "dining room", "library", "gym", "storage room", "copy room",
    };
    return scenes;
}

std::vector<std::string> load_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) entries.push_back(line);
    }
    return entries;
}

namespace {

std::string lowercase(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

// Whitespace tokens with edge punctuation stripped, lowercased.
std::vector<std::string> match_tokens(const std::string& question) {
    std::istringstream stream(lowercase(question));
    std::vector<std::string> tokens;
    std::string token;
    while (stream >> token) {
        size_t lo = 0, hi = token.size();
        while (lo < hi && !std::isalnum(static_cast<unsigned char>(token[lo]))) ++lo;
        while (hi > lo && !std::isalnum(static_cast<unsigned char>(token[hi - 1]))) --hi;
        if (hi > lo) tokens.push_back(token.substr(lo, hi - lo));
    }
    return tokens;
}

size_t whitespace_word_count(const std::string& question) {
    std::istringstream stream(question);
    std::string token;
    size_t count = 0;
    while (stream >> token) ++count;
    return count;
}

bool token_matches_class_word(const std::string& token, const std::string& word) {
    if (token == word) return true;
    if (token == word + "s") return true;
    if (token == word + "es") return true;
    return false;
}

bool class_match_at(const std::vector<std::string>& tokens, size_t pos,
                    const std::vector<std::string>& lexicon) {
    for (const std::string& entry : lexicon) {
        std::istringstream stream(lowercase(entry));
        std::vector<std::string> words;
        std::string w;
        while (stream >> w) words.push_back(w);
        if (words.empty() || pos + words.size() > tokens.size()) continue;
        bool ok = true;
        for (size_t i = 0; i < words.size(); ++i) {
            const bool last = i + 1 == words.size();
            const std::string& token = tokens[pos + i];
            if (last ? !token_matches_class_word(token, words[i]) : token != words[i]) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

bool is_one_of(const std::string& token, std::initializer_list<const char*> options) {
    return std::any_of(options.begin(), options.end(),
                       [&](const char* opt) { return token == opt; });
}

}  // namespace

std::optional<RejectionPattern> reject_easy_question(const std::string& question,
                                                     const std::vector<std::string>& known_objects,
                                                     const std::vector<std::string>& known_scenes) {
    const auto tokens = match_tokens(question);
    const size_t words = whitespace_word_count(question);

    // Is|Are there a|an|any|some <KnownObjectClass> ...?  (< 8 words)
    if (words < 8 && tokens.size() >= 4 && is_one_of(tokens[0], {"is", "are"}) && tokens[1] == "there" &&
        is_one_of(tokens[2], {"a", "an", "any", "some"}) && class_match_at(tokens, 3, known_objects))
        return RejectionPattern::existence;

    // How many <KnownObjectClass> ...?  (< 9 words)
    if (words < 9 && tokens.size() >= 3 && tokens[0] == "how" && tokens[1] == "many" &&
        class_match_at(tokens, 2, known_objects))
        return RejectionPattern::count;

    // What color|colour is|are the <KnownObjectClass> ...?  (< 6 words)
    if (words < 6 && tokens.size() >= 5 && tokens[0] == "what" && is_one_of(tokens[1], {"color", "colour"}) &&
        is_one_of(tokens[2], {"is", "are"}) && tokens[3] == "the" && class_match_at(tokens, 4, known_objects))
        return RejectionPattern::color;

    // Is it|this [scene|scan|room] a|an <KnownSceneClass> ...?
    if (tokens.size() >= 4 && tokens[0] == "is" && is_one_of(tokens[1], {"it", "this"})) {
        size_t pos = 2;
        if (pos < tokens.size() && is_one_of(tokens[pos], {"scene", "scan", "room"})) ++pos;
        if (pos + 1 < tokens.size() && is_one_of(tokens[pos], {"a", "an"}) &&
            class_match_at(tokens, pos + 1, known_scenes))
            return RejectionPattern::scene_type;
    }

    return std::nullopt;
}

const char* question_type_name(QuestionType t) {
    switch (t) {
        case QuestionType::spatial: return "spatial";
        case QuestionType::compare_avg: return "compare-avg";
        case QuestionType::placement: return "placement";
        case QuestionType::viewpoint: return "viewpoint";
        case QuestionType::aggregation: return "aggregation";
    }
    return "?";
}

const QuestionTypeLexicon& default_question_type_lexicon() {
    static const QuestionTypeLexicon lexicon = {
        // spatial
        {"big", "small", "great", "tall", "short", "high", "low", "size", "height", "length",
         "width", "angle", "parallel", "wide", "vertical", "opposite", "tilt", "diagonal", "near",
         "by", "between", "long", "shape", "next", "fit", "far", "close", "space", "cluttered",
         "narrow", "spacious", "bigger", "greater", "smaller", "taller", "shorter", "higher",
         "lower", "longer", "closer", "farther", "inside"},
        // compare-avg
        {"average", "large scene", "small scene", "large sized", "small sized", "high ceiling"},
        // placement
        {"placed", "arrange", "neat", "perpendicular", "straight", "form", "symmetrical", "covered",
         "put", "horizontal", "surrounded", "row", "line", "separate", "partition", "sloped"},
        // viewpoint
        {"stand", "sit", "walk", " go ", "into", "face", "facing", "look", "see", "your", "against",
         "above", "middle", "side"},
        // aggregation
        {"many", "all", "any", "largest", "farthest", "most", "least", "nearest", "total", "nothing",
         "highest", "brightest", "else", "special", " every", "entire", "totally", "only"},
    };
    return lexicon;
}

namespace {

bool keyword_list_matches(const std::string& question, const std::vector<std::string>& entries) {
    const auto tokens = match_tokens(question);
    // token stream re-joined with single spaces, padded, for phrase entries
    std::string padded = " ";
    for (const std::string& t : tokens) {
        padded += t;
        padded += ' ';
    }
    for (const std::string& entry : entries) {
        if (entry.find(' ') != std::string::npos) {
            if (padded.find(entry) != std::string::npos) return true;
        } else {
            if (std::find(tokens.begin(), tokens.end(), entry) != tokens.end()) return true;
        }
    }
    return false;
}

}  // namespace

std::optional<QuestionType> classify_question_type(const std::string& question,
                                                   const QuestionTypeLexicon& lexicon) {
    if (keyword_list_matches(question, lexicon.spatial)) return QuestionType::spatial;
    if (keyword_list_matches(question, lexicon.compare_avg)) return QuestionType::compare_avg;
    if (keyword_list_matches(question, lexicon.placement)) return QuestionType::placement;
    if (keyword_list_matches(question, lexicon.viewpoint)) return QuestionType::viewpoint;
    if (keyword_list_matches(question, lexicon.aggregation)) return QuestionType::aggregation;
    return std::nullopt;
}

const char* answer_type_name(AnswerType t) {
    switch (t) {
        case AnswerType::yes_no: return "yes_no";
        case AnswerType::color: return "color";
        case AnswerType::number: return "number";
        case AnswerType::other: return "other";
    }
    return "?";
}

bool is_spelled_or_numeric_integer(const std::string& text) {
    if (!text.empty() && std::all_of(text.begin(), text.end(),
                                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return true;
    static const std::vector<std::string> spelled = {
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
        "nineteen", "twenty"};
    return std::find(spelled.begin(), spelled.end(), text) != spelled.end();
}

AnswerType classify_answer_type(const QARecord& record) {
    const auto winners = correct_answers(record);

    const bool all_yes_no = std::all_of(winners.begin(), winners.end(),
                                        [](const std::string& a) { return a == "yes" || a == "no"; });
    if (all_yes_no) return AnswerType::yes_no;

    const bool all_number = std::all_of(winners.begin(), winners.end(), is_spelled_or_numeric_integer);
    if (all_number) return AnswerType::number;

    const auto& colors = named_colors();
    const bool all_color = std::all_of(winners.begin(), winners.end(), [&](const std::string& a) {
        return std::any_of(colors.begin(), colors.end(),
                           [&](const NamedColor& c) { return a == c.name; });
    });
    if (all_color) return AnswerType::color;

    return AnswerType::other;
}

}  // namespace scanqa
