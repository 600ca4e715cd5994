#include <filesystem>
#include <random>

#include "doctest.h"
#include "scanqa/filters.hpp"
#include "scanqa/qa.hpp"

using namespace scanqa;

namespace {

QARecord record_with(const std::vector<std::pair<std::string, Confidence>>& answers,
                     Split split = Split::train) {
    QARecord r;
    r.question_id = "q0";
    r.scene_id = "s0";
    r.question = "what is on the table?";
    r.split = split;
    int i = 0;
    for (const auto& [text, conf] : answers) {
        AnswerSubmission sub;
        sub.text = canonicalize_answer(text);
        sub.confidence = conf;
        sub.annotator_id = "a" + std::to_string(i++);
        r.answers.push_back(std::move(sub));
    }
    return r;
}

}  // namespace

TEST_CASE("accuracy saturates at two matches") {
    for (int k = 0; k <= 10; ++k) {
        std::vector<std::pair<std::string, Confidence>> answers;
        for (int i = 0; i < k; ++i) answers.emplace_back("red", Confidence::yes);
        answers.emplace_back("blue", Confidence::yes);  // keep the record nonempty for k=0
        const QARecord r = record_with(answers);
        const double expected = k == 0 ? 0.0 : (k == 1 ? 0.5 : 1.0);
        CHECK(accuracy("red", r) == expected);
    }
}

TEST_CASE("accuracy matches on canonical forms") {
    const QARecord r = record_with({{"The Red", Confidence::yes}, {"red", Confidence::maybe}});
    CHECK(accuracy("a RED", r) == 1.0);
}

TEST_CASE("answer canonicalization") {
    CHECK(canonicalize_answer("  The   Red  Chair ") == "red chair");
    CHECK(canonicalize_answer("An apple") == "apple");
    CHECK(canonicalize_answer("THE") == "the");  // lone article survives
    CHECK(canonicalize_answer("a") == "a");
}

TEST_CASE("correct answers follow confidence-sum voting") {
    const QARecord r = record_with(
        {{"red", Confidence::yes}, {"red", Confidence::maybe}, {"blue", Confidence::yes}});
    const auto winners = correct_answers(r);
    REQUIRE(winners.size() == 1);
    CHECK(winners.count("red") == 1);
}

TEST_CASE("tied answers are all correct") {
    const QARecord r = record_with({{"red", Confidence::yes}, {"blue", Confidence::yes}});
    const auto winners = correct_answers(r);
    CHECK(winners.size() == 2);
}

TEST_CASE("a single no-confidence answer still wins") {
    const QARecord r = record_with({{"red", Confidence::no}});
    const auto winners = correct_answers(r);
    REQUIRE(winners.size() == 1);
    CHECK(winners.count("red") == 1);
}

TEST_CASE("correct answers are submission-order invariant") {
    std::vector<std::pair<std::string, Confidence>> answers = {
        {"red", Confidence::yes}, {"blue", Confidence::maybe}, {"red", Confidence::no},
        {"green", Confidence::yes}, {"blue", Confidence::yes}};
    const auto baseline = correct_answers(record_with(answers));
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(answers.begin(), answers.end(), rng);
        CHECK(correct_answers(record_with(answers)) == baseline);
    }
}

TEST_CASE("answer vocabulary keeps answers occurring more than three times") {
    std::vector<QARecord> train;
    for (int i = 0; i < 4; ++i) train.push_back(record_with({{"red", Confidence::yes}}));
    for (int i = 0; i < 3; ++i) train.push_back(record_with({{"blue", Confidence::yes}}));
    const auto vocab = build_answer_vocabulary(train);
    CHECK(vocab.index_of("red") == 0);
    CHECK(vocab.index_of("blue") == -1);
    CHECK(vocab.evidence.at("red").occurrences == 4);
}

TEST_CASE("empty train set gives an empty vocabulary") {
    CHECK(build_answer_vocabulary({}).answers.empty());
}

TEST_CASE("vocabulary building ignores non-train splits") {
    std::vector<QARecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(record_with({{"red", Confidence::yes}}, Split::test));
    CHECK(build_answer_vocabulary(records).answers.empty());
}

TEST_CASE("vocabulary counts equal a brute-force recount on a synthetic corpus") {
    std::mt19937_64 rng(97);
    const std::vector<std::string> pool = {"red", "blue", "yes", "no", "two", "chair"};
    std::vector<QARecord> train;
    for (int i = 0; i < 50; ++i) {
        std::vector<std::pair<std::string, Confidence>> answers;
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int a = 0; a < n; ++a)
            answers.emplace_back(pool[rng() % pool.size()],
                                 static_cast<Confidence>(rng() % 3));
        train.push_back(record_with(answers));
    }
    const auto vocab = build_answer_vocabulary(train);

    std::map<std::string, long> recount;
    for (const QARecord& r : train)
        for (const std::string& w : correct_answers(r)) ++recount[w];
    for (const auto& [answer, count] : recount) {
        if (count > 3) {
            CHECK(vocab.index_of(answer) >= 0);
            CHECK(vocab.evidence.at(answer).occurrences == count);
        } else {
            CHECK(vocab.index_of(answer) == -1);
        }
    }
    // ordering: count desc, alphabetical ties
    for (size_t i = 1; i < vocab.answers.size(); ++i) {
        const long a = vocab.evidence.at(vocab.answers[i - 1]).occurrences;
        const long b = vocab.evidence.at(vocab.answers[i]).occurrences;
        CHECK(a >= b);
        if (a == b) CHECK(vocab.answers[i - 1] < vocab.answers[i]);
    }
}

TEST_CASE("answer vocabulary files round-trip") {
    std::vector<QARecord> train;
    for (int i = 0; i < 5; ++i) train.push_back(record_with({{"red", Confidence::yes}}));
    for (int i = 0; i < 6; ++i) train.push_back(record_with({{"no", Confidence::maybe}}));
    const auto vocab = build_answer_vocabulary(train);
    const auto path = (std::filesystem::temp_directory_path() / "scanqa_answers.txt").string();
    save_answer_vocabulary(vocab, path);
    const auto loaded = load_answer_vocabulary(path);
    CHECK(loaded.answers == vocab.answers);
    CHECK(loaded.evidence.at("red").occurrences == vocab.evidence.at("red").occurrences);
}

TEST_CASE("easy-question rejection follows the four patterns") {
    const auto& objects = default_known_objects();
    const auto& scenes = default_known_scenes();
    auto reject = [&](const std::string& q) { return reject_easy_question(q, objects, scenes); };

    CHECK(reject("Is there a cabinet?") == RejectionPattern::existence);
    CHECK(reject("Are there any chairs in here?") == RejectionPattern::existence);
    CHECK_FALSE(reject("Is there a cabinet to the left of the blue armchair near the window?").has_value());

    CHECK(reject("How many chairs are in the room?") == RejectionPattern::count);
    CHECK_FALSE(reject("How many chairs are there between the door and the large window?").has_value());

    CHECK(reject("What color is the bed?") == RejectionPattern::color);
    CHECK(reject("What colour are the chairs?") == RejectionPattern::color);
    CHECK_FALSE(reject("What color is the bed next to the door?").has_value());

    CHECK(reject("Is this a bedroom?") == RejectionPattern::scene_type);
    CHECK(reject("Is it a living room?") == RejectionPattern::scene_type);
    CHECK(reject("Is this room a kitchen or is it something else entirely?") ==
          RejectionPattern::scene_type);

    CHECK_FALSE(reject("Is there a dragon?").has_value());       // unknown class
    CHECK_FALSE(reject("What is on the table?").has_value());    // no pattern
}

TEST_CASE("rejection never fires at or above the word-count threshold") {
    const auto& objects = default_known_objects();
    const auto& scenes = default_known_scenes();
    // exactly 8 words: the existence guard requires < 8
    CHECK_FALSE(
        reject_easy_question("Is there a cabinet near the big window?", objects, scenes).has_value());
    // exactly 6 words for the color guard (< 6 required)
    CHECK_FALSE(reject_easy_question("What color is the bed frame?", objects, scenes).has_value());
    // exactly 9 words for the count guard (< 9 required)
    CHECK_FALSE(reject_easy_question("How many chairs are there around the small table?", objects, scenes)
                    .has_value());
}

TEST_CASE("question types follow the first-match order") {
    const auto& lex = default_question_type_lexicon();
    CHECK(classify_question_type("How big is the table?", lex) == QuestionType::spatial);
    CHECK(classify_question_type("Is the desk higher than the average table?", lex) ==
          QuestionType::spatial);  // 'higher' wins before compare-avg
    CHECK(classify_question_type("Is this an average room?", lex) == QuestionType::compare_avg);
    CHECK(classify_question_type("Are the chairs placed in a neat way?", lex) ==
          QuestionType::placement);
    CHECK(classify_question_type("Can you see the door when you stand at the window?", lex) ==
          QuestionType::viewpoint);
    CHECK(classify_question_type("How many different cups are on display?", lex) ==
          QuestionType::aggregation);
    CHECK_FALSE(classify_question_type("What is the name of this room?", lex).has_value());
}

TEST_CASE("phrase entries respect their boundaries") {
    const auto& lex = default_question_type_lexicon();
    // ' go ' must match the word, not a prefix
    CHECK(classify_question_type("Where do people go when they enter?", lex) == QuestionType::viewpoint);
    CHECK_FALSE(classify_question_type("Is the gothic lamp black?", lex).has_value());
    // 'large scene' matches as a phrase
    CHECK(classify_question_type("Is this a large scene?", lex) == QuestionType::compare_avg);
}

TEST_CASE("answer types from correct answers") {
    CHECK(classify_answer_type(record_with({{"yes", Confidence::yes}, {"yes", Confidence::yes}})) ==
          AnswerType::yes_no);
    CHECK(classify_answer_type(record_with({{"3", Confidence::yes}})) == AnswerType::number);
    CHECK(classify_answer_type(record_with({{"three", Confidence::yes}})) == AnswerType::number);
    CHECK(classify_answer_type(record_with({{"red", Confidence::yes}, {"maroon", Confidence::yes}})) ==
          AnswerType::color);
    CHECK(classify_answer_type(record_with({{"wood", Confidence::yes}})) == AnswerType::other);
    // mixed winners fall through to other
    CHECK(classify_answer_type(record_with({{"yes", Confidence::yes}, {"red", Confidence::yes}})) ==
          AnswerType::other);
}

TEST_CASE("jsonl round-trips through files") {
    std::vector<QARecord> records;
    std::mt19937_64 rng(101);
    const std::vector<std::string> texts = {"red", "blue", "yes", "no", "2", "wooden chair"};
    for (int i = 0; i < 100; ++i) {
        QARecord r;
        r.question_id = "q" + std::to_string(i);
        r.scene_id = "scene" + std::to_string(i % 7);
        r.question = "Is the chair " + texts[rng() % texts.size()] + "?";
        r.split = static_cast<Split>(rng() % 3);
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int a = 0; a < n; ++a) {
            AnswerSubmission sub;
            sub.text = canonicalize_answer(texts[rng() % texts.size()]);
            sub.confidence = static_cast<Confidence>(rng() % 3);
            sub.annotator_id = "ann" + std::to_string(a);
            if (rng() % 2 == 0) {
                CameraViewpoint vp;
                for (int c = 0; c < 3; ++c) {
                    vp.position[static_cast<size_t>(c)] = static_cast<double>(rng() % 100) / 10.0;
                    vp.look_at[static_cast<size_t>(c)] = static_cast<double>(rng() % 100) / 10.0;
                }
                sub.viewpoint = vp;
            }
            r.answers.push_back(std::move(sub));
        }
        records.push_back(std::move(r));
    }
    const auto path = (std::filesystem::temp_directory_path() / "scanqa_records.jsonl").string();
    save_qa_jsonl(records, path);
    const auto loaded = load_qa_jsonl(path);
    REQUIRE(loaded.size() == records.size());
    CHECK(loaded == records);
}
