#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scanqa/common.hpp"

namespace scanqa {

enum class Confidence { yes, maybe, no };

// yes -> 1.0, maybe -> 0.5, no -> 0.0
double confidence_value(Confidence c);
const char* confidence_name(Confidence c);
Confidence confidence_from_name(const std::string& name);

struct CameraViewpoint {
    std::array<double, 3> position{};
    std::array<double, 3> look_at{};

    bool operator==(const CameraViewpoint&) const = default;
};

struct AnswerSubmission {
    std::string text;  // canonical form (lowercased, trimmed, articles stripped)
    Confidence confidence = Confidence::yes;
    std::string annotator_id;
    std::optional<CameraViewpoint> viewpoint;

    bool operator==(const AnswerSubmission&) const = default;
};

enum class Split { train, val, test };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct QARecord {
    std::string question_id;
    std::string scene_id;
    std::string question;
    std::vector<AnswerSubmission> answers;
    Split split = Split::train;

    bool operator==(const QARecord&) const = default;
};

// Lowercase, trim, strip one leading article (a/an/the), collapse
// internal whitespace.
std::string canonicalize_answer(const std::string& text);

// Eq-style agreement score: min(#matching annotators / 2, 1).
double accuracy(const std::string& answer, const QARecord& record);

// Confidence-sum majority voting; every answer tied at the maximum sum.
std::set<std::string> correct_answers(const QARecord& record);

struct AnswerEvidence {
    long occurrences = 0;  // questions where the answer was a correct answer
    double summed_confidence = 0.0;
};

struct AnswerVocabulary {
    std::vector<std::string> answers;  // ordered by count desc, then alphabetical
    std::map<std::string, AnswerEvidence> evidence;

    int size() const { return static_cast<int>(answers.size()); }
    int index_of(const std::string& answer) const;
};

// Candidate answers seen as a correct answer in more than three train
// questions. Never inspects val/test records.
AnswerVocabulary build_answer_vocabulary(const std::vector<QARecord>& train_records);

void save_answer_vocabulary(const AnswerVocabulary& vocab, const std::string& path);
AnswerVocabulary load_answer_vocabulary(const std::string& path);

// JSONL: one QARecord per line, UTF-8, field names as in the schema file.
std::vector<QARecord> load_qa_jsonl(const std::string& path);
void save_qa_jsonl(const std::vector<QARecord>& records, const std::string& path);
QARecord qa_record_from_json_text(const std::string& text);
std::string qa_record_to_json_text(const QARecord& record);

}  // namespace scanqa
