#include "scanqa/qa.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace scanqa {

double confidence_value(Confidence c) {
    switch (c) {
        case Confidence::yes: return 1.0;
        case Confidence::maybe: return 0.5;
        case Confidence::no: return 0.0;
    }
    return 0.0;
}

const char* confidence_name(Confidence c) {
    switch (c) {
        case Confidence::yes: return "yes";
        case Confidence::maybe: return "maybe";
        case Confidence::no: return "no";
    }
    return "?";
}

Confidence confidence_from_name(const std::string& name) {
    if (name == "yes") return Confidence::yes;
    if (name == "maybe") return Confidence::maybe;
    if (name == "no") return Confidence::no;
    throw ParseError("unknown confidence '" + name + "'");
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ParseError("unknown split '" + name + "'");
}

std::string canonicalize_answer(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char ch : text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));

    std::istringstream stream(lowered);
    std::vector<std::string> words;
    std::string word;
    while (stream >> word) words.push_back(word);

    size_t start = 0;
    if (!words.empty() && (words[0] == "a" || words[0] == "an" || words[0] == "the") && words.size() > 1)
        start = 1;

    std::string out;
    for (size_t i = start; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

double accuracy(const std::string& answer, const QARecord& record) {
    if (record.answers.empty()) throw ValidationError("accuracy: record has no answers");
    const std::string canonical = canonicalize_answer(answer);
    int matches = 0;
    for (const AnswerSubmission& sub : record.answers)
        if (sub.text == canonical) ++matches;
    return std::min(static_cast<double>(matches) / 2.0, 1.0);
}

std::set<std::string> correct_answers(const QARecord& record) {
    if (record.answers.empty()) throw ValidationError("correct_answers: record has no answers");
    std::map<std::string, double> sums;
    for (const AnswerSubmission& sub : record.answers) sums[sub.text] += confidence_value(sub.confidence);
    double best = -1.0;
    for (const auto& [text, sum] : sums) best = std::max(best, sum);
    std::set<std::string> out;
    for (const auto& [text, sum] : sums)
        if (sum == best) out.insert(text);
    return out;
}

int AnswerVocabulary::index_of(const std::string& answer) const {
    for (size_t i = 0; i < answers.size(); ++i)
        if (answers[i] == answer) return static_cast<int>(i);
    return -1;
}

AnswerVocabulary build_answer_vocabulary(const std::vector<QARecord>& train_records) {
    AnswerVocabulary vocab;
    for (const QARecord& record : train_records) {
        if (record.split != Split::train) continue;
        const auto winners = correct_answers(record);
        std::map<std::string, double> record_sums;
        for (const AnswerSubmission& sub : record.answers)
            record_sums[sub.text] += confidence_value(sub.confidence);
        for (const std::string& answer : winners) {
            AnswerEvidence& ev = vocab.evidence[answer];
            ev.occurrences += 1;
            ev.summed_confidence += record_sums[answer];
        }
    }
    std::vector<std::pair<std::string, long>> ranked;
    for (const auto& [answer, ev] : vocab.evidence)
        if (ev.occurrences > 3) ranked.emplace_back(answer, ev.occurrences);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [answer, count] : ranked) {
        (void)count;
        vocab.answers.push_back(answer);
    }
    std::erase_if(vocab.evidence, [&](const auto& kv) { return kv.second.occurrences <= 3; });
    if (vocab.answers.empty()) log_warn("build_answer_vocabulary: no answer occurred more than three times");
    return vocab;
}

void save_answer_vocabulary(const AnswerVocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const std::string& answer : vocab.answers) {
        const AnswerEvidence& ev = vocab.evidence.at(answer);
        out << answer << "\t" << ev.occurrences << "\t" << ev.summed_confidence << "\n";
    }
}

AnswerVocabulary load_answer_vocabulary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    AnswerVocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        const size_t tab1 = line.find('\t');
        const size_t tab2 = line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw ParseError(path + ": malformed vocabulary line '" + line + "'");
        const std::string answer = line.substr(0, tab1);
        AnswerEvidence ev;
        ev.occurrences = std::stol(line.substr(tab1 + 1, tab2 - tab1 - 1));
        ev.summed_confidence = std::stod(line.substr(tab2 + 1));
        vocab.answers.push_back(answer);
        vocab.evidence[answer] = ev;
    }
    return vocab;
}

namespace {

nlohmann::ordered_json record_to_json(const QARecord& record) {
    nlohmann::ordered_json j;
    j["question_id"] = record.question_id;
    j["scene_id"] = record.scene_id;
    j["question"] = record.question;
    nlohmann::ordered_json answers = nlohmann::ordered_json::array();
    for (const AnswerSubmission& sub : record.answers) {
        nlohmann::ordered_json a;
        a["text"] = sub.text;
        a["confidence"] = confidence_name(sub.confidence);
        a["annotator_id"] = sub.annotator_id;
        if (sub.viewpoint) {
            a["viewpoint"] = {{"position", sub.viewpoint->position}, {"look_at", sub.viewpoint->look_at}};
        }
        answers.push_back(std::move(a));
    }
    j["answers"] = std::move(answers);
    j["split"] = split_name(record.split);
    return j;
}

QARecord record_from_json(const nlohmann::json& j) {
    QARecord record;
    record.question_id = j.at("question_id").get<std::string>();
    record.scene_id = j.at("scene_id").get<std::string>();
    record.question = j.at("question").get<std::string>();
    for (const auto& a : j.at("answers")) {
        AnswerSubmission sub;
        sub.text = canonicalize_answer(a.at("text").get<std::string>());
        if (sub.text.empty()) throw ValidationError("answer text empty after canonicalization");
        sub.confidence = confidence_from_name(a.at("confidence").get<std::string>());
        sub.annotator_id = a.value("annotator_id", std::string{});
        if (a.contains("viewpoint")) {
            CameraViewpoint vp;
            vp.position = a.at("viewpoint").at("position").get<std::array<double, 3>>();
            vp.look_at = a.at("viewpoint").at("look_at").get<std::array<double, 3>>();
            sub.viewpoint = vp;
        }
        record.answers.push_back(std::move(sub));
    }
    record.split = split_from_name(j.at("split").get<std::string>());
    return record;
}

}  // namespace

QARecord qa_record_from_json_text(const std::string& text) {
    try {
        return record_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("QA record: ") + e.what());
    }
}

std::string qa_record_to_json_text(const QARecord& record) { return record_to_json(record).dump(); }

std::vector<QARecord> load_qa_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::vector<QARecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        try {
            records.push_back(qa_record_from_json_text(line));
        } catch (const Error& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void save_qa_jsonl(const std::vector<QARecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const QARecord& record : records) out << qa_record_to_json_text(record) << "\n";
}

}  // namespace scanqa
