#include "scanqa/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

namespace scanqa {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

namespace {

void push_token(TokenVocabulary& vocab, const std::string& token) {
    if (vocab.ids.count(token)) return;
    vocab.ids[token] = static_cast<int>(vocab.tokens.size());
    vocab.tokens.push_back(token);
}

void index_specials(TokenVocabulary& vocab) {
    vocab.pad_id = vocab.id_of(TokenVocabulary::kPad);
    vocab.unk_id = vocab.id_of(TokenVocabulary::kUnk);
    vocab.cls_id = vocab.id_of(TokenVocabulary::kCls);
    vocab.sep_id = vocab.id_of(TokenVocabulary::kSep);
    vocab.app_id = vocab.id_of(TokenVocabulary::kApp);
    vocab.geo_id = vocab.id_of(TokenVocabulary::kGeo);
    for (int id : {vocab.pad_id, vocab.unk_id, vocab.cls_id, vocab.sep_id, vocab.app_id, vocab.geo_id})
        if (id < 0) throw ParseError("token vocabulary lacks a required special token");
}

}  // namespace

TokenVocabulary build_vocabulary(const std::vector<std::string>& corpus, int max_size) {
    if (corpus.empty()) throw ParameterError("build_vocabulary: empty corpus");

    std::map<std::string, long> counts;  // ordered: alphabetical tie-break for free
    std::set<char> fallback_chars;
    for (char c = 'a'; c <= 'z'; ++c) fallback_chars.insert(c);
    for (const std::string& q : corpus) {
        for (const std::string& w : split_words(q)) {
            ++counts[w];
            for (char c : w) fallback_chars.insert(c);
        }
    }

    const int n_special = 6;
    if (max_size < n_special + 26)
        throw ParameterError("build_vocabulary: max_size below special tokens + 26 character fallbacks");

    TokenVocabulary vocab;
    push_token(vocab, TokenVocabulary::kPad);
    push_token(vocab, TokenVocabulary::kUnk);
    push_token(vocab, TokenVocabulary::kCls);
    push_token(vocab, TokenVocabulary::kSep);
    push_token(vocab, TokenVocabulary::kApp);
    push_token(vocab, TokenVocabulary::kGeo);
    for (char c : fallback_chars) push_token(vocab, std::string(1, c));

    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [word, count] : ranked) {
        (void)count;
        if (vocab.size() >= max_size) break;
        if (word.size() > 1) push_token(vocab, word);
    }
    index_specials(vocab);
    return vocab;
}

TokenizedQuestion tokenize(const std::string& question, const TokenVocabulary& vocab) {
    TokenizedQuestion out;
    out.source = question;
    for (const std::string& word : split_words(question)) {
        size_t pos = 0;
        while (pos < word.size()) {
            // longest vocab entry that prefixes the remainder
            int matched_id = -1;
            size_t matched_len = 0;
            for (size_t len = word.size() - pos; len >= 1; --len) {
                const int id = vocab.id_of(word.substr(pos, len));
                if (id >= 0) {
                    matched_id = id;
                    matched_len = len;
                    break;
                }
            }
            if (matched_id < 0) {
                out.token_ids.push_back(vocab.unk_id);
                pos += 1;
            } else {
                out.token_ids.push_back(matched_id);
                pos += matched_len;
            }
        }
    }
    if (out.token_ids.empty()) out.token_ids.push_back(vocab.unk_id);
    return out;
}

void save_vocabulary(const TokenVocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const std::string& token : vocab.tokens) out << token << "\n";
}

TokenVocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    TokenVocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        push_token(vocab, line);
    }
    index_specials(vocab);
    return vocab;
}

}  // namespace scanqa
