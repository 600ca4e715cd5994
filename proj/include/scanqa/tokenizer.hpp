#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "scanqa/common.hpp"

namespace scanqa {

// Subword vocabulary: special tokens, single-character fallbacks, then
// whole words ranked by corpus frequency. Ids are dense line numbers.
struct TokenVocabulary {
    static constexpr const char* kPad = "[PAD]";
    static constexpr const char* kUnk = "[UNK]";
    static constexpr const char* kCls = "[CLS]";
    static constexpr const char* kSep = "[SEP]";
    static constexpr const char* kApp = "<APP>";
    static constexpr const char* kGeo = "<GEO>";

    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> ids;

    int pad_id = 0, unk_id = 1, cls_id = 2, sep_id = 3, app_id = 4, geo_id = 5;

    int size() const { return static_cast<int>(tokens.size()); }
    int id_of(const std::string& token) const {
        auto it = ids.find(token);
        return it == ids.end() ? -1 : it->second;
    }
};

struct TokenizedQuestion {
    std::vector<int> token_ids;
    std::string source;
};

// Lowercases, splits words on ASCII punctuation/whitespace.
std::vector<std::string> split_words(const std::string& text);

// Frequency-ranked whole words plus character fallbacks, capped at
// max_size. Counting is corpus-order independent; ties alphabetical.
TokenVocabulary build_vocabulary(const std::vector<std::string>& corpus, int max_size);

// Greedy longest-match-first segmentation per word; unmatched characters
// map to [UNK]. The empty question yields a single [UNK].
TokenizedQuestion tokenize(const std::string& question, const TokenVocabulary& vocab);

// One token per line, line number = id.
void save_vocabulary(const TokenVocabulary& vocab, const std::string& path);
TokenVocabulary load_vocabulary(const std::string& path);

}  // namespace scanqa
