#pragma once

#include <string>
#include <string_view>

// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
namespace cad::detail {

class PorterStemmer {
public:
    std::string operator()(std::string word) {
        if (word.size() <= 2) return word;
        w_ = std::move(word);
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return std::move(w_);
    }

private:
    std::string w_;

    bool is_consonant(std::size_t i) const {
        switch (w_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !is_consonant(i - 1);
            default:
                return true;
        }
    }

    // m() in the original: number of VC sequences in w_[0, end).
    std::size_t measure(std::size_t end) const {
        std::size_t n = 0;
        std::size_t i = 0;
        while (i < end && is_consonant(i)) ++i;
        while (i < end) {
            while (i < end && !is_consonant(i)) ++i;
            if (i >= end) break;
            while (i < end && is_consonant(i)) ++i;
            ++n;
        }
        return n;
    }

    bool has_vowel(std::size_t end) const {
        for (std::size_t i = 0; i < end; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(std::size_t end) const {
        return end >= 2 && w_[end - 1] == w_[end - 2] && is_consonant(end - 1);
    }

    // *o: stem ends consonant-vowel-consonant, last not w, x or y.
    bool cvc(std::size_t end) const {
        if (end < 3 || !is_consonant(end - 1) || is_consonant(end - 2) || !is_consonant(end - 3)) return false;
        const char c = w_[end - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends_with(std::string_view s) const {
        return w_.size() >= s.size() && std::string_view(w_).substr(w_.size() - s.size()) == s;
    }

    std::size_t stem_len(std::string_view suffix) const { return w_.size() - suffix.size(); }

    void set_suffix(std::string_view suffix, std::string_view repl) {
        w_.replace(stem_len(suffix), suffix.size(), repl);
    }

    // Replace suffix when the remaining stem has measure > 0.
    bool replace_m0(std::string_view suffix, std::string_view repl) {
        if (!ends_with(suffix)) return false;
        if (measure(stem_len(suffix)) > 0) set_suffix(suffix, repl);
        return true;
    }

    void step1ab() {
        if (ends_with("sses")) {
            set_suffix("sses", "ss");
        } else if (ends_with("ies")) {
            set_suffix("ies", "i");
        } else if (!ends_with("ss") && ends_with("s")) {
            set_suffix("s", "");
        }

        bool extra = false;
        if (ends_with("eed")) {
            if (measure(stem_len("eed")) > 0) set_suffix("eed", "ee");
        } else if (ends_with("ed") && has_vowel(stem_len("ed"))) {
            set_suffix("ed", "");
            extra = true;
        } else if (ends_with("ing") && has_vowel(stem_len("ing"))) {
            set_suffix("ing", "");
            extra = true;
        }
        if (!extra) return;
        if (ends_with("at")) {
            set_suffix("at", "ate");
        } else if (ends_with("bl")) {
            set_suffix("bl", "ble");
        } else if (ends_with("iz")) {
            set_suffix("iz", "ize");
        } else if (double_consonant(w_.size())) {
            const char c = w_.back();
            if (c != 'l' && c != 's' && c != 'z') w_.pop_back();
        } else if (measure(w_.size()) == 1 && cvc(w_.size())) {
            w_ += 'e';
        }
    }

    void step1c() {
        if (ends_with("y") && has_vowel(w_.size() - 1)) w_.back() = 'i';
    }

    void step2() {
        static constexpr std::string_view rules[][2] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"}, {"izer", "ize"},
            {"bli", "ble"},     {"alli", "al"},     {"entli", "ent"},  {"eli", "e"},     {"ousli", "ous"},
            {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},   {"alism", "al"},  {"iveness", "ive"},
            {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},   {"iviti", "ive"}, {"biliti", "ble"},
            {"logi", "log"},
        };
        for (const auto& r : rules) {
            if (replace_m0(r[0], r[1])) return;
        }
    }

    void step3() {
        static constexpr std::string_view rules[][2] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        for (const auto& r : rules) {
            if (replace_m0(r[0], r[1])) return;
        }
    }

    void step4() {
        static constexpr std::string_view suffixes[] = {
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
            "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        };
        for (auto s : suffixes) {
            if (!ends_with(s)) continue;
            const std::size_t stem = stem_len(s);
            if (s == "ion" && !(stem > 0 && (w_[stem - 1] == 's' || w_[stem - 1] == 't'))) return;
            if (measure(stem) > 1) w_.erase(stem);
            return;
        }
    }

    void step5() {
        if (ends_with("e")) {
            const std::size_t stem = w_.size() - 1;
            const std::size_t m = measure(stem);
            if (m > 1 || (m == 1 && !cvc(stem))) w_.pop_back();
        }
        if (measure(w_.size()) > 1 && double_consonant(w_.size()) && w_.back() == 'l') w_.pop_back();
    }
};

}  // namespace cad::detail
