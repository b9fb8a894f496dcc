#include "fabula/stemmer.hpp"

#include <algorithm>
#include <cctype>

namespace fabula {
namespace {

class Stemmer {
public:
    explicit Stemmer(std::string_view word) : b_(word) {}

    std::string run() {
        if (b_.size() <= 2) {
            return b_;
        }
        step1ab();
        if (b_.size() > 1) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_;
    }

private:
    bool consonant(std::size_t i) const {
        switch (b_[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 || !consonant(i - 1);
        default:
            return true;
        }
    }

    // Number of VC sequences in b_[0, j_).
    int measure() const {
        int n = 0;
        std::size_t i = 0;
        while (true) {
            if (i >= j_) return n;
            if (!consonant(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i >= j_) return n;
                if (consonant(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i >= j_) return n;
                if (!consonant(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (std::size_t i = 0; i < j_; ++i) {
            if (!consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(std::size_t end) const {
        if (end < 2) return false;
        const auto i = end - 1;
        return b_[i] == b_[i - 1] && consonant(i);
    }

    // cvc at the end of b_[0, end), where the final c is not w, x or y.
    bool cvc(std::size_t end) const {
        if (end < 3) return false;
        const auto i = end - 1;
        if (!consonant(i) || consonant(i - 1) || !consonant(i - 2)) return false;
        const char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view suffix) {
        if (suffix.size() > b_.size()) return false;
        if (b_.compare(b_.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
        j_ = b_.size() - suffix.size();
        return true;
    }

    void set_to(std::string_view replacement) {
        b_.resize(j_);
        b_ += replacement;
    }

    void replace_if_measure(std::string_view replacement) {
        if (measure() > 0) set_to(replacement);
    }

    void step1ab() {
        if (b_.back() == 's') {
            if (ends("sses")) {
                b_.resize(b_.size() - 2);
            } else if (ends("ies")) {
                set_to("i");
            } else if (b_.size() >= 2 && b_[b_.size() - 2] != 's') {
                b_.pop_back();
            }
        }
        if (ends("eed")) {
            if (measure() > 0) b_.pop_back();
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            b_.resize(j_);
            j_ = b_.size();
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(b_.size())) {
                const char ch = b_.back();
                if (ch != 'l' && ch != 's' && ch != 'z') b_.pop_back();
            } else {
                j_ = b_.size();
                if (measure() == 1 && cvc(b_.size())) b_ += 'e';
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_.back() = 'i';
    }

    void step2() {
        if (b_.size() < 2) return;
        switch (b_[b_.size() - 2]) {
        case 'a':
            if (ends("ational")) { replace_if_measure("ate"); break; }
            if (ends("tional")) { replace_if_measure("tion"); break; }
            break;
        case 'c':
            if (ends("enci")) { replace_if_measure("ence"); break; }
            if (ends("anci")) { replace_if_measure("ance"); break; }
            break;
        case 'e':
            if (ends("izer")) { replace_if_measure("ize"); break; }
            break;
        case 'l':
            if (ends("bli")) { replace_if_measure("ble"); break; }
            if (ends("alli")) { replace_if_measure("al"); break; }
            if (ends("entli")) { replace_if_measure("ent"); break; }
            if (ends("eli")) { replace_if_measure("e"); break; }
            if (ends("ousli")) { replace_if_measure("ous"); break; }
            break;
        case 'o':
            if (ends("ization")) { replace_if_measure("ize"); break; }
            if (ends("ation")) { replace_if_measure("ate"); break; }
            if (ends("ator")) { replace_if_measure("ate"); break; }
            break;
        case 's':
            if (ends("alism")) { replace_if_measure("al"); break; }
            if (ends("iveness")) { replace_if_measure("ive"); break; }
            if (ends("fulness")) { replace_if_measure("ful"); break; }
            if (ends("ousness")) { replace_if_measure("ous"); break; }
            break;
        case 't':
            if (ends("aliti")) { replace_if_measure("al"); break; }
            if (ends("iviti")) { replace_if_measure("ive"); break; }
            if (ends("biliti")) { replace_if_measure("ble"); break; }
            break;
        case 'g':
            if (ends("logi")) { replace_if_measure("log"); break; }
            break;
        default:
            break;
        }
    }

    void step3() {
        switch (b_.back()) {
        case 'e':
            if (ends("icate")) { replace_if_measure("ic"); break; }
            if (ends("ative")) { replace_if_measure(""); break; }
            if (ends("alize")) { replace_if_measure("al"); break; }
            break;
        case 'i':
            if (ends("iciti")) { replace_if_measure("ic"); break; }
            break;
        case 'l':
            if (ends("ical")) { replace_if_measure("ic"); break; }
            if (ends("ful")) { replace_if_measure(""); break; }
            break;
        case 's':
            if (ends("ness")) { replace_if_measure(""); break; }
            break;
        default:
            break;
        }
    }

    void step4() {
        if (b_.size() < 2) return;
        bool matched = false;
        switch (b_[b_.size() - 2]) {
        case 'a': matched = ends("al"); break;
        case 'c': matched = ends("ance") || ends("ence"); break;
        case 'e': matched = ends("er"); break;
        case 'i': matched = ends("ic"); break;
        case 'l': matched = ends("able") || ends("ible"); break;
        case 'n': matched = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
        case 'o':
            if (ends("ion")) {
                matched = j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't');
            } else {
                matched = ends("ou");
            }
            break;
        case 's': matched = ends("ism"); break;
        case 't': matched = ends("ate") || ends("iti"); break;
        case 'u': matched = ends("ous"); break;
        case 'v': matched = ends("ive"); break;
        case 'z': matched = ends("ize"); break;
        default: break;
        }
        if (matched && measure() > 1) b_.resize(j_);
    }

    void step5() {
        j_ = b_.size();
        if (b_.back() == 'e') {
            j_ = b_.size() - 1;
            const int m = measure();
            if (m > 1 || (m == 1 && !cvc(b_.size() - 1))) b_.pop_back();
        }
        j_ = b_.size();
        if (b_.back() == 'l' && double_consonant(b_.size()) && measure() > 1) b_.pop_back();
    }

    std::string b_;
    std::size_t j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
    const bool letters_only = std::all_of(word.begin(), word.end(), [](unsigned char ch) {
        return ch >= 'a' && ch <= 'z';
    });
    if (!letters_only || word.size() <= 2) {
        return std::string(word);
    }
    return Stemmer(word).run();
}

}  // namespace fabula
