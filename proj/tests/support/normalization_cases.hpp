#pragma once

// Hand-built answer normalization cases: input and expected normalized form.

#include <string_view>
#include <utility>
#include <vector>

namespace normcases {

inline const std::vector<std::pair<std::string_view, std::string_view>>& cases() {
    static const std::vector<std::pair<std::string_view, std::string_view>> kCases = {
        {"The Beatles", "beatles"},
        {"U.S.A.", "usa"},
        {"  multiple   spaces\there ", "multiple spaces here"},
        {"", ""},
        {"The", ""},
        {"a an the", ""},
        {"Theatre", "theatre"},
        {"Anna", "anna"},
        {"A Tale of Two Cities", "tale of two cities"},
        {"Halden Rovers F.C.", "halden rovers fc"},
        {"O'Neil", "oneil"},
        {"rock-and-roll", "rockandroll"},
        {"\"Quoted\"", "quoted"},
        {"1,000", "1000"},
        {"3.14", "314"},
        {"(the) answer", "answer"},
        {"Mayor of Port Ellis!", "mayor of port ellis"},
        {"CAPS lock", "caps lock"},
        {"the-the", "thethe"},
        {"caf\xC3\xA9 au lait", "caf\xC3\xA9 au lait"},
    };
    return kCases;
}

}  // namespace normcases
