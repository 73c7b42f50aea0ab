#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

// Canonical 12-event sample log shared across the suite: one user, one
// window covering an evening search session (including a frameset visit),
// plus a final close event for a second window. Field values mirror real
// collector output, length fields included — two of the recorded lengths
// are deliberately off, which the parser must flag as warnings only.

namespace sample {

inline const std::string kMac = "00-0A-CD-01-C6-69";
inline const std::string kLogin = "Dülŷçğ";
inline const std::string kDate = "05/05/2008";

inline const std::string kSearchUrl =
    "http://www.google.com/search?hl=fr&q=site+page+frames+document+complete+event+internet+"
    "explorer+&lr=";
inline const std::string kResultsTitle =
    "site page frames document complete event internet explorer - Recherche Google";
inline const std::string kKbUrl = "http://support.microsoft.com/kb/180366";
inline const std::string kSurveyUrl = "http://support.microsoft.com/common/surveysubmit.asp";
inline const std::string kKbTitle =
    "Déterminait comment quand une page est faite charger dans le contrôle WebBrowser";

inline std::string tabbed(std::initializer_list<std::string_view> fields) {
    std::string out;
    bool first = true;
    for (auto f : fields) {
        if (!first) out += '\t';
        out += f;
        first = false;
    }
    return out;
}

inline std::string event_line(std::string_view time,
                              std::initializer_list<std::string_view> tail) {
    std::string out = tabbed({kMac, kLogin, kDate, time});
    for (auto f : tail) {
        out += '\t';
        out += f;
    }
    return out;
}

// The twelve lines, in log order.
inline std::string sample_log() {
    std::string text;
    auto add = [&](const std::string& l) {
        text += l;
        text += '\n';
    };
    add(event_line("22:23:08:712", {"262478", "01", "021", "http://www.google.com"}));
    add(event_line("22:23:13:609",
                   {"262478", "02", "021", "http://www.google.com", "006", "Google", "00"}));
    add(event_line("22:23:47:137", {"262478", "01", "104", kSearchUrl}));
    add(event_line("22:23:47:888", {"262478", "02", "104", kSearchUrl, "081", kResultsTitle, "00"}));
    add(event_line("22:23:58:143", {"262478", "01", "038", kKbUrl}));
    add(event_line("22:24:11:382", {"262478", "01", "052", kSurveyUrl}));
    add(event_line("22:24:18:813", {"262478", "02", "052", kSurveyUrl, "080", kKbTitle, "01"}));
    add(event_line("22:24:18:843", {"262478", "02", "038", kKbUrl, "080", kKbTitle, "01"}));
    add(event_line("22:24:18:973", {"262478", "01", "011", "about:blank"}));
    add(event_line("22:24:19:093", {"262478", "02", "011", "about:blank", "080", kKbTitle, "02"}));
    add(event_line("22:25:49:123", {"262478", "01", "104", kSearchUrl}));
    add(event_line("22:28:14:201", {"393618", "03"}));
    return text;
}

}  // namespace sample
