#pragma once

// Independent integer -> Chinese numeral renderer, used as the round-trip
// oracle for number normalization. Deliberately written against the standard
// reading rules, not by inverting the parser.

#include <string>

namespace numeral_oracle {

inline std::string render_under_10000(long long n) {
    static const char* digits[] = {"零", "一", "二", "三", "四", "五", "六", "七", "八", "九"};
    static const char* units[] = {"", "十", "百", "千"};
    if (n == 0) return "零";
    std::string out;
    bool pending_zero = false;
    bool any = false;
    for (int pos = 3; pos >= 0; --pos) {
        long long unit = 1;
        for (int k = 0; k < pos; ++k) unit *= 10;
        int d = static_cast<int>((n / unit) % 10);
        if (d == 0) {
            if (any) pending_zero = true;
            continue;
        }
        if (pending_zero) {
            out += digits[0];
            pending_zero = false;
        }
        out += digits[d];
        out += units[pos];
        any = true;
    }
    return out;
}

// Renders 0 .. 10^16 using 亿/万 sections with standard zero insertion.
inline std::string to_chinese(long long n) {
    if (n == 0) return "零";
    long long yi = n / 100000000;
    long long rest = n % 100000000;
    long long wan = rest / 10000;
    long long low = rest % 10000;
    std::string out;
    if (yi > 0) {
        out += to_chinese(yi);
        out += "亿";
    }
    if (wan > 0) {
        if (yi > 0 && wan < 1000) out += "零";
        out += render_under_10000(wan);
        out += "万";
    }
    if (low > 0) {
        if ((yi > 0 || wan > 0) && low < 1000) out += "零";
        out += render_under_10000(low);
    }
    return out;
}

}  // namespace numeral_oracle
