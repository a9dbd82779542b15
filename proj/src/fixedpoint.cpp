#include "vitsim/fixedpoint.hpp"

#include <charconv>

namespace vitsim {

QFormat QFormat::parse(std::string_view s) {
    if (s.size() < 4 || (s[0] != 'Q' && s[0] != 'q'))
        throw std::invalid_argument("QFormat: expected 'Q<int>.<frac>', got '" + std::string(s) + "'");
    const size_t dot = s.find('.');
    if (dot == std::string_view::npos)
        throw std::invalid_argument("QFormat: missing '.' in '" + std::string(s) + "'");
    int ib = 0, fb = 0;
    const auto r1 = std::from_chars(s.data() + 1, s.data() + dot, ib);
    const auto r2 = std::from_chars(s.data() + dot + 1, s.data() + s.size(), fb);
    if (r1.ec != std::errc{} || r1.ptr != s.data() + dot ||
        r2.ec != std::errc{} || r2.ptr != s.data() + s.size())
        throw std::invalid_argument("QFormat: malformed '" + std::string(s) + "'");
    return QFormat(ib, fb);
}

}  // namespace vitsim
