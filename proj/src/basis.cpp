#include "midas/basis.hpp"

#include <array>

namespace midas {

namespace {
constexpr std::array<std::pair<Scheme, std::string_view>, 7> kSchemeNames{{
    {Scheme::u, "u"},
    {Scheme::br, "br"},
    {Scheme::xalm, "xalm"},
    {Scheme::alm, "alm"},
    {Scheme::leg, "leg"},
    {Scheme::ber, "ber"},
    {Scheme::fou, "fou"},
}};
}  // namespace

Scheme parse_scheme(std::string_view name) {
  for (const auto& [s, n] : kSchemeNames)
    if (n == name) return s;
  throw ConfigError("unknown MIDAS scheme '" + std::string(name) + "'");
}

std::string_view scheme_name(Scheme s) {
  for (const auto& [k, n] : kSchemeNames)
    if (k == s) return n;
  return "?";
}

}  // namespace midas
