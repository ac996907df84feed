#pragma once

#include <string>
#include <string_view>

namespace fpats {

enum class Encoding { Plain, PercentEncoded, Base64Std, Base64Url, Md5Hex, Sha1Hex, Sha256Hex };

inline constexpr Encoding kAllEncodings[] = {Encoding::Plain,     Encoding::PercentEncoded,
                                             Encoding::Base64Std, Encoding::Base64Url,
                                             Encoding::Md5Hex,    Encoding::Sha1Hex,
                                             Encoding::Sha256Hex};

std::string_view to_string(Encoding encoding);
Encoding encoding_from_string(std::string_view name);
bool is_hex_encoding(Encoding encoding);

std::string base64_encode(std::string_view bytes, bool url_alphabet = false, bool pad = true);
// RFC 3986 percent-encoding; unreserved characters pass through.
std::string percent_encode(std::string_view bytes);

std::string md5_hex(std::string_view bytes);
std::string sha1_hex(std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

// Applies a single encoding. For Base64 variants the padded form is returned.
std::string apply_encoding(Encoding encoding, std::string_view value);

}  // namespace fpats
