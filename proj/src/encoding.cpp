#include "fpats/encoding.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

#include "fpats/error.hpp"
#include "fpats/rng.hpp"

namespace fpats {

std::string_view to_string(Encoding encoding) {
  switch (encoding) {
    case Encoding::Plain: return "Plain";
    case Encoding::PercentEncoded: return "PercentEncoded";
    case Encoding::Base64Std: return "Base64Std";
    case Encoding::Base64Url: return "Base64Url";
    case Encoding::Md5Hex: return "Md5Hex";
    case Encoding::Sha1Hex: return "Sha1Hex";
    case Encoding::Sha256Hex: return "Sha256Hex";
  }
  return "?";
}

Encoding encoding_from_string(std::string_view name) {
  for (auto e : kAllEncodings) {
    if (to_string(e) == name) return e;
  }
  throw Error("unknown encoding: " + std::string(name));
}

bool is_hex_encoding(Encoding encoding) {
  return encoding == Encoding::Md5Hex || encoding == Encoding::Sha1Hex ||
         encoding == Encoding::Sha256Hex;
}

std::string base64_encode(std::string_view bytes, bool url_alphabet, bool pad) {
  static constexpr char kStd[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  static constexpr char kUrl[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  const char* table = url_alphabet ? kUrl : kStd;
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const auto b1 = static_cast<unsigned char>(bytes[i + 1]);
    const auto b2 = static_cast<unsigned char>(bytes[i + 2]);
    out += table[b0 >> 2];
    out += table[((b0 & 0x03) << 4) | (b1 >> 4)];
    out += table[((b1 & 0x0f) << 2) | (b2 >> 6)];
    out += table[b2 & 0x3f];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    out += table[b0 >> 2];
    out += table[(b0 & 0x03) << 4];
    if (pad) out += "==";
  } else if (rest == 2) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const auto b1 = static_cast<unsigned char>(bytes[i + 1]);
    out += table[b0 >> 2];
    out += table[((b0 & 0x03) << 4) | (b1 >> 4)];
    out += table[(b1 & 0x0f) << 2];
    if (pad) out += '=';
  }
  return out;
}

std::string percent_encode(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
                            c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += "0123456789ABCDEF"[c >> 4];
      out += "0123456789ABCDEF"[c & 0x0f];
    }
  }
  return out;
}

namespace {

std::string digest_hex(const EVP_MD* md, std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error("digest computation failed");
  }
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHexLower[digest[i] >> 4];
    out += kHexLower[digest[i] & 0x0f];
  }
  return out;
}

}  // namespace

std::string md5_hex(std::string_view bytes) { return digest_hex(EVP_md5(), bytes); }
std::string sha1_hex(std::string_view bytes) { return digest_hex(EVP_sha1(), bytes); }
std::string sha256_hex(std::string_view bytes) { return digest_hex(EVP_sha256(), bytes); }

std::string apply_encoding(Encoding encoding, std::string_view value) {
  switch (encoding) {
    case Encoding::Plain: return std::string(value);
    case Encoding::PercentEncoded: return percent_encode(value);
    case Encoding::Base64Std: return base64_encode(value, false, true);
    case Encoding::Base64Url: return base64_encode(value, true, true);
    case Encoding::Md5Hex: return md5_hex(value);
    case Encoding::Sha1Hex: return sha1_hex(value);
    case Encoding::Sha256Hex: return sha256_hex(value);
  }
  throw std::logic_error("unreachable encoding");
}

}  // namespace fpats
