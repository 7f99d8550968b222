#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace distrag::detail {

inline uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hexdigits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hexdigits[digest[i] >> 4]);
        out.push_back(hexdigits[digest[i] & 0xf]);
    }
    return out;
}

} // namespace distrag::detail
