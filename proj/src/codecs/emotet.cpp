#include "iirs/codecs.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>
#include <openssl/sha.h>

#include <fstream>
#include <memory>
#include <sstream>

namespace iirs::codecs {

namespace {

EVP_PKEY* pkey(const RsaKey& k) { return static_cast<EVP_PKEY*>(k.handle()); }

using CtxPtr = std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)>;

constexpr std::size_t kSha1Len = SHA_DIGEST_LENGTH;

Bytes sha1(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b = {}) {
  Bytes out(kSha1Len);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned int n = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), out.data(), &n) != 1)
    throw CodecError("SHA-1 failed");
  return out;
}

Bytes mgf1(std::span<const std::uint8_t> seed, std::size_t len) {
  Bytes out;
  for (std::uint32_t counter = 0; out.size() < len; ++counter) {
    std::array<std::uint8_t, 4> c{static_cast<std::uint8_t>(counter >> 24), static_cast<std::uint8_t>(counter >> 16),
                                  static_cast<std::uint8_t>(counter >> 8), static_cast<std::uint8_t>(counter)};
    Bytes h = sha1(seed, c);
    out.insert(out.end(), h.begin(), h.end());
  }
  out.resize(len);
  return out;
}

// EME-OAEP encoding (SHA-1, empty label) with a caller-chosen seed.
Bytes oaep_encode(std::span<const std::uint8_t> msg, std::span<const std::uint8_t> seed, std::size_t k) {
  if (msg.size() + 2 * kSha1Len + 2 > k)
    throw CodecError("RSA modulus too small for OAEP");
  Bytes db = sha1({});
  db.resize(k - msg.size() - kSha1Len - 2, 0);
  db.push_back(0x01);
  db.insert(db.end(), msg.begin(), msg.end());
  Bytes db_mask = mgf1(seed, db.size());
  for (std::size_t i = 0; i < db.size(); ++i)
    db[i] ^= db_mask[i];
  Bytes seed_mask = mgf1(db, kSha1Len);
  Bytes em{0x00};
  for (std::size_t i = 0; i < kSha1Len; ++i)
    em.push_back(seed[i] ^ seed_mask[i]);
  em.insert(em.end(), db.begin(), db.end());
  return em;
}

Bytes aes_cbc(const SessionKey& key, std::span<const std::uint8_t> data, bool encrypt) {
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  const unsigned char iv[16] = {};
  if (!ctx || EVP_CipherInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.data(), iv, encrypt ? 1 : 0) != 1)
    throw CodecError("AES initialisation failed");
  Bytes out(data.size() + 16);
  int n = 0;
  int tail = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &n, data.data(), static_cast<int>(data.size())) != 1 ||
      EVP_CipherFinal_ex(ctx.get(), out.data() + n, &tail) != 1)
    throw CodecError(encrypt ? "AES-CBC encryption failed" : "AES-CBC decryption failed (bad padding)");
  out.resize(static_cast<std::size_t>(n + tail));
  return out;
}

} // namespace

RsaKey RsaKey::from_pem(std::string_view pem) {
  std::unique_ptr<BIO, decltype(&BIO_free)> bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())),
                                                &BIO_free);
  if (!bio)
    throw CodecError("cannot allocate BIO");
  RsaKey key;
  bool is_private = pem.find("PRIVATE KEY") != std::string_view::npos;
  EVP_PKEY* k = is_private ? PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr)
                           : PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  if (!k)
    throw CodecError("cannot parse PEM key");
  if (EVP_PKEY_base_id(k) != EVP_PKEY_RSA) {
    EVP_PKEY_free(k);
    throw CodecError("PEM key is not RSA");
  }
  key.pkey_ = k;
  key.has_private_ = is_private;
  return key;
}

RsaKey RsaKey::from_pem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open key file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_pem(ss.str());
}

RsaKey::RsaKey(RsaKey&& other) noexcept : pkey_(other.pkey_), has_private_(other.has_private_) {
  other.pkey_ = nullptr;
}

RsaKey& RsaKey::operator=(RsaKey&& other) noexcept {
  if (this != &other) {
    EVP_PKEY_free(static_cast<EVP_PKEY*>(pkey_));
    pkey_ = other.pkey_;
    has_private_ = other.has_private_;
    other.pkey_ = nullptr;
  }
  return *this;
}

RsaKey::~RsaKey() { EVP_PKEY_free(static_cast<EVP_PKEY*>(pkey_)); }

std::size_t RsaKey::modulus_bytes() const { return static_cast<std::size_t>(EVP_PKEY_get_size(pkey(*this))); }

std::string emotet_seal(const RsaKey& rsa_public, const SessionKey& session_key,
                        std::span<const std::uint8_t> payload) {
  if (payload.empty())
    throw CodecError("emotet payload must not be empty");
  const std::size_t k = rsa_public.modulus_bytes();
  Bytes seed = sha1(session_key, payload);
  Bytes em = oaep_encode(session_key, seed, k);

  CtxPtr ctx(EVP_PKEY_CTX_new(pkey(rsa_public), nullptr), &EVP_PKEY_CTX_free);
  std::size_t out_len = k;
  Bytes wrapped(k);
  if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_NO_PADDING) != 1 ||
      EVP_PKEY_encrypt(ctx.get(), wrapped.data(), &out_len, em.data(), em.size()) != 1 || out_len != k)
    throw CodecError("RSA key wrap failed");

  Bytes body = aes_cbc(session_key, payload, true);
  wrapped.insert(wrapped.end(), body.begin(), body.end());
  return base64_encode(wrapped);
}

EmotetOpened emotet_open(const RsaKey& rsa_private, std::string_view cookie_value) {
  if (!rsa_private.has_private())
    throw CodecError("emotet_open needs a private key");
  Bytes blob = base64_decode(cookie_value);
  const std::size_t k = rsa_private.modulus_bytes();
  if (blob.size() < k + 16 || (blob.size() - k) % 16 != 0)
    throw CodecError("emotet envelope has the wrong length");

  CtxPtr ctx(EVP_PKEY_CTX_new(pkey(rsa_private), nullptr), &EVP_PKEY_CTX_free);
  Bytes key(k);
  std::size_t key_len = k;
  if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
      EVP_PKEY_decrypt(ctx.get(), key.data(), &key_len, blob.data(), k) != 1 || key_len != 16)
    throw CodecError("emotet key unwrap failed");

  EmotetOpened out;
  std::copy_n(key.begin(), 16, out.session_key.begin());
  out.payload = aes_cbc(out.session_key, std::span(blob).subspan(k), false);
  return out;
}

std::string emotet_session_encrypt(const SessionKey& key, std::span<const std::uint8_t> data) {
  return base64_encode(aes_cbc(key, data, true));
}

Bytes emotet_session_decrypt(const SessionKey& key, std::string_view base64_text) {
  Bytes c = base64_decode(base64_text);
  if (c.empty() || c.size() % 16 != 0)
    throw CodecError("session ciphertext length is not a positive multiple of 16");
  return aes_cbc(key, c, false);
}

} // namespace iirs::codecs
