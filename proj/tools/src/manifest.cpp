#include "manifest.hpp"

#include "ppls/error.hpp"
#include "ppls/version.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <fstream>
#include <memory>

namespace ppls::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Manifest::write(const std::filesystem::path& dir) const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["command"] = command;
  j["config"] = config;
  nlohmann::json in = nlohmann::json::array();
  for (const auto& p : inputs) {
    in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }
  j["inputs"] = in;
  j["outputs"] = outputs;
  j["versions"] = {{"ppls", kVersion}, {"eigen", kEigenVersion}};
  j["started_at"] = utc_timestamp(started);
  j["finished_at"] = utc_timestamp(std::chrono::system_clock::now());
  for (const auto& item : extra.items()) j[item.key()] = item.value();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write manifest.json");
  out << j.dump(2) << '\n';
}

}  // namespace ppls::cli
