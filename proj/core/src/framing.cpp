#include "sqlblock/framing.hpp"

#include <cerrno>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

namespace sqlblock::gate {

namespace {

std::uint32_t load_be32(const char* p) {
  auto b = reinterpret_cast<const unsigned char*>(p);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

bool recv_exact(int fd, char* dst, std::size_t n) {
  while (n > 0) {
    ssize_t r = ::recv(fd, dst, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    dst += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::string encode_frame(std::string_view payload) {
  auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out.append(payload);
  return out;
}

FrameDecoder::Status FrameDecoder::next(std::string& out) {
  if (buffered() < 4) return Status::NeedMore;
  std::uint32_t n = load_be32(buf_.data() + pos_);
  if (n > max_) return Status::Oversize;
  if (buffered() < 4 + std::size_t{n}) return Status::NeedMore;
  out.assign(buf_, pos_ + 4, n);
  pos_ += 4 + n;
  if (pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > 1 << 16) {
    buf_.erase(0, pos_);
    pos_ = 0;
  }
  return Status::Frame;
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t r = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(r));
  }
  return true;
}

bool send_frame(int fd, std::string_view payload) { return send_all(fd, encode_frame(payload)); }

bool recv_frame(int fd, std::string& out, std::size_t max_frame, bool* oversize) {
  if (oversize) *oversize = false;
  char hdr[4];
  if (!recv_exact(fd, hdr, 4)) return false;
  std::uint32_t n = load_be32(hdr);
  if (n > max_frame) {
    if (oversize) *oversize = true;
    return false;
  }
  out.resize(n);
  return n == 0 || recv_exact(fd, out.data(), n);
}

}  // namespace sqlblock::gate
