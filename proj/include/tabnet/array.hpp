#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tabnet/error.hpp"

namespace tabnet {

/// Row-major H x W array.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(checked(height) * checked(width)), fill) {}
  Plane(int height, int width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(checked(height) * checked(width)))
      throw ShapeMismatch("Plane: data size does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * width_ + c];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const Plane& o) const { return height_ == o.height_ && width_ == o.width_; }
  bool operator==(const Plane&) const = default;

 private:
  static long checked(int n) {
    if (n < 0) throw ShapeMismatch("Plane: negative dimension");
    return n;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// Channel-major C x H x W array. Used for probability maps, one-hot
/// targets, boundary maps and their gradients.
template <typename T>
class Stack {
 public:
  Stack() = default;
  Stack(int channels, int height, int width, T fill = T{})
      : channels_(channels), height_(height), width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0) throw ShapeMismatch("Stack: negative dimension");
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int k, int r, int c) {
    return data_[(static_cast<std::size_t>(k) * height_ + r) * width_ + c];
  }
  const T& operator()(int k, int r, int c) const {
    return data_[(static_cast<std::size_t>(k) * height_ + r) * width_ + c];
  }

  std::span<T> channel(int k) { return {data_.data() + k * plane_size(), plane_size()}; }
  std::span<const T> channel(int k) const {
    return {data_.data() + k * plane_size(), plane_size()};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_shape(const Stack& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool operator==(const Stack&) const = default;

  template <typename U>
  Stack<U> cast() const {
    Stack<U> out(channels_, height_, width_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Stack<A>& a, const Stack<B>& b, const char* what) {
  if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width())
    throw ShapeMismatch(std::string(what) + ": shape mismatch");
}

}  // namespace tabnet
