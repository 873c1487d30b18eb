#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relfreq/error.hpp"

namespace relfreq {

/// Component ids are 1-based; bit (id - 1) of a mask marks component id.
using ComponentMask = std::uint64_t;

inline constexpr int kMaxComponents = 64;

constexpr ComponentMask bit_of(int id) noexcept {
  return ComponentMask{1} << (id - 1);
}

constexpr bool contains(ComponentMask mask, int id) noexcept {
  return (mask & bit_of(id)) != 0;
}

constexpr bool is_subset(ComponentMask sub, ComponentMask super) noexcept {
  return (sub & ~super) == 0;
}

inline int cardinality(ComponentMask mask) noexcept { return std::popcount(mask); }

constexpr ComponentMask full_mask(int m) noexcept {
  return m >= 64 ? ~ComponentMask{0} : (ComponentMask{1} << m) - 1;
}

template <class F>
void for_each_id(ComponentMask mask, F&& f) {
  while (mask != 0) {
    f(std::countr_zero(mask) + 1);
    mask &= mask - 1;
  }
}

inline std::vector<int> ids_of(ComponentMask mask) {
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(cardinality(mask)));
  for_each_id(mask, [&](int id) { ids.push_back(id); });
  return ids;
}

/// Builds a mask from component ids in [1, m].
inline ComponentMask mask_of(std::span<const int> ids, int m) {
  ComponentMask mask = 0;
  for (int id : ids) {
    if (id < 1 || id > m) {
      throw Error(ErrorKind::invalid_argument,
                  "component id " + std::to_string(id) + " outside [1, " +
                      std::to_string(m) + "]");
    }
    mask |= bit_of(id);
  }
  return mask;
}

inline ComponentMask mask_of(std::initializer_list<int> ids, int m) {
  return mask_of(std::span<const int>(ids.begin(), ids.size()), m);
}

}  // namespace relfreq
