#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roep/geometry.hpp"

namespace roep::scene {

/// The fixed set of tabletop objects. Ids are assigned in file order.
class Catalog {
public:
  Catalog() = default;
  explicit Catalog(std::vector<geometry::ObjectSpec> objects);

  /// Parses `name category width_cm depth_cm height_cm` lines; '#' starts a
  /// comment. Throws std::runtime_error with the line number on bad input.
  static Catalog parse(std::istream& in);
  static Catalog load(const std::string& path);
  /// The catalog compiled in from data/objects.catalog.
  static const Catalog& builtin();

  std::size_t size() const { return objects_.size(); }
  const geometry::ObjectSpec& at(int id) const { return objects_.at(static_cast<std::size_t>(id)); }
  const std::vector<geometry::ObjectSpec>& objects() const { return objects_; }
  std::optional<int> find(std::string_view name) const;
  std::vector<int> ids_in(geometry::SizeCategory category) const;
  geometry::SizeCategory category_of(int id) const { return at(id).category; }

private:
  std::vector<geometry::ObjectSpec> objects_;
};

}  // namespace roep::scene
