#include "roep/catalog.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "roep/catalog_data.hpp"

namespace roep::scene {

Catalog::Catalog(std::vector<geometry::ObjectSpec> objects) : objects_(std::move(objects)) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    objects_[i].id = static_cast<int>(i);
    objects_[i].validate();
    if (!names.insert(objects_[i].name).second) {
      throw std::runtime_error("catalog: duplicate object name '" + objects_[i].name + "'");
    }
  }
}

Catalog Catalog::parse(std::istream& in) {
  std::vector<geometry::ObjectSpec> objects;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    geometry::ObjectSpec spec;
    std::string category;
    if (!(fields >> spec.name)) continue;
    if (!(fields >> category >> spec.width_cm >> spec.depth_cm >> spec.height_cm)) {
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": expected 5 fields");
    }
    std::string extra;
    if (fields >> extra) {
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": trailing field '" + extra + "'");
    }
    try {
      spec.category = geometry::parse_category(category);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": " + e.what());
    }
    objects.push_back(std::move(spec));
  }
  return Catalog(std::move(objects));
}

Catalog Catalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open catalog file " + path);
  }
  return parse(in);
}

const Catalog& Catalog::builtin() {
  static const Catalog catalog = [] {
    std::istringstream in(detail::kBuiltinCatalog);
    return parse(in);
  }();
  return catalog;
}

std::optional<int> Catalog::find(std::string_view name) const {
  for (const auto& o : objects_) {
    if (o.name == name) return o.id;
  }
  return std::nullopt;
}

std::vector<int> Catalog::ids_in(geometry::SizeCategory category) const {
  std::vector<int> ids;
  for (const auto& o : objects_) {
    if (o.category == category) ids.push_back(o.id);
  }
  return ids;
}

}  // namespace roep::scene
