#pragma once

// Prompt templates with named {placeholders}. Built-in defaults can be
// overridden per name from a directory of "<name>.txt" files.

#include <map>
#include <string>
#include <vector>

namespace loom {

class TemplateSet {
 public:
  // The built-in defaults.
  TemplateSet();

  // Overrides every "<name>.txt" in `dir` whose name is a known template.
  // One trailing newline in a file is ignored. Throws ConfigError on
  // unreadable directories or unknown template files.
  void load_directory(const std::string& dir);

  const std::string& raw(const std::string& name) const;
  void set(const std::string& name, std::string body);

  // Substitutes {key} for every provided variable. Unknown placeholders are
  // left untouched.
  std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

// Shared read-only default instance.
const TemplateSet& default_templates();

}  // namespace loom
