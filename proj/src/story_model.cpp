#include "storyloom/story_model.hpp"

#include <functional>

#include "storyloom/backends.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

void validate_premise(const Premise& premise) {
  if (text::trim(premise.text).empty()) throw PreconditionError("premise is empty");
  if (text::split_paragraphs(premise.text).size() != 1) {
    throw PreconditionError("premise must be a single paragraph");
  }
}

int outline_depth(const std::vector<OutlineNode>& outline) {
  int best = 0;
  for (const auto& node : outline) best = std::max(best, 1 + outline_depth(node.children));
  return best;
}

std::string child_label(const std::string& parent_label, std::size_t index, int depth) {
  std::string own;
  if (depth % 2 == 1) {
    own = std::to_string(index + 1);
  } else {
    // a..z, then aa, ab, ...
    std::size_t n = index;
    do {
      own.insert(own.begin(), static_cast<char>('a' + n % 26));
      n = n / 26;
    } while (n-- > 0);
  }
  return parent_label.empty() ? own : parent_label + "." + own;
}

namespace {

void relabel_nodes(std::vector<OutlineNode>& nodes, const std::string& parent, int depth) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].label = child_label(parent, i, depth);
    relabel_nodes(nodes[i].children, nodes[i].label, depth + 1);
  }
}

void check_nodes(const std::vector<OutlineNode>& nodes, const std::string& parent, int depth) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    if (text::trim(node.text).empty()) throw PreconditionError("outline node text is empty");
    if (node.label != child_label(parent, i, depth)) {
      throw PreconditionError("outline label '" + node.label + "' does not match its position");
    }
    check_nodes(node.children, node.label, depth + 1);
  }
}

void collect_leaves(const std::vector<OutlineNode>& nodes, std::vector<std::string>& texts,
                    std::vector<std::string>& labels, std::vector<OutlineLeaf>& out) {
  for (const auto& node : nodes) {
    if (node.is_leaf()) {
      out.push_back({node.label, node.text, texts, labels});
      continue;
    }
    texts.push_back(node.text);
    labels.push_back(node.label);
    collect_leaves(node.children, texts, labels, out);
    texts.pop_back();
    labels.pop_back();
  }
}

}  // namespace

void relabel(std::vector<OutlineNode>& outline) { relabel_nodes(outline, "", 1); }

void validate_plan(const Plan& plan, int max_depth) {
  validate_premise(plan.premise);
  if (!plan.setting.starts_with(kSettingPrefix)) {
    throw PreconditionError("setting must begin with \"The story is set\"");
  }
  if (plan.outline.empty()) throw PreconditionError("outline is empty");
  if (outline_depth(plan.outline) > max_depth) {
    throw PreconditionError("outline deeper than " + std::to_string(max_depth));
  }
  check_nodes(plan.outline, "", 1);
  for (const auto& c : plan.characters) {
    if (text::trim(c.name).empty() || c.name.find('\n') != std::string::npos) {
      throw PreconditionError("invalid character name");
    }
  }
}

std::vector<OutlineLeaf> flatten_outline(const Plan& plan) {
  if (plan.outline.empty()) throw PreconditionError("flatten_outline: outline is empty");
  std::vector<OutlineLeaf> out;
  std::vector<std::string> texts;
  std::vector<std::string> labels;
  collect_leaves(plan.outline, texts, labels, out);
  return out;
}

const OutlineNode* find_node(const std::vector<OutlineNode>& outline, const std::string& label) {
  for (const auto& node : outline) {
    if (node.label == label) return &node;
    if (label.starts_with(node.label + ".")) return find_node(node.children, label);
  }
  return nullptr;
}

const Passage& StoryState::append(std::string passage_text, std::string section_path,
                                  const Tokenizer& tokenizer) {
  Passage p;
  p.index = static_cast<int>(passages.size());
  p.token_count = tokenizer.count_tokens(passage_text);
  p.text = std::move(passage_text);
  p.section_path = std::move(section_path);
  passages.push_back(std::move(p));
  return passages.back();
}

std::string story_text(const StoryState& state, std::optional<std::size_t> last_k) {
  const std::size_t n = state.passages.size();
  const std::size_t first = last_k && *last_k < n ? n - *last_k : 0;
  std::string out;
  for (std::size_t i = first; i < n; ++i) {
    if (i > first) out += kPassageSeparator;
    out += state.passages[i].text;
  }
  return out;
}

}  // namespace loom
