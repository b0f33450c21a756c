#pragma once

#include <utility>
#include <vector>

namespace tiledit {

// The conditioning signal paired with its null counterpart. Toy backends use
// class labels; the adapter seam uses embedding vectors. The null conditioning
// is a distinct kind so "is this the unconditional branch" is structural.
struct Conditioning {
  enum class Kind { embedding, class_label, null_cond };

  Kind kind = Kind::null_cond;
  std::vector<float> embedding;  // kind == embedding
  int class_label = -1;          // kind == class_label

  bool is_null() const { return kind == Kind::null_cond; }

  static Conditioning null_conditioning() { return Conditioning{}; }

  static Conditioning for_class(int label) {
    Conditioning c;
    c.kind = Kind::class_label;
    c.class_label = label;
    return c;
  }

  static Conditioning embed(std::vector<float> values) {
    Conditioning c;
    c.kind = Kind::embedding;
    c.embedding = std::move(values);
    return c;
  }
};

}  // namespace tiledit
