#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/reference_example.hpp"
#include "treelp/explain/case.hpp"
#include "treelp/rules/parser.hpp"

using namespace treelp;
using namespace treelp::explain;
using compile::Encoding;
using treelp::testing::normalize_layout;

namespace {
Atom ground(const std::string& text) { return rules::parse_program(text + ".").rules.at(0).head; }
}  // namespace

TEST(Explain, SmallAnnotatedProgram) {
  auto p = rules::parse_program(treelp::testing::kSmallProgramAnnotated);
  auto g = rules::evaluate(p, std::vector<Atom>{});
  auto ex = build_explanations(g, p, ground("bad(55)"));
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0], (ExplanationTree{"Patient 55 may fail", {{"rec_vhc is true", {}}, {"don_acv is true", {}}}}));
  EXPECT_EQ(normalize_layout(render_ascii(ground("bad(55)"), ex)), normalize_layout(treelp::testing::kSmallExplanation));
}

TEST(Explain, RenderingLayout) {
  ExplanationTree t{"a", {{"b", {{"c", {}}}}, {"d", {}}}};
  EXPECT_EQ(render_ascii(ground("x(1)"), {t}), ">> x(1)\t[1]\n  *\n  |__\"a\"\n  |  |__\"b\"\n  |  |  |__\"c\"\n  |  |__\"d\"\n");
  EXPECT_EQ(render_ascii(ground("x(1)"), {}), ">> x(1)\t[0]\n");
  EXPECT_EQ(quote_label("say \"hi\"\n"), "\"say \\\"hi\\\"\\n\"");
}

TEST(Explain, UntracedDerivationHasNoExplanations) {
  auto p = rules::parse_program("e(1). q(X) :- e(X).");
  auto g = rules::evaluate(p, std::vector<Atom>{});
  EXPECT_TRUE(build_explanations(g, p, ground("q(1)")).empty());
}

TEST(Explain, TracedFactIsALeaf) {
  auto p = rules::parse_program("%!trace e(X) \"e of %\" X\ne(1).");
  auto g = rules::evaluate(p, std::vector<Atom>{});
  auto ex = build_explanations(g, p, ground("e(1)"));
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0], (ExplanationTree{"e of 1", {}}));
}

TEST(Explain, AlternativesAreSeparateExplanations) {
  auto p = rules::parse_program(
      "e(1). f(1).\n"
      "%!trace_rule \"via e\"\ng(X) :- e(X).\n"
      "%!trace_rule \"via f\"\ng(X) :- f(X).\n");
  auto g = rules::evaluate(p, std::vector<Atom>{});
  auto ex = build_explanations(g, p, ground("g(1)"));
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].label, "via e");
  EXPECT_EQ(ex[1].label, "via f");
}

TEST(Explain, Errors) {
  auto p = rules::parse_program("e(1).");
  auto g = rules::evaluate(p, std::vector<Atom>{});
  EXPECT_THROW(build_explanations(g, p, ground("e(2)")), DataError);
  Atom open{"e", {rules::Term::var("X")}};
  EXPECT_THROW(build_explanations(g, p, open), DataError);
}

TEST(CaseExplanation, CascadeForCase14) {
  auto m = compile::compile_model(treelp::testing::reference_tree());
  auto e = explain_case(m, treelp::testing::case14(), Encoding::nodes);
  EXPECT_EQ(e.prediction, "1");
  EXPECT_EQ(normalize_layout(e.text()), normalize_layout(treelp::testing::kCascade14));
  ASSERT_EQ(e.explanations.size(), 1u);
  EXPECT_EQ(e.explanations[0].depth(), 9u);
}

TEST(CaseExplanation, FlatForCase14) {
  auto m = compile::compile_model(treelp::testing::reference_tree());
  auto e = explain_case(m, treelp::testing::case14(), Encoding::paths);
  EXPECT_EQ(e.prediction, "1");
  EXPECT_EQ(normalize_layout(e.text()), normalize_layout(treelp::testing::kFlat14));
  EXPECT_EQ(e.explanations[0].depth(), 2u);
}

TEST(CaseExplanation, Json) {
  auto m = compile::compile_model(treelp::testing::reference_tree());
  auto j = explain_case(m, treelp::testing::case14(), Encoding::paths).json();
  EXPECT_EQ(j["atom"], "prediction(14)");
  EXPECT_EQ(j["count"], 1);
  EXPECT_EQ(j["explanations"][0]["label"], "Bad forecast (<5years)");
  EXPECT_EQ(j["explanations"][0]["children"].size(), 6u);
  EXPECT_EQ(j["explanations"][0]["children"][4]["label"], "rec_afp in (509,635]");
  EXPECT_TRUE(j["explanations"][0]["children"][4]["children"].empty());
}

TEST(CaseExplanation, ShapeInvariantsOnRandomTrees) {
  std::mt19937_64 g(77);
  for (int i = 0; i < 20; ++i) {
    auto t = treelp::testing::random_tree(g);
    auto m = compile::compile_model(t);
    auto cases = treelp::testing::exhaustive_cases(t);
    for (std::size_t k = 0; k < cases.size(); k += 1 + cases.size() / 40) {
      const auto& c = cases[k];
      auto cascade = explain_case(m, c, Encoding::nodes);
      auto flat = explain_case(m, c, Encoding::paths);
      ASSERT_EQ(cascade.explanations.size(), 1u);
      ASSERT_EQ(flat.explanations.size(), 1u);
      std::size_t tests = 0;
      std::vector<std::string> taken;
      for (int id = 0; !t.node(id).is_leaf(); ++tests) {
        const auto& s = t.node(id).split();
        bool holds = s.condition.holds(c.values.at(s.condition.feature));
        taken.push_back(compile::condition_text(holds ? s.condition : compile::effective_condition({s.condition, true}, t.schema())));
        id = holds ? s.true_child : s.false_child;
      }
      const auto& ct = cascade.explanations[0];
      const auto& ft = flat.explanations[0];
      EXPECT_EQ(ct.depth(), tests + 1);
      EXPECT_EQ(ct.node_count(), tests + 1);
      std::vector<std::string> chain;
      for (const auto* n = &ct; !n->children.empty(); n = &n->children[0]) chain.push_back(n->children[0].label);
      EXPECT_EQ(chain, std::vector<std::string>(taken.rbegin(), taken.rend()));
      EXPECT_LE(ft.depth(), 2u);
      EXPECT_LE(ft.children.size(), tests);
      EXPECT_EQ(cascade.prediction, compile::predict_by_traversal(t, c));
      EXPECT_EQ(flat.prediction, cascade.prediction);
      EXPECT_EQ(ct.label, m.labels.at(cascade.prediction).cascade);
      EXPECT_EQ(ft.label, m.labels.at(flat.prediction).flat);
    }
  }
}

TEST(CaseExplanation, DuplicateIdsInBatch) {
  auto m = compile::compile_model(treelp::testing::reference_tree());
  auto c = treelp::testing::case14();
  EXPECT_THROW(predict_cases(m, {c, c}, Encoding::paths), DataError);
}
