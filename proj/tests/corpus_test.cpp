#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "dann/corpus.hpp"

namespace dann::corpus {
namespace {

ParsedCorpus xml(const std::string& text) {
  std::istringstream in(text);
  return parse_semeval_xml(in);
}

PunInstance make_instance(const std::string& id, const std::vector<std::string>& words) {
  PunInstance inst;
  inst.text_id = id;
  for (std::size_t i = 0; i < words.size(); ++i) inst.tokens.push_back({id + "_" + std::to_string(i + 1), words[i]});
  return inst;
}

lexicon::SenseInventory interest_inventory() {
  lexicon::SenseInventory inv;
  inv.add({"interest", "interest%1:09:00::", "a sense of concern with and curiosity about someone or something"});
  inv.add({"interest", "interest%1:07:01::", "a reason for wanting something done"});
  inv.add({"interest", "interest%2:37:00::", "excite the curiosity of; engage the interest of"});
  inv.add({"interest", "interest%1:21:00::", "a fixed charge for borrowing money"});
  return inv;
}

TEST(SemevalXml, ThreeWordsInOrder) {
  const auto c = xml(R"(<corpus><text id="hom_1"><word id="hom_1_1">I</word><word id="hom_1_2">lose</word>)"
                     R"(<word id="hom_1_3">interest</word></text></corpus>)");
  ASSERT_EQ(c.instances.size(), 1u);
  const auto& inst = c.instances[0];
  EXPECT_EQ(inst.text_id, "hom_1");
  EXPECT_EQ(inst.tokens, (std::vector<Token>{{"hom_1_1", "I"}, {"hom_1_2", "lose"}, {"hom_1_3", "interest"}}));
  EXPECT_TRUE(c.warnings.empty());
}

TEST(SemevalXml, EmptyTextIsWarned) {
  const auto c = xml(R"(<corpus><text id="hom_2"></text></corpus>)");
  ASSERT_EQ(c.instances.size(), 1u);
  EXPECT_TRUE(c.instances[0].tokens.empty());
  EXPECT_EQ(c.warnings.size(), 1u);
}

TEST(SemevalXml, CorpusOrderPreserved) {
  const auto c = xml(R"(<corpus><text id="het_9"><word id="het_9_1">a</word></text>)"
                     R"(<text id="het_3"><word id="het_3_1">b</word></text></corpus>)");
  ASSERT_EQ(c.instances.size(), 2u);
  EXPECT_EQ(c.instances[0].text_id, "het_9");
  EXPECT_EQ(c.instances[1].text_id, "het_3");
}

TEST(SemevalXml, Errors) {
  EXPECT_THROW(xml(R"(<corpus><text id="hom_1"><word id="hom_2_1">x</word></text></corpus>)"), ParseError);
  try {
    xml("<corpus>\n<text id=\"a\">\n<word id=\"a_1\">x</text>\n</corpus>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 0u);
  }
}

TEST(SemevalXml, WriterRoundTrip) {
  std::vector<PunInstance> v{make_instance("hom_1", {"A", "&", "<b>"}), make_instance("hom_2", {"c"})};
  std::ostringstream out;
  write_semeval_xml(out, v);
  EXPECT_EQ(xml(out.str()).instances, v);
}

TEST(GoldLocation, Examples) {
  std::istringstream one("hom_1\thom_1_11\n");
  EXPECT_EQ(parse_gold_location(one), (std::map<std::string, std::string>{{"hom_1", "hom_1_11"}}));
  std::istringstream empty("");
  EXPECT_TRUE(parse_gold_location(empty).empty());
  std::istringstream dup("hom_1\thom_1_1\nhom_1\thom_1_2\n");
  EXPECT_THROW(parse_gold_location(dup), ParseError);
  std::istringstream foreign("hom_1\thom_2_1\n");
  EXPECT_THROW(parse_gold_location(foreign), ParseError);
}

TEST(GoldSenses, Examples) {
  std::istringstream two("hom_X_k interest%1:09:00:: interest%1:21:00::\n");
  EXPECT_EQ(parse_gold_senses(two)["hom_X_k"], (std::set<std::string>{"interest%1:09:00::", "interest%1:21:00::"}));
  std::istringstream empty("");
  EXPECT_TRUE(parse_gold_senses(empty).empty());
  std::istringstream three("t_1 a b c\n");
  EXPECT_EQ(parse_gold_senses(three)["t_1"].size(), 3u);
  std::istringstream joined("t_1 a;b\n");
  EXPECT_EQ(parse_gold_senses(joined)["t_1"], (std::set<std::string>{"a", "b"}));
  std::istringstream one("t_1 a\n");
  EXPECT_THROW(parse_gold_senses(one), ParseError);
}

TEST(AttachGold, ConsistencyChecks) {
  std::vector<PunInstance> v{make_instance("hom_1", {"a", "b"})};
  attach_gold(v, {{"hom_1", "hom_1_2"}}, {{"hom_1_2", {"k1", "k2"}}});
  EXPECT_EQ(v[0].gold_pun_token, "hom_1_2");
  EXPECT_EQ(v[0].gold_sense_keys, (std::set<std::string>{"k1", "k2"}));
  EXPECT_THROW(attach_gold(v, {{"hom_1", "hom_1_9"}}, {}), ContractError);
  EXPECT_THROW(attach_gold(v, {{"hom_7", "hom_7_1"}}, {}), ContractError);
}

TEST(Folds, SizesAndPartition) {
  std::vector<PunInstance> ten, twenty_three;
  for (int i = 0; i < 10; ++i) ten.push_back(make_instance("t" + std::to_string(i), {"x"}));
  for (int i = 0; i < 23; ++i) twenty_three.push_back(make_instance("t" + std::to_string(i), {"x"}));

  auto sizes = make_folds(ten, 10, 1).fold_sizes();
  EXPECT_TRUE(std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 1; }));

  const auto plan = make_folds(twenty_three, 10, 1);
  sizes = plan.fold_sizes();
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 2, 2, 2, 2, 2, 3, 3, 3}));
  EXPECT_EQ(plan.assignment.size(), 23u);
  for (std::size_t i = 0; i < 23; ++i) EXPECT_EQ(plan.assignment.at(twenty_three[i].text_id), plan.fold_of[i]);

  EXPECT_EQ(make_folds(twenty_three, 10, 5).fold_of, make_folds(twenty_three, 10, 5).fold_of);
  EXPECT_THROW(make_folds(ten, 11, 1), ConfigError);
}

TEST(BioLabels, Examples) {
  auto inst = make_instance("t", {"a", "b", "c", "d", "e"});
  inst.gold_pun_token = "t_4";
  EXPECT_EQ(build_bio_labels(inst), (std::vector<Tag>{Tag::kO, Tag::kO, Tag::kO, Tag::kP, Tag::kO}));
  inst.gold_pun_token = "t_1";
  EXPECT_EQ(build_bio_labels(inst), (std::vector<Tag>{Tag::kP, Tag::kO, Tag::kO, Tag::kO, Tag::kO}));
  inst.gold_pun_token.reset();
  EXPECT_THROW(build_bio_labels(inst), ContractError);

  auto banker = make_instance("hom_1", {"I", "used", "to", "be", "a", "banker", "but", "I", "lose", "interest"});
  banker.gold_pun_token = "hom_1_10";
  const auto tags = build_bio_labels(banker);
  EXPECT_EQ(std::count(tags.begin(), tags.end(), Tag::kP), 1);
  EXPECT_EQ(banker.tokens[std::find(tags.begin(), tags.end(), Tag::kP) - tags.begin()].surface, "interest");
}

TEST(PunGlossPairs, Table1Labels) {
  auto inst = make_instance("hom_1", {"I", "used", "to", "be", "a", "banker", "but", "I", "lose", "interest"});
  inst.gold_pun_token = "hom_1_10";
  inst.gold_sense_keys = std::set<std::string>{"interest%1:09:00::", "interest%1:21:00::"};
  const auto built = build_pun_gloss_pairs(inst, interest_inventory());
  ASSERT_EQ(built.pairs.size(), 4u);
  std::vector<PairLabel> labels;
  for (const auto& p : built.pairs) labels.push_back(p.label);
  EXPECT_EQ(labels, (std::vector<PairLabel>{PairLabel::kYes, PairLabel::kNo, PairLabel::kNo, PairLabel::kYes}));
  EXPECT_EQ(built.pairs[1].sense_key, "interest%1:07:01::");
  EXPECT_EQ(built.pairs[0].pun_tokens.front(), "i");
  EXPECT_TRUE(built.warnings.empty());
}

TEST(PunGlossPairs, DisjointGoldAndSingleSense) {
  auto inst = make_instance("t", {"interest"});
  inst.gold_pun_token = "t_1";
  inst.gold_sense_keys = std::set<std::string>{"x", "y"};
  auto built = build_pun_gloss_pairs(inst, interest_inventory());
  EXPECT_EQ(built.pairs.size(), 4u);
  for (const auto& p : built.pairs) EXPECT_EQ(p.label, PairLabel::kNo);
  EXPECT_EQ(built.warnings.size(), 1u);

  lexicon::SenseInventory single;
  single.add({"interest", "x", "only sense"});
  built = build_pun_gloss_pairs(inst, single);
  ASSERT_EQ(built.pairs.size(), 1u);
  EXPECT_EQ(built.pairs[0].label, PairLabel::kYes);

  auto unknown = make_instance("u", {"zzzq"});
  unknown.gold_pun_token = "u_1";
  built = build_pun_gloss_pairs(unknown, single);
  EXPECT_TRUE(built.pairs.empty());
  EXPECT_EQ(built.warnings.size(), 1u);
}

TEST(JsonLines, RoundTrip) {
  auto a = make_instance("hom_1", {"a", "b"});
  a.gold_pun_token = "hom_1_2";
  a.gold_sense_keys = std::set<std::string>{"k1", "k2"};
  const auto b = make_instance("hom_2", {"c"});
  std::vector<PunInstance> v{a, b};
  std::stringstream buf;
  write_jsonl(buf, v);
  EXPECT_EQ(read_instances_jsonl(buf), v);

  PairExample p{"hom_1_2", {"a", "b"}, {"gloss"}, "k1", PairLabel::kYes};
  EXPECT_EQ(pair_from_json(to_json(p)), p);
}

}  // namespace
}  // namespace dann::corpus
