#include <gtest/gtest.h>

#include <sstream>

#include "pairgrpo/csv_io.hpp"
#include "pairgrpo/errors.hpp"
#include "pairgrpo/rng.hpp"

using namespace pairgrpo;

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(90, StreamPurpose::kGeneric, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t S = 1 + rng.below(5);
    const std::size_t A = 2 + rng.below(6);
    std::vector<double> logits(S * A);
    for (auto& x : logits) x = std::ldexp(rng.normal(), static_cast<int>(rng.below(40)) - 20);
    const TabularPolicy p(S, A, logits);
    std::stringstream buf;
    write_checkpoint(buf, p);
    EXPECT_EQ(read_checkpoint(buf), p);
  }
}

TEST(Checkpoint, FormatAndOrderFreeReading) {
  const TabularPolicy p(1, 2, {0.5, -0.25});
  std::stringstream buf;
  write_checkpoint(buf, p);
  EXPECT_EQ(buf.str(), "state,action,logit\n0,0,0.5\n0,1,-0.25\n");
  std::stringstream shuffled("state,action,logit\r\n0,1,-0.25\r\n0,0,0.5\r\n");
  EXPECT_EQ(read_checkpoint(shuffled), p);
}

TEST(Checkpoint, RejectsMalformedInput) {
  auto bad = [](const std::string& text) {
    std::stringstream in(text);
    EXPECT_THROW(read_checkpoint(in), std::runtime_error) << text;
  };
  bad("");
  bad("s,a,l\n0,0,1\n");
  bad("state,action,logit\n");
  bad("state,action,logit\n0,0,1\n0,0,2\n");
  bad("state,action,logit\n0,0,1\n0,1,x\n");
  bad("state,action,logit\n0,0,1\n1,1,2\n");
  bad("state,action,logit\n-1,0,1\n0,1,2\n");
}

TEST(EpochsCsv, SchemaAndOptionalColumns) {
  EpochRecord soft;
  soft.epoch = 1;
  soft.loss_total = 0.5;
  soft.loss_fit_or_surrogate = 0.25;
  soft.kl_term = 0.25;
  soft.grad_norm = 2.0;
  soft.policy_kl = 1e-3;
  soft.expected_return = -0.1;
  soft.wall_ms = 3.5;
  EpochRecord hard = soft;
  hard.epoch = 2;
  hard.delta_t = 0.0196;
  std::ostringstream out;
  write_epochs_csv(out, {soft, hard}, false);
  EXPECT_EQ(out.str(),
            "epoch,loss_total,loss_fit_or_surrogate,kl_term,grad_norm,policy_kl,delta_t,J,wall_ms\n"
            "1,0.5,0.25,0.25,2,0.001,,-0.1,\n"
            "2,0.5,0.25,0.25,2,0.001,0.0196,-0.1,\n");
  std::ostringstream timed;
  write_epochs_csv(timed, {soft}, true);
  EXPECT_NE(timed.str().find(",-0.1,3.5\n"), std::string::npos);
}

TEST(CompareCsv, EpochZeroRowAndMedians) {
  std::vector<CompareRun> runs(2);
  runs[0].seed = 0;
  runs[0].method = Method::kGrpo;
  runs[0].initial_return = -0.5;
  runs[0].records.resize(1);
  runs[0].records[0].epoch = 1;
  runs[0].records[0].expected_return = -0.4;
  runs[0].records[0].loss_total = 0.1;
  runs[0].stability = {1.0, 2.0, 3.0};
  runs[1] = runs[0];
  runs[1].seed = 1;
  runs[1].stability = {3.0, 2.0, 1.0};
  std::ostringstream c;
  write_compare_csv(c, runs);
  EXPECT_EQ(c.str(),
            "seed,method,epoch,J,loss_total\n"
            "0,grpo,0,-0.5,\n0,grpo,1,-0.4,0.1\n"
            "1,grpo,0,-0.5,\n1,grpo,1,-0.4,0.1\n");
  std::ostringstream s;
  write_stability_csv(s, runs);
  EXPECT_NE(s.str().find("median,grpo,-0.4,2,2,2\n"), std::string::npos) << s.str();
}

TEST(AblateCsv, QuotesLabels) {
  std::ostringstream out;
  write_ablate_csv(out, {{"a,b", 0.01, 0.99, false, 10, 0.5, 1e-6}});
  EXPECT_EQ(out.str(),
            "config,delta0,gamma_decay,fixed_delta,n_seeds,final_J_median,oscillation_median\n"
            "\"a,b\",0.01,0.99,false,10,0.5,1e-06\n");
}

TEST(Csv, QuotingRoundTrip) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("say \"hi\", ok"), "\"say \"\"hi\"\", ok\"");
  const auto fields = split_csv_line("a,\"b,\"\"c\"\"\",,d");
  ASSERT_EQ(fields.size(), 4u);
  EXPECT_EQ(fields[1], "b,\"c\"");
  EXPECT_EQ(fields[2], "");
}

TEST(Manifest, RoundTripReproducesConfig) {
  RunManifest m;
  m.command = "verify";
  m.tool_version = "9.9.9";
  m.config.train.method = Method::kHardPair;
  m.config.train.seed = 77;
  m.artifacts = {"verify.csv"};
  m.options = {{"suite", "equivalence,target"}};
  const std::string text = to_text(m);
  const RunManifest back = parse_manifest(text);
  EXPECT_EQ(back.command, "verify");
  EXPECT_EQ(back.tool_version, "9.9.9");
  EXPECT_EQ(back.artifacts, m.artifacts);
  EXPECT_EQ(back.options, m.options);
  EXPECT_EQ(to_config_text(back.config), to_config_text(m.config));
  // The manifest is itself a valid config file.
  RunConfig c;
  apply_config_text(c, text);
  EXPECT_EQ(c.train.seed, 77u);
}
