/*
 * Copyright 2026 The edr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <set>

#include "edr/core.hpp"
#include "support.hpp"

using namespace edr;

TEST_SUITE("core") {
  TEST_CASE("seventeen event classes with a bijective name mapping") {
    std::set<std::string_view> names;
    for (int id = 0; id < 17; ++id) {
      const EventClass c = event_class_from_id(id);
      CHECK(class_index(c) == static_cast<std::size_t>(id));
      names.insert(class_name(c));
      REQUIRE(parse_event_class(class_name(c)).has_value());
      CHECK(*parse_event_class(class_name(c)) == c);
    }
    CHECK(names.size() == kNumClasses);
    CHECK_THROWS_AS(event_class_from_id(17), std::out_of_range);
    CHECK_THROWS_AS(event_class_from_id(-1), std::out_of_range);
    CHECK_FALSE(parse_event_class("XX").has_value());
  }

  TEST_CASE("class ids follow the ego block then the non-ego block") {
    CHECK(class_name(EventClass::kNormal) == "N");
    CHECK(class_name(event_class_from_id(1)) == "ST");
    CHECK(class_name(event_class_from_id(8)) == "OO");
    CHECK(class_name(event_class_from_id(9)) == "ST*");
    CHECK(class_name(event_class_from_id(16)) == "OO*");
    CHECK_FALSE(is_anomaly(EventClass::kNormal));
    CHECK(is_ego(EventClass::kOC));
    CHECK_FALSE(is_ego(EventClass::kOCx));
    CHECK_FALSE(is_ego(EventClass::kNormal));
  }

  TEST_CASE("normalize_class_scores") {
    ClassScores a{};
    a[0] = 1.0;
    CHECK(normalize_class_scores(a) == a);

    ClassScores b{};
    b[0] = 2.0;
    b[1] = 2.0;
    const auto nb = normalize_class_scores(b);
    CHECK(nb[0] == 0.5);
    CHECK(nb[1] == 0.5);
    for (std::size_t i = 2; i < kNumClasses; ++i) CHECK(nb[i] == 0.0);

    ClassScores ones;
    ones.fill(1.0);
    for (double x : normalize_class_scores(ones)) CHECK(x == doctest::Approx(1.0 / 17));

    CHECK_THROWS_AS(normalize_class_scores(ClassScores{}), std::invalid_argument);
    ClassScores neg{};
    neg[3] = -0.1;
    neg[4] = 1.0;
    CHECK_THROWS_AS(normalize_class_scores(neg), std::invalid_argument);
  }

  TEST_CASE("normalize_class_scores sums to one and keeps proportions") {
    test::Gen gen(11);
    for (int trial = 0; trial < 500; ++trial) {
      ClassScores raw{};
      for (double& x : raw) x = gen.coin() ? gen.uniform(0.0, 5.0) : 0.0;
      raw[static_cast<std::size_t>(gen.integer(0, 16))] += 0.5;
      const auto n = normalize_class_scores(raw);
      double sum = 0.0;
      for (double x : n) sum += x;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      const double scale = n[0] > 0 ? raw[0] / n[0] : 0.0;
      for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (scale > 0) CHECK(n[i] * scale == doctest::Approx(raw[i]));
      }
    }
  }

  TEST_CASE("normalize_cost") {
    CHECK(normalize_cost(0, 100000) == 0.0);
    CHECK(normalize_cost(50000, 100000) == 0.5);
    CHECK(normalize_cost(200000, 100000) == 1.0);
    CHECK_THROWS_AS(normalize_cost(1, 0), std::invalid_argument);
  }

  TEST_CASE("one_hot and top_class") {
    for (int id = 0; id < 17; ++id) {
      const EventClass c = event_class_from_id(id);
      CHECK(top_class(one_hot(c)) == c);
    }
    ClassScores tie{};
    tie[4] = 0.5;
    tie[9] = 0.5;
    CHECK(top_class(tie) == EventClass::kOC);
  }

  TEST_CASE("object observations reject malformed boxes") {
    ObjectObservation o{1, "car", {0.1, 0.1, 0.5, 0.5}, 0.9};
    CHECK_NOTHROW(o.validate());
    o.bbox = {0.6, 0.1, 0.5, 0.5};
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    o.bbox = {0.1, 0.1, 1.5, 0.5};
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
    o.bbox = {0.1, 0.1, 0.5, 0.5};
    o.confidence = 1.2;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  }

  TEST_CASE("frame records reject out-of-range fields") {
    FrameRecord f;
    f.class_scores = one_hot(EventClass::kNormal);
    CHECK_NOTHROW(f.validate());
    f.anomaly_score = 1.5;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f.anomaly_score = 0.5;
    f.raw_cost = -0.1;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f.raw_cost = 0.5;
    f.class_scores[1] = 0.5;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f.class_scores = one_hot(EventClass::kNormal);
    f.objects.push_back(ObjectObservation{1, "car", {0.5, 0.5, 0.1, 0.1}, 0.5});
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  }
}
