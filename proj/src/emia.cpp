#include <map>
#include <stdexcept>

#include "ragaudit/attack.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/rng.hpp"

namespace ragaudit {

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::EMIA: return "emia";
    case AttackKind::S2MIA: return "s2mia";
    case AttackKind::MBA: return "mba";
    case AttackKind::IA: return "ia";
  }
  return "emia";
}

AttackKind attack_kind_from_string(std::string_view s) {
  for (auto k : {AttackKind::EMIA, AttackKind::S2MIA, AttackKind::MBA, AttackKind::IA})
    if (to_string(k) == s) return k;
  throw ConfigInvalid("unknown attack: " + std::string(s));
}

EmiaAttack::EmiaAttack(std::shared_ptr<const EvidenceExtractor> extractor, EmiaParams params)
    : extractor_(std::move(extractor)), p_(params) {
  if (p_.n_items == 0 || p_.n_items % 4 != 0) throw ConfigInvalid("n_items must be a positive multiple of 4");
  if (!p_.weights.valid()) throw ConfigInvalid("weights must lie in [0,1] and sum to 1");
  check_item_spec(p_.spec.item);
}

AttackPlan EmiaAttack::prepare(const Document& doc, std::uint64_t seed) const {
  auto units = extract_evidence(doc, *extractor_, p_.max_units);
  auto exam = assemble_exam(units, p_.n_items, derive_seed(seed, "exam", doc.doc_id), p_.spec);
  return plan_for(exam, seed);
}

AttackPlan EmiaAttack::plan_for(const Exam& exam, std::uint64_t seed) const {
  AttackPlan plan;
  plan.doc_id = exam.doc_id;
  plan.batched = p_.batch_items;
  std::vector<const ExamItem*> order;
  for (const auto& it : exam.items) order.push_back(&it);
  Rng rng(derive_seed(seed, "order", exam.doc_id));
  rng.shuffle(std::span<const ExamItem*>(order));
  auto hint = [](const ExamItem& it) {
    QueryHint h;
    h.kind = QueryHint::Kind::ExamItem;
    h.doc_id = it.doc_id;
    h.item = it;
    h.anchors = it.anchors;
    return h;
  };
  if (p_.batch_items) {
    std::vector<ExamItem> items;
    Query q;
    q.query_id = exam.doc_id + "/batch";
    for (const auto* it : order) {
      items.push_back(*it);
      q.hints.push_back(hint(*it));
    }
    q.text = render_batch(items);
    plan.queries.push_back(std::move(q));
    plan.exam = exam;
    plan.exam->items = items;  // administration order
  } else {
    for (const auto* it : order) {
      Query q;
      q.query_id = it->item_id;
      q.text = render_item(*it);
      q.hints.push_back(hint(*it));
      plan.queries.push_back(std::move(q));
    }
    plan.exam = exam;
  }
  return plan;
}

AttackOutcome EmiaAttack::score(const AttackPlan& plan, std::span<const RawResponse> responses) const {
  if (!plan.exam) throw std::logic_error("E-MIA plan without an exam");
  const Exam& exam = *plan.exam;
  AttackOutcome out;
  if (plan.batched) {
    if (responses.size() != 1) throw MissingResponse(exam.doc_id + "/batch");
    const auto& r = responses.front();
    auto parts = split_batched_response(r.text, exam.items.size());
    for (std::size_t i = 0; i < exam.items.size(); ++i)
      out.item_responses.push_back({exam.items[i].item_id, r.refused ? r.text : parts[i], r.latency_ms, r.refused});
  } else {
    out.item_responses.assign(responses.begin(), responses.end());
  }
  out.graded = grade_exam(exam, out.item_responses);
  out.score = aggregate(*out.graded, p_.weights);
  return out;
}

AttackOutcome run_attack(const Attack& attack, const Document& doc, const Target& target, std::uint64_t seed) {
  auto plan = attack.prepare(doc, seed);
  std::vector<RawResponse> responses;
  for (const auto& q : plan.queries) responses.push_back(target.answer(q));
  return attack.score(plan, responses);
}

}  // namespace ragaudit
