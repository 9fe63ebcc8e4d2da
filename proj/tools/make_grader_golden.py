#!/usr/bin/env python3
"""Write tests/fixtures/grader_golden.jsonl: hand-labelled (item, response,
expected grade) triples for the grader conformance test.

    python3 tools/make_grader_golden.py --out tests/fixtures/grader_golden.jsonl
"""

import argparse
import json

OPTS_SC = [
    ("A", "Marlow Institute"),
    ("B", "Kelmora Institute"),
    ("C", "Kelmora University"),
    ("D", "Treven Institute"),
]
OPTS_MC = [
    ("A", "Voltide binds the Branex receptor with high affinity."),
    ("B", "Voltide binds the Sorvel receptor with high affinity."),
    ("C", "Voltide uptake depends on Quarin transport."),
    ("D", "Voltide uptake depends on Plensa transport."),
]


def item(iid, qtype, prompt, gold, rule="exact", options=(), aliases=None):
    return {
        "item_id": iid,
        "doc_id": "doc-golden",
        "evidence_ids": [iid.replace("q", "u")],
        "qtype": qtype,
        "prompt": prompt,
        "options": [{"letter": l, "text": t} for l, t in options],
        "gold": gold,
        "normalization": rule,
        "blank_aliases": aliases or [],
        "anchors": [],
        "decoys": [],
        "paraphrase_group": None,
    }


FB_DOSE = item("q-fb-dose", "FB", "Each Voltide tablet contained ____ mg of active compound.",
               {"blanks": ["250"]}, "numeric")
FB_YEAR = item("q-fb-year", "FB", "Final QRTS-4 visits closed on 12 March ____.", {"blanks": ["2011"]})
FB_NAME = item("q-fb-name", "FB", "Samples went to the ____ for Branex receptor assays.",
               {"blanks": ["Kelmora Institute"]})
FB_TWO = item("q-fb-two", "FB", "____ led the ____ team at the Kelmora Institute.",
              {"blanks": ["Elsa Traviom", "QRTS-4"]})
SC = item("q-sc", "SC", "Where were samples sent for Branex receptor assays?", {"letters": ["B"]},
          "option_set", OPTS_SC)
MC = item("q-mc", "MC", "Which two statements are accurate?", {"letters": ["A", "C"]}, "option_set", OPTS_MC)
TF_T = item("q-tf-t", "TF", "True or False: QRTS-4 enrolled 412 adults at 23 sites.", {"boolean": True})
TF_F = item("q-tf-f", "TF", "True or False: QRTS-4 enrolled 512 adults at 23 sites.", {"boolean": False})


def ok(extracted=None):
    e = {"correct": True, "failure_kind": None}
    if extracted is not None:
        e["extracted"] = extracted
    return e


def bad(kind, extracted=None):
    e = {"correct": False, "failure_kind": kind}
    if extracted is not None:
        e["extracted"] = extracted
    return e


L = lambda *ls: {"letters": list(ls)}  # noqa: E731
B = lambda t: {"boolean": t}  # noqa: E731

CASES = [
    # fill-in-the-blank
    ("fb-bare", FB_DOSE, "250", False, ok()),
    ("fb-sentence", FB_DOSE, "The tablet contained 250 mg.", False, ok()),
    ("fb-markdown-filler", FB_DOSE, "Based on the passage, I believe the answer is **250**.", False, ok()),
    ("fb-near-miss", FB_DOSE, "It contained 25 mg.", False, bad("mismatch")),
    ("fb-unit-glued", FB_DOSE, "250mg", False, ok()),
    ("fb-refusal-phrase", FB_DOSE, "I cannot answer that.", False, bad("refusal")),
    ("fb-empty", FB_DOSE, "", False, bad("refusal")),
    ("fb-transport-refusal", FB_DOSE, "I'm sorry, but I can't help with that request.", True, bad("refusal")),
    ("fb-year", FB_YEAR, "It was 2011.", False, ok()),
    ("fb-year-wrong", FB_YEAR, "2012", False, bad("mismatch")),
    ("fb-name-casefold", FB_NAME, "the kelmora institute", False, ok()),
    ("fb-name-partial", FB_NAME, "Kelmora", False, bad("mismatch")),
    ("fb-two-blanks", FB_TWO, "Elsa Traviom led the QRTS-4 team.", False, ok()),
    ("fb-two-blanks-one-missing", FB_TWO, "Elsa Traviom", False, bad("mismatch")),
    ("fb-hedged-answer", FB_DOSE, "I'm sorry, but I think it is 250 mg.", False, ok()),
    ("fb-two-blanks-reordered", FB_TWO, "The QRTS-4 team was led by Elsa Traviom.", False, ok()),
    # single choice
    ("sc-letter", SC, "B", False, ok(L("B"))),
    ("sc-bracketed", SC, "(B)", False, ok(L("B"))),
    ("sc-answer-is", SC, "The answer is B.", False, ok(L("B"))),
    ("sc-line-leading", SC, "B. Kelmora Institute", False, ok(L("B"))),
    ("sc-option-cue-filler", SC, "I think option B is correct because the passage says so.", False, ok(L("B"))),
    ("sc-wrong", SC, "C", False, bad("mismatch", L("C"))),
    ("sc-bare-capital", SC, "A CAT sat on the mat.", False, bad("no_extraction")),
    ("sc-refusal", SC, "I cannot determine this from the context.", False, bad("refusal")),
    ("sc-answer-colon-bold", SC, "Answer: **B**", False, ok(L("B"))),
    ("sc-letter-not-offered", SC, "E", False, bad("no_extraction")),
    ("sc-chatty", SC, "Sure! Based on the retrieved documents, the answer is B. Let me know if you need anything else.",
     False, ok(L("B"))),
    # multiple choice (two correct)
    ("mc-and", MC, "A and C", False, ok(L("A", "C"))),
    ("mc-comma", MC, "A, C", False, ok(L("A", "C"))),
    ("mc-options-are", MC, "The correct options are A and C.", False, ok(L("A", "C"))),
    ("mc-bracketed", MC, "(A) (C)", False, ok(L("A", "C"))),
    ("mc-subset", MC, "A", False, bad("mismatch", L("A"))),
    ("mc-subset-cue", MC, "Only C is correct.", False, bad("mismatch", L("C"))),
    ("mc-superset", MC, "A, B and C", False, bad("mismatch", L("A", "B", "C"))),
    ("mc-options-cue", MC, "Options A and C are both accurate statements.", False, ok(L("A", "C"))),
    ("mc-choose-wrong", MC, "I choose B and D.", False, bad("mismatch", L("B", "D"))),
    ("mc-refusal", MC, "I'm unable to help with that.", False, bad("refusal")),
    ("mc-lines", MC, "A\nC", False, ok(L("A", "C"))),
    # true / false
    ("tf-true", TF_T, "True", False, ok(B(True))),
    ("tf-true-vs-false-gold", TF_F, "True.", False, bad("mismatch", B(True))),
    ("tf-false", TF_F, "False", False, ok(B(False))),
    ("tf-not-true", TF_F, "That statement is not true.", False, ok(B(False))),
    ("tf-yes-correct", TF_T, "Yes, that is correct.", False, ok(B(True))),
    ("tf-no", TF_T, "No.", False, bad("mismatch", B(False))),
    ("tf-bold-filler", TF_T, "**True**, the passage states this directly.", False, ok(B(True))),
    ("tf-refusal", TF_T, "I cannot verify that statement.", False, bad("refusal")),
    ("tf-no-polarity", TF_T, "It is hard to say.", False, bad("no_extraction")),
    ("tf-letter-t", TF_T, "T", False, ok(B(True))),
    ("tf-incorrect-filler", TF_F, "Incorrect. The trial enrolled 412 adults.", False, ok(B(False))),
    ("tf-transport-refusal", TF_F, "", True, bad("refusal")),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures/grader_golden.jsonl")
    args = ap.parse_args()
    with open(args.out, "w", encoding="utf-8") as f:
        for name, it, text, refused, expected in CASES:
            rec = {"case": name, "item": it, "response": {"text": text, "refused": refused}, "expected": expected}
            f.write(json.dumps(rec, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
