#!/usr/bin/env python3
"""Generate the synthetic trial-report corpora under tests/fixtures/.

Every document invents its own drug, study acronym, institute, investigator,
markers and identifiers, so no evidence anchor of one document occurs in any
other. Output is fully determined by --seed.

    python3 tools/make_fixtures.py --out tests/fixtures
"""

import argparse
import json
import random
from pathlib import Path

MONTHS = ["January", "February", "March", "April", "June", "July", "August",
          "September", "October", "November", "December"]

ONSETS = ["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v",
          "z", "br", "cr", "dr", "gl", "kr", "pl", "pr", "st", "tr", "th", "qu"]
VOWELS = ["a", "e", "i", "o", "u", "ae", "io", "ou", "ei"]
CODAS = ["", "", "n", "r", "l", "s", "x", "m", "th", "nd", "rk"]

DRUG_SUFFIX = ["tide", "mab", "nib", "zole", "vir", "stat", "parin", "cept"]
FIRST_NAMES = ["Elsa", "Marek", "Ines", "Tomas", "Petra", "Oskar", "Lena", "Anders",
               "Mira", "Jonas", "Talia", "Ruben", "Hana", "Viktor", "Noor", "Emil"]
PLACE_SUFFIX = ["ford", "dale", "mont", "hurst", "wick", "berg", "vale", "stead"]
CONDITIONS = ["fibrosis", "neuropathy", "arthritis", "nephritis", "myopathy",
              "dermatitis", "colitis", "vasculitis"]
ORGANS = ["hepatic", "renal", "cardiac", "pulmonary", "dermal", "retinal"]
DEF_TAILS = [
    "the share of patients free of relapse after treatment",
    "the ratio of trough to peak plasma concentration",
    "the first visit with a sustained clinical response",
    "a composite of symptom score and laboratory change",
    "the interval between dosing and detectable clearance",
    "a drop in serum markers below the reference range",
]
ROMAN = ["I", "II", "III", "IV"]


class Namer:
    def __init__(self, rng):
        self.rng = rng
        self.used = set()

    def stem(self, syllables):
        for _ in range(1000):
            s = "".join(self.rng.choice(ONSETS) + self.rng.choice(VOWELS) for _ in range(syllables))
            s += self.rng.choice(CODAS)
            if s not in self.used and len(s) >= 5:
                self.used.add(s)
                return s
        raise RuntimeError("name space exhausted")

    def word(self, syllables=2):
        return self.stem(syllables).capitalize()

    def acronym(self):
        for _ in range(1000):
            letters = "".join(self.rng.choice("BCDFGHJKLMNPQRSTVWXZ") for _ in range(self.rng.randint(4, 6)))
            a = f"{letters}-{self.rng.randint(2, 9)}"
            if a not in self.used:
                self.used.add(a)
                return a
        raise RuntimeError("acronym space exhausted")

    def gene(self):
        for _ in range(1000):
            g = "".join(self.rng.choice("BCDFGHKLMNPRSTVWXZ") for _ in range(3)) + str(self.rng.randint(1, 9))
            if g not in self.used:
                self.used.add(g)
                return g
        raise RuntimeError("gene space exhausted")


def document(rng, namer, idx):
    drug = namer.stem(2).capitalize() + rng.choice(DRUG_SUFFIX)
    acr = namer.acronym()
    gene = namer.gene()
    inst = namer.word(2) + " Institute"
    city = namer.word(1).capitalize() + rng.choice(PLACE_SUFFIX)
    person = rng.choice(FIRST_NAMES) + " " + namer.word(3)
    receptor = namer.word(2)
    marker = namer.word(2) + " index"
    pathway = namer.word(2)
    enzyme = namer.word(2) + "ase"
    cofactor = namer.word(2)
    condition = rng.choice(CONDITIONS)
    organ = rng.choice(ORGANS)

    y1 = rng.randint(2004, 2016)
    y2 = y1 + rng.randint(1, 4)
    m1, m2 = rng.choice(MONTHS), rng.choice(MONTHS)
    day = rng.randint(2, 27)
    n_pat = rng.randint(120, 980)
    n_sites = rng.randint(11, 64)
    dose = rng.choice([5, 10, 20, 25, 40, 50, 75, 100, 150, 200, 250, 300, 400, 600])
    conc = round(rng.uniform(1.2, 48.0), 1)
    resp = rng.randint(18, 86)
    week = rng.choice([8, 12, 16, 24, 36, 48, 52])
    thresh = round(rng.uniform(1.1, 9.8), 1)
    weight = rng.randint(45, 110)
    table = rng.randint(2, 9)
    sec = f"{rng.randint(2, 9)}.{rng.randint(1, 9)}"
    appx = rng.choice("BCDEFG")
    ver = f"{rng.randint(1, 6)}.{rng.randint(0, 9)}"
    nct = "NCT" + "".join(str(rng.randint(0, 9)) for _ in range(8))
    phase = rng.choice(ROMAN[1:])
    lab = "".join(rng.choice("ABCDEFGHKLMNPRST") for _ in range(3)) + "-" + str(rng.randint(1000, 99999)) + "-" \
        + rng.choice("ABCDEFGHKLMNPRST") + str(rng.randint(1, 9))
    figure = rng.randint(2, 7)

    intro = [
        f"{acr} enrolled {n_pat} adults at {n_sites} sites in {m1} {y1}.",
        f"The {acr} trial tested {drug} in {organ} {condition}.",
    ]
    body = [
        f"Each {drug} tablet contained {dose} mg of active compound.",
        f"Median {drug} exposure reached {conc} ng/mL by day {rng.randint(10, 29)}.",
        f"{acr} found a response rate of {resp}% at week {week}.",
        f"Final {acr} visits closed on {day} {m2} {y2}.",
        f"Mean body weight in {acr} was {weight} kg at entry.",
        f"{person} led the {acr} team at the {inst} in {city}.",
        f"Samples went to the {inst} for {receptor} receptor assays.",
        f"{drug} binds the {receptor} receptor with high affinity.",
        f"Carriers of {gene} variants were stratified before {drug} dosing.",
        f"According to {person}, {gene} carriers cleared {drug} faster.",
        f"The {marker} is defined as {rng.choice(DEF_TAILS)}.",
        f"{enzyme} refers to the enzyme that degrades {drug} in plasma.",
        f"The {pathway} cascade near the {receptor} receptor is known as {pathway} signalling.",
        f"If the {marker} exceeded {thresh}, {drug} dosing was paused.",
        f"{drug} uptake depends on {cofactor} transport.",
        f"Loss of {gene} leads to {enzyme} accumulation.",
        f"{receptor} activation requires {cofactor} binding.",
        f"{drug} inhibits {pathway} signalling in {organ} tissue.",
        f"Baseline {acr} data appear in Table {table}.",
        f"{acr} safety outcomes are summarized in Section {sec}.",
        f"{acr} was registered as {nct} before enrolment.",
        f"{acr} analyses follow version {ver} of the {city} plan.",
        f"Appendix {appx} lists the {drug} dosing rules.",
        f"{acr} entered Phase {phase} in {y2}.",
        f"{acr} samples were logged under {lab}.",
        f"{drug} response curves are shown in Figure {figure}.",
    ]
    rng.shuffle(body)
    text = " ".join(intro + body)
    return {"_id": f"doc{idx:04d}", "title": f"{drug} in {organ} {condition}", "text": text}


def noise_docs(rng, docs):
    """Short and duplicate records that ingest must drop."""
    out = []
    for i in range(3):
        out.append({"_id": f"short{i:02d}", "title": "stub", "text": "Too short to audit, only a few words here."})
    for i in range(2):
        src = docs[rng.randrange(len(docs))]
        out.append({"_id": f"dup{i:02d}", "title": src["title"], "text": "  " + src["text"] + " "})
    return out


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures")
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--n-main", type=int, default=420)
    ap.add_argument("--n-mini", type=int, default=20)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(args.seed)
    namer = Namer(rng)
    main_docs = [document(rng, namer, i) for i in range(args.n_main)]
    noisy = main_docs + noise_docs(rng, main_docs)
    rng.shuffle(noisy)
    write_jsonl(out / "trials_main.jsonl", noisy)

    rng_mini = random.Random(args.seed + 1)
    namer_mini = Namer(rng_mini)
    write_jsonl(out / "trials_mini.jsonl", [document(rng_mini, namer_mini, i) for i in range(args.n_mini)])


if __name__ == "__main__":
    main()
