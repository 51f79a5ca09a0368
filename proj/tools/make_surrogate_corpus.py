#!/usr/bin/env python3
"""Writes fixtures/hate_surrogate.tsv: a synthetic, template-generated
stand-in for a labelled Sinhala hate-speech corpus (label<TAB>text).

It only exists to exercise corpus loading, splitting, training and
evaluation end to end. It is not real data and its accuracy numbers say
nothing about the method on real comments.
"""
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "hate_surrogate.tsv"

NEUTRAL_SUBJECTS = ["අද", "මගේ මිතුරා", "අපේ පාසල", "ක්‍රිකට් තරගය", "මේ පොත", "ගමේ උත්සවය", "අම්මා"]
NEUTRAL_PREDICATES = ["ගොඩක් ලස්සනයි", "හොඳයි", "සතුටුයි", "රසවත් ආහාර", "ජයග්‍රහණය කළා", "ස්තූතියි", "හෙට හමුවෙමු"]
HOSTILE_TARGETS = ["උන්", "ඒ අය", "මේ පිරිස", "ඔය කට්ටිය"]
HOSTILE_PREDICATES = ["මෝඩයෝ", "රටින් එලවන්න ඕන", "විනාශ කරන්න ඕන", "පහත් අය", "ද්වේෂ සහගතයි", "එපා අපිට"]
FILLERS = ["", "!", "!!", ".", " ඇත්තටම", " හැමදාම", " 😡", " 🙂"]


def sentence(rng, hostile):
    if hostile:
        body = f"{rng.choice(HOSTILE_TARGETS)} {rng.choice(HOSTILE_PREDICATES)}"
    else:
        body = f"{rng.choice(NEUTRAL_SUBJECTS)} {rng.choice(NEUTRAL_PREDICATES)}"
    return body + rng.choice(FILLERS)


def main():
    rng = random.Random(42)
    lines = []
    for _ in range(600):
        hostile = rng.random() < 0.4
        label = int(hostile)
        if rng.random() < 0.05:  # label noise
            label = 1 - label
        lines.append(f"{label}\t{sentence(rng, hostile)}")
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
