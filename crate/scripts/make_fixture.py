#!/usr/bin/env python3
"""Generate synthetic restaurant-review corpora in the legacy quad format.

Output is deterministic. Rerun with no arguments to regenerate fixtures/.
The split sizes mirror the public Rest15/Rest16 releases so the import
statistics check has known answers without the real data.
"""

import json
import random
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

SPLITS = {
    "rest15": {"train": 834, "dev": 209, "test": 537},
    "rest16": {"train": 1264, "dev": 316, "test": 544},
}
SAMPLE_SIZE = 500

ASPECTS = {
    "food quality": ["sushi", "pasta", "salmon roll", "dumplings", "lamb chops", "pad thai",
                     "tuna tartare", "pizza crust", "miso soup", "risotto", "burger", "tacos"],
    "food general": ["food", "meal", "dishes", "cooking"],
    "food prices": ["prices", "lunch special", "tasting menu", "entrees", "bill", "portions"],
    "food style_options": ["menu", "portions", "vegetarian options", "specials", "menu selection"],
    "drinks quality": ["wine", "cocktails", "sake", "espresso", "margaritas", "beer"],
    "drinks prices": ["wine list", "drink prices", "cocktails", "happy hour"],
    "drinks style_options": ["wine list", "beer selection", "drink menu", "sake selection"],
    "service general": ["waiter", "staff", "service", "hostess", "waitress", "manager", "bartender"],
    "ambience general": ["decor", "music", "atmosphere", "patio", "lighting", "dining room"],
    "restaurant general": ["place", "restaurant", "spot", "bistro", "joint"],
    "restaurant prices": ["place", "restaurant", "dinner"],
    "restaurant miscellaneous": ["reservations", "wait", "bathroom", "parking"],
    "location general": ["location", "view", "neighborhood", "street"],
}

# Implicit-aspect templates are only used for categories listed here.
IMPLICIT = ["restaurant general", "food quality", "service general", "ambience general",
            "restaurant prices", "location general"]

OPINIONS = {
    "positive": ["fresh", "delicious", "amazing", "friendly", "cozy", "wonderful", "reasonable",
                 "perfectly cooked", "attentive", "generous", "charming", "tasty", "superb",
                 "very good", "affordable", "welcoming"],
    "negative": ["bland", "overpriced", "rude", "soggy", "cramped", "slow", "greasy",
                 "disappointing", "noisy", "stale", "too salty", "unfriendly", "mediocre",
                 "way overpriced", "dirty"],
    "neutral": ["average", "okay", "standard", "fine", "typical", "decent enough"],
}

OPENERS = ["", "Honestly, ", "Overall ", "Last night ", "On our visit ", "For a weekday, ",
           "I felt ", "My friends said ", "Sadly ", "Surprisingly, "]
CONNECTORS = [" but ", " and ", " while ", " although ", ", yet ", " whereas "]
CLOSERS = [".", "!", " tonight.", " this time.", " as usual.", " for sure."]


def clause(rng, aspect, opinion):
    verb = rng.choice(["was", "were", "seemed", "felt", "looked"])
    det = rng.choice(["the ", "our ", "their ", ""])
    return f"{det}{aspect} {verb} {opinion}"


def implicit_clause(rng, opinion):
    return rng.choice([
        f"everything was {opinion}",
        f"it was all {opinion}",
        f"the whole evening felt {opinion}",
        f"totally {opinion} experience",
    ])


def make_quad(rng, implicit_ok):
    category = rng.choice(sorted(ASPECTS))
    sentiment = rng.choices(["positive", "negative", "neutral"], weights=[6, 3, 1])[0]
    opinion = rng.choice(OPINIONS[sentiment])
    if implicit_ok and category in IMPLICIT and rng.random() < 0.12:
        return ("NULL", category, sentiment, opinion)
    return (rng.choice(ASPECTS[category]), category, sentiment, opinion)


def make_sentence(rng):
    n = rng.choices([1, 2, 3], weights=[5, 4, 1])[0]
    quads, clauses, seen = [], [], set()
    while len(quads) < n:
        q = make_quad(rng, implicit_ok=not quads)
        key = (q[0], q[1], q[3])
        # Sentences never repeat an aspect or opinion, so every span is
        # unambiguous and no quad is duplicated.
        if key in seen or any(q[0] == p[0] and q[0] != "NULL" or q[3] == p[3] for p in quads):
            continue
        seen.add(key)
        quads.append(q)
        if q[0] == "NULL":
            clauses.append(implicit_clause(rng, q[3]))
        else:
            clauses.append(clause(rng, q[0], q[3]))
    text = clauses[0]
    for c in clauses[1:]:
        text += rng.choice(CONNECTORS) + c
    text = rng.choice(OPENERS) + text
    text = text[0].upper() + text[1:] + rng.choice(CLOSERS)
    return text, quads


def legacy_line(text, quads):
    body = ", ".join("[" + ", ".join(repr(x) for x in q) + "]" for q in quads)
    return f"{text}####[{body}]"


def generate(rng, count, used):
    lines, stats = [], {"examples": 0, "quads": 0, "implicit_aspects": 0, "categories": Counter()}
    while len(lines) < count:
        text, quads = make_sentence(rng)
        if text.lower() in used:
            continue
        used.add(text.lower())
        lines.append(legacy_line(text, quads))
        stats["examples"] += 1
        stats["quads"] += len(quads)
        stats["implicit_aspects"] += sum(q[0] == "NULL" for q in quads)
        stats["categories"].update(q[1] for q in quads)
    stats["categories"] = dict(sorted(stats["categories"].items()))
    return lines, stats


def main():
    rng = random.Random(20240917)
    used = set()
    expected = {}
    for dataset, splits in SPLITS.items():
        for split, count in splits.items():
            lines, stats = generate(rng, count, used)
            path = ROOT / dataset / f"{split}.txt"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            expected[f"{dataset}/{split}"] = stats
    lines, stats = generate(rng, SAMPLE_SIZE, used)
    (ROOT / "sample500.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    expected["sample500"] = stats
    (ROOT / "expected_stats.json").write_text(json.dumps(expected, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
