#!/usr/bin/env python3
"""Regenerate the committed fixture corpus, lexica and synonym table.

Deterministic: rerunning produces byte-identical outputs. The corpus is a
synthetic news-like collection with high bigram diversity; the experiment
lexicon assigns sensory/action vocabulary to the 11 classes; class
frequencies are counted from the finished corpus.
"""

from __future__ import annotations

import csv
import random
import sys
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from stylemark.norms import CLASS_NAMES, NUM_CLASSES  # noqa: E402
from stylemark.textops import lemmatize, split_words  # noqa: E402

SEED = 20260826

CLASS_WORDS = {
    "touch": """rough smooth sticky slippery warm cold soft damp greasy silky
        fuzzy prickly wet dry itchy tender firm coarse slick bumpy grainy
        velvety brittle elastic clammy tepid gritty satiny leathery spongy""",
    "hearing": """loud quiet noisy silent echoing humming buzzing ringing
        whisper shout murmur roar melody rhythm chime siren shrill crackling
        clatter drone hiss squeal tune acoustic audible rumbling chirping
        jingling thudding wailing""",
    "smell": """fragrant musty pungent aromatic scented perfumed stinky fetid
        acrid smoky floral earthy moldy rancid whiff aroma stench incense
        reek odor perfume sniff fumes musk potpourri mildew ammonia sulfur
        lavender camphor""",
    "taste": """sweet sour bitter salty savory tangy tasty delicious bland
        zesty juicy ripe flavorful sugary creamy buttery peppery tart
        luscious mellow vinegary syrupy briny citrusy chocolatey minty
        toothsome palatable saccharine unsalted""",
    "vision": """bright dark colorful shiny gleaming sparkling vivid glowing
        dim radiant hazy blurry transparent golden crimson emerald pale
        luminous dazzling gloomy iridescent mottled speckled neon matte
        glossy translucent shadowy vibrant faded""",
    "interoception": """hungry thirsty dizzy nauseous tired sleepy anxious
        queasy breathless feverish aching exhausted energetic relaxed tense
        alert drowsy uneasy calm restless jittery lightheaded parched woozy
        fatigued refreshed bloated shivery flushed giddy""",
    "mouth_throat": """chew swallow bite lick gulp sip slurp munch nibble
        gargle cough yawn gnaw spit swig guzzle mumble mutter recite
        pronounce chomp slobber swish exhale inhale whistle croon drawl
        enunciate vocalize""",
    "hand_arm": """grab grasp hold carry throw catch lift push pull punch
        wave clap knead squeeze stroke pinch flick juggle haul tug scribble
        sketch wield hurl fling paddle swat cradle clutch fumble""",
    "foot_leg": """walk run jump kick sprint stroll march stomp hop skip
        trudge wander hike climb pedal dash leap stride shuffle trot
        gallop limp lunge prance saunter scamper swagger tiptoe vault
        waddle""",
    "head": """nod think remember imagine dream focus recall ponder blink
        stare glance frown smile wink gaze squint concentrate meditate
        daydream contemplate visualize muse reminisce foresee reckon
        deliberate brainstorm memorize envision grimace""",
    "torso": """bend twist lean stretch crouch shrug breathe sway slouch
        hunch swivel arch wiggle duck bow pivot rotate flex recline
        straighten squirm wriggle slump teeter totter lurch heave buck
        kneel genuflect""",
}

SUBJECTS = """analysts builders critics doctors editors farmers guards hikers
    investors judges keepers lawyers mayors nurses officials painters
    planners reporters students teachers umpires vendors workers writers
    youths zookeepers bakers chefs drivers engineers founders gardeners
    historians inspectors janitors knitters librarians musicians navigators
    operators photographers quilters researchers sailors technicians
    villagers welders""".split()

NOUNS = """bridge market festival garden harbor library museum orchard plaza
    quarry railway stadium theater union village warehouse expressway yard
    zone academy boulevard cannery district embassy foundry gallery
    hospital institute junction kiln lagoon monument nursery observatory
    pavilion reservoir seminary terminal university viaduct windmill
    xylophone yacht zeppelin aqueduct bakery cafeteria dormitory""".split()

PLACES = """airport avenue basin campus canyon coast corridor crossing delta
    esplanade foothills freeway grove headland inlet island jetty knoll
    lakefront meadow mesa outskirts peninsula pier prairie quay ridge
    riverbank shoreline slope summit terrace trailhead uplands valley
    waterfront wetlands""".split()

VERBS_PAST = """announced approved criticized defended described endorsed
    examined finished inspected launched opened postponed praised proposed
    rebuilt rejected renovated repaired reviewed revealed sponsored
    surveyed toured unveiled visited questioned""".split()

EVENTS = """auction banquet carnival ceremony concert debate drill election
    exhibition forum hearing marathon parade rally referendum summit
    symposium tournament workshop vigil""".split()

TIMES = """yesterday overnight recently unexpectedly quietly abruptly
    gradually eventually repeatedly briefly""".split()

REPORTERS = """witnesses neighbors visitors organizers volunteers commuters
    spectators residents tourists passengers""".split()

LINKERS = """because although while since after before once unless""".split()

MISC = """quartz xenon zigzag yarn jazz kiosk quilt x-ray yodel zipper
    quorum xerox zenith""".split()


def pools(rng: random.Random) -> dict[str, list[str]]:
    class_words = {
        name: CLASS_WORDS[name].split() for name in CLASS_NAMES
    }
    # lemma collisions across classes would make the lexicon ambiguous
    seen: dict[str, str] = {}
    for name, words in class_words.items():
        for word in words:
            lemma = lemmatize(word)
            if lemma in seen:
                raise SystemExit(f"lemma collision: {word} ({name}) vs {seen[lemma]}")
            seen[lemma] = f"{word}/{name}"
    senso_adjs = [
        w
        for name in ("touch", "hearing", "smell", "taste", "vision", "interoception")
        for w in class_words[name]
    ]
    senso_verbs = [
        w
        for name in ("mouth_throat", "hand_arm", "foot_leg", "head", "torso")
        for w in class_words[name]
    ]
    return {
        "class_words": class_words,
        "senso_adj": senso_adjs,
        "senso_verb": senso_verbs,
    }


def make_sentence(rng: random.Random, p: dict) -> str:
    t = rng.randrange(6)
    subj = rng.choice(SUBJECTS)
    noun = rng.choice(NOUNS)
    place = rng.choice(PLACES)
    if t == 0:
        return (f"{subj} {rng.choice(VERBS_PAST)} the {rng.choice(p['senso_adj'])} "
                f"{noun} near the {place} {rng.choice(TIMES)}.")
    if t == 1:
        return (f"the {noun} {rng.choice(VERBS_PAST).replace('ed', 'ed')} by {subj} "
                f"felt {rng.choice(p['senso_adj'])} to {rng.choice(REPORTERS)}.")
    if t == 2:
        return (f"{rng.choice(REPORTERS)} saw {subj} {rng.choice(p['senso_verb'])} "
                f"toward the {place} during the {rng.choice(EVENTS)}.")
    if t == 3:
        return (f"{subj} plan to {rng.choice(p['senso_verb'])} across the {place} "
                f"{rng.choice(LINKERS)} the {rng.choice(EVENTS)} ended.")
    if t == 4:
        return (f"a {rng.choice(p['senso_adj'])} {rng.choice(MISC)} appeared at the "
                f"{noun} before the {rng.choice(EVENTS)} {rng.choice(TIMES)}.")
    return (f"the {rng.choice(EVENTS)} at the {place} drew {subj} and "
            f"{rng.choice(REPORTERS)} {rng.choice(TIMES)}.")


def make_corpus(rng: random.Random, p: dict, n_docs: int = 460) -> list[str]:
    docs = []
    for _ in range(n_docs):
        n_sentences = rng.randrange(24, 33)
        docs.append(" ".join(make_sentence(rng, p) for _ in range(n_sentences)))
    return docs


def write_lexicon(path: Path, class_words: dict[str, list[str]], rng: random.Random) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["word", *CLASS_NAMES])
        rows = []
        for class_index, name in enumerate(CLASS_NAMES):
            for word in class_words[name]:
                ratings = [round(rng.uniform(0.0, 1.5), 2) for _ in range(NUM_CLASSES)]
                ratings[class_index] = round(rng.uniform(3.5, 5.0), 2)
                rows.append([word, *ratings])
        rows.sort(key=lambda r: r[0])
        writer.writerows(rows)


def write_frequencies(path: Path, docs: list[str], class_words: dict[str, list[str]]) -> None:
    class_of = {}
    for index, name in enumerate(CLASS_NAMES):
        for word in class_words[name]:
            class_of[lemmatize(word)] = index
    counts = Counter()
    for doc in docs:
        for word in split_words(doc):
            cls = class_of.get(lemmatize(word.lower()))
            if cls is not None:
                counts[cls] += 1
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "frequency"])
        for index, name in enumerate(CLASS_NAMES):
            writer.writerow([name, counts.get(index, 0)])


def write_synonyms(path: Path, p: dict, rng: random.Random) -> None:
    groups = [SUBJECTS, NOUNS, PLACES, VERBS_PAST, EVENTS, TIMES, REPORTERS,
              p["senso_adj"], p["senso_verb"]]
    pairs = []
    for group in groups:
        for word in group:
            others = [w for w in group if w != word]
            for choice in rng.sample(others, min(3, len(others))):
                pairs.append((word, choice))
    pairs.sort()
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["word", "replacement"])
        writer.writerows(pairs)


def write_test_lexicon(fixture: Path, expected: Path, class_words: dict[str, list[str]],
                       rng: random.Random) -> None:
    """50-word unit-test lexicon with a designed tie case, plus the
    hand-checkable argmax table committed next to it."""
    words = []
    for index, name in enumerate(CLASS_NAMES):
        for word in class_words[name][:5]:
            if word != "ambrosial":  # reserved for the tie row below
                words.append((word, index))
    words = words[:49]
    rows = []
    for word, class_index in words:
        ratings = [round(rng.uniform(0.0, 2.0), 2) for _ in range(NUM_CLASSES)]
        ratings[class_index] = round(rng.uniform(3.0, 5.0), 2)
        rows.append([word, *ratings])
    # tie between class 2 (smell) and class 5 (interoception): lower index wins
    tie = [0.5] * NUM_CLASSES
    tie[2] = 4.0
    tie[5] = 4.0
    rows.append(["ambrosial", *tie])
    rows.sort(key=lambda r: r[0])
    with fixture.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["word", *CLASS_NAMES])
        writer.writerows(rows)
    with expected.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["word", "class"])
        for row in rows:
            ratings = row[1:]
            best = max(range(NUM_CLASSES), key=lambda c: (ratings[c], -c))
            writer.writerow([row[0], CLASS_NAMES[best]])


def main() -> None:
    rng = random.Random(SEED)
    p = pools(rng)
    docs = make_corpus(rng, p)
    fixtures = ROOT / "fixtures"
    fixtures.mkdir(exist_ok=True)
    (fixtures / "corpus.txt").write_text("\n\n".join(docs) + "\n", encoding="utf-8")
    write_lexicon(fixtures / "lexicon.csv", p["class_words"], random.Random(SEED + 1))
    write_frequencies(fixtures / "class_frequencies.csv", docs, p["class_words"])
    write_synonyms(ROOT / "src" / "stylemark" / "data" / "synonyms.csv",
                   p, random.Random(SEED + 2))
    tests_data = ROOT / "tests" / "data"
    tests_data.mkdir(parents=True, exist_ok=True)
    write_test_lexicon(tests_data / "norms_fixture_50.csv",
                       tests_data / "norms_fixture_50_classes.csv",
                       p["class_words"], random.Random(SEED + 3))
    with (tests_data / "class_freqs_toy.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "frequency"])
        for index, name in enumerate(CLASS_NAMES):
            writer.writerow([name, 5 * (index + 1)])
    print(f"corpus: {len(docs)} docs, "
          f"{sum(len(d.split()) for d in docs)} tokens")


if __name__ == "__main__":
    main()
