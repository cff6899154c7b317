#!/usr/bin/env python3
"""Regenerates the bundled fixture corpora and their expected counts.

Usage: python3 fixtures/generate_fixtures.py

Outputs (next to this script):
  corpus.jsonl        240 synthetic news documents
  synthetic40.jsonl   40 documents, 25 with decomposable titles
  dict6.jsonl         6 documents for dictionary construction
  dict6.expected.tsv  dictionary built from dict6.jsonl (min count 3, top 10)
  expected.json       counts and dictionary growth computed by the reference
                      implementations below

The reference decomposer here is written directly from the greedy
longest-prefix / earliest-occurrence rule over raw strings and is
independent of the Rust implementation.
"""

import json
import random
import unicodedata
from pathlib import Path

HERE = Path(__file__).resolve().parent

LETTER = {"Lu", "Ll", "Lt", "Lm", "Lo"}


def cls(c):
    cat = unicodedata.category(c)
    if cat in LETTER:
        return "L"
    if cat == "Nd":
        return "D"
    return None


def segment(s):
    toks = []
    for c in s:
        k = cls(c)
        if toks and k is not None and cls(toks[-1][-1]) == k:
            toks[-1] += c
        else:
            toks.append(c)
    return toks


def boundaries(s):
    out = {0}
    pos = 0
    for t in segment(s):
        pos += len(t)
        out.add(pos)
    return out


def decompose(title, text, dictionary=()):
    ttoks = segment(title)
    bounds = boundaries(text)
    spans = []
    q = 0
    while q < len(ttoks):
        found = None
        for k in range(len(ttoks), q, -1):
            piece = "".join(ttoks[q:k])
            start = 0
            while True:
                p = text.find(piece, start)
                if p < 0:
                    break
                if p in bounds and p + len(piece) in bounds:
                    found = (k, piece, p)
                    break
                start = p + 1
            if found:
                break
        if found:
            k, piece, p = found
            spans.append((piece, p))
            q = k
        elif cls(ttoks[q][0]) == "L" and ttoks[q].lower() in dictionary:
            spans.append((ttoks[q], None))
            q += 1
        else:
            return None
    return spans


FIRST = ["Ana", "Brian", "Chloé", "Dmitri", "Elena", "Farid", "Grace", "Hiro",
         "Ines", "Jonas", "Kofi", "Lena", "Marta", "Nikhil", "Olga", "Pavel",
         "Quinn", "Rosa", "Sven", "Tomás"]
LAST = ["Ruiz", "Okafor", "Lindqvist", "Moreau", "Kowalski", "Tanaka", "Haddad",
        "Brennan", "Novak", "Fischer", "Abara", "Costa", "Dubois", "Eriksen"]
ROLE = ["Mayor", "Senator", "Governor", "Minister", "Coach", "Chief executive",
        "Police chief", "Judge"]
PLACE = ["Belmont", "Port Ellis", "Northfield", "Riverton", "Glenwood", "Ashby",
         "Kingsport", "São Miguel", "Lakeshore", "Dunmore"]
ORG = ["city council", "school board", "county court", "transit agency",
       "hospital trust", "water authority", "state senate", "football club"]
TOPIC = ["budget", "new stadium", "bus fares", "flood defences", "teacher pay",
         "housing plan", "tax cut", "bridge repairs", "hospital merger"]
ACTION = ["approves", "rejects", "delays", "backs", "reviews", "questions"]
MISSING = ["seeks", "head", "increases", "says", "issues", "announces",
           "decreases", "publishes"]


def person():
    return f"{random.choice(FIRST)} {random.choice(LAST)}"


def filler():
    return random.choice([
        "Officials did not respond to requests for comment.",
        "The meeting lasted more than three hours.",
        "Residents packed the hall on Tuesday evening.",
        "A final vote is expected next month.",
        "Critics said the process had been rushed.",
        "Local businesses have followed the debate closely.",
        "The proposal was first published in 2017.",
    ])


def decomposable_doc():
    """Title assembled from phrases that each appear somewhere in the text."""
    who, org, topic, place = person(), random.choice(ORG), random.choice(TOPIC), random.choice(PLACE)
    act = random.choice(ACTION)
    role = random.choice(ROLE)
    shape = random.randrange(4)
    if shape == 0:
        title = f"{place} {org} {act} {topic}"
        text = (f"The {place} {org} met on Monday. {filler()} Members voted and the panel {act} "
                f"the plan. Debate over the {topic} continued. {filler()}")
    elif shape == 1:
        title = f"{role} {who}: {topic} plan is fair"
        text = (f"{role} {who} spoke to reporters in {place}. {filler()} Asked about the "
                f"{topic}, the official said: the plan is fair and balanced. {filler()}")
    elif shape == 2:
        title = f"{who} {act} {topic} after {random.randint(2, 9)} months"
        months = title.rsplit(" ", 2)[-2]
        text = (f"{who} {act} the decision. {filler()} The {topic} talks ran for "
                f"{months} months before the vote. It came after {months} long weeks. {filler()}")
        title = f"{who} {act} {topic} after {months} months"
    else:
        title = f"{topic.capitalize()} vote in {place}"
        text = (f"{topic.capitalize()} talks stalled. {filler()} A vote in {place} is planned. "
                f"{filler()}")
    return title, text


def missing_word_doc():
    """Title with exactly one word that never occurs in the text."""
    who, topic, place = person(), random.choice(TOPIC), random.choice(PLACE)
    word = random.choice(MISSING)
    title = f"{who} {word} support for {topic}"
    text = (f"{who} has asked for support for the {topic} in {place}. {filler()} {filler()}")
    return title, text


RARE = """amid bans bid blasts boosts braces clash curbs cuts decries defies dims
eyes faces flags hails halts hikes jolts lauds lifts looms mulls nears nixes
opts ousts pans probes quits rallies reels rips rocks scraps slams slips
snubs spurs stuns sues swaps taps tops torpedoes touts trims urges vows weighs
wins woos axes bolsters buoys cites clears dents dodges
fends grills hits irks""".split()
_rare_next = [0]


def rare_pair():
    i = _rare_next[0]
    _rare_next[0] += 2
    return RARE[i % len(RARE)], RARE[(i + 1) % len(RARE)]


def hopeless_doc():
    """Title with cased words and a date absent from the text, plus two
    lowercase words used by no other title."""
    who, place = person(), random.choice(PLACE)
    month = random.choice(["June", "July", "November"])
    a, b = rare_pair()
    title = f"{place} {a} {b}, {month} {random.randint(1, 28)}"
    text = f"{who} reviews the week in {place}. {filler()} {filler()}"
    return title, text


def make_corpus(n, seed, mix):
    random.seed(seed)
    _rare_next[0] = 0
    docs = []
    sources = ["nytimes.com", "washingtonpost.com", "bbc.co.uk", "forbes.com", "cbc.ca",
               "theguardian.com", "reuters.com", "apnews.com"]
    kinds = [k for k, c in mix for _ in range(c)]
    random.shuffle(kinds)
    assert len(kinds) == n
    for i, kind in enumerate(kinds):
        title, text = {"d": decomposable_doc, "m": missing_word_doc, "h": hopeless_doc}[kind]()
        docs.append({
            "id": f"doc-{seed}-{i:04d}",
            "source": sources[i % len(sources)],
            "published_at": f"2018-12-{1 + i % 28:02d}",
            "title": title,
            "text": text,
        })
    return docs


def stats(docs):
    decomposable = 0
    samples = 0
    spans_per_doc = []
    for d in docs:
        sp = decompose(d["title"], d["text"])
        if sp is not None:
            decomposable += 1
            samples += len(sp) + 1
            spans_per_doc.append(len(sp))
    return {"documents": len(docs), "decomposable": decomposable, "samples": samples,
            "spans_total": sum(spans_per_doc)}


def build_dictionary(docs, threshold, top_n):
    """Steps 1-5: count title words missing from their own text, fold cased
    variants into lowercase words that clear the threshold, keep lowercase
    words, rank by count then alphabetically."""
    counts = {}
    for d in docs:
        in_text = {t for t in segment(d["text"]) if cls(t[0]) == "L"}
        for t in segment(d["title"]):
            if cls(t[0]) == "L" and t not in in_text:
                counts[t] = counts.get(t, 0) + 1
    merged = {}
    for w, c in counts.items():
        low = w.lower()
        if low == w or counts.get(low, 0) >= threshold:
            merged[low] = merged.get(low, 0) + c
    entries = sorted(((w, c) for w, c in merged.items() if w.lower() == w), key=lambda e: (-e[1], e[0]))
    return entries[:top_n]


def growth(docs, sizes):
    words = [w for w, _ in build_dictionary(docs, threshold=100, top_n=100)]
    points = []
    for k in sizes:
        lexicon = set(words[:k])
        decomposable = dict_samples = 0
        for d in docs:
            sp = decompose(d["title"], d["text"], lexicon)
            if sp is not None:
                decomposable += 1
                dict_samples += sum(1 for _, p in sp if p is None)
        points.append({"size": k, "decomposable": decomposable, "dict_samples": dict_samples})
    return {"min_lowercase_count": 100, "top_n": 100, "dict_len": len(words), "points": points}


DICT6 = [
    # Step 1 (case-sensitive): says 4, Says 2, seeks 2, Seeks 1, US 2, us 1,
    # head/of/with 1, plus cased-only Mayor, Council, Governor, June, EDT,
    # Trade. With min_lowercase_count = 3 only "says" absorbs its cased
    # variant (6); "Seeks" and "US" are below threshold and dropped.
    ("Mayor says budget is fine", "The mayor spoke. The budget is fine."),
    ("Says Mayor: budget is fine", "Mayor spoke. The budget is fine. Says nothing."),
    ("Council says no, says yes, Says maybe", "The council met and voted no, then yes, then maybe."),
    ("Governor seeks head of US agency", "The governor wants a new agency chief."),
    ("Seeks US help, seeks June vote EDT", "Officials want help and a vote."),
    ("Trade with us says Says minister", "The minister wants trade."),
]


def main():
    corpus = make_corpus(240, 2018, [("d", 150), ("m", 60), ("h", 30)])
    syn = make_corpus(40, 40, [("d", 25), ("m", 10), ("h", 5)])
    for name, docs in [("corpus.jsonl", corpus), ("synthetic40.jsonl", syn)]:
        with open(HERE / name, "w", encoding="utf-8") as f:
            for d in docs:
                f.write(json.dumps(d, ensure_ascii=False) + "\n")

    d6 = [{"id": f"dict-{i}", "source": "example.com", "published_at": "2018-11-01",
           "title": t, "text": x} for i, (t, x) in enumerate(DICT6)]
    with open(HERE / "dict6.jsonl", "w", encoding="utf-8") as f:
        for d in d6:
            f.write(json.dumps(d, ensure_ascii=False) + "\n")

    entries = build_dictionary(d6, threshold=3, top_n=10)
    with open(HERE / "dict6.expected.tsv", "w", encoding="utf-8") as f:
        for w, c in entries:
            f.write(f"{w}\t{c}\n")

    expected = {"corpus": stats(corpus), "synthetic40": stats(syn),
                "corpus_growth": growth(corpus, [0, 1, 5, 10, 50])}
    with open(HERE / "expected.json", "w", encoding="utf-8") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print(json.dumps(expected, indent=2))


if __name__ == "__main__":
    main()
