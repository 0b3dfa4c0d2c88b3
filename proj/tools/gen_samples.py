#!/usr/bin/env python3
"""Writes the small synthetic sample sets under data/samples.

Deterministic: rerunning produces identical files. Sentences are assembled from
word lists so every reference has several alphanumeric tokens.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "samples"

N_TEST = 25
N_VALID = 6

# zh -> en word lexicon used for the translation pairs.
SUBJECTS = [("我", "I"), ("他", "he"), ("她", "she"), ("我们", "we"), ("他们", "they"),
            ("老师", "the teacher"), ("学生", "the student"), ("医生", "the doctor")]
VERBS = [("喜欢", "likes"), ("需要", "needs"), ("看见", "sees"), ("买", "buys"),
         ("读", "reads"), ("找到", "finds")]
OBJECTS = [("苹果", "apples"), ("书", "a book"), ("电脑", "a computer"), ("新闻", "the news"),
           ("地图", "a map"), ("音乐", "music"), ("咖啡", "coffee")]
PLACES = [("在北京", "in Beijing"), ("在上海", "in Shanghai"), ("在学校", "at school"),
          ("在家", "at home"), ("在医院", "at the hospital")]
TIMES = [("今天", "today"), ("昨天", "yesterday"), ("每天", "every day"), ("明天", "tomorrow")]

PLAIN_FORMS = {"I": ("like", "need", "see", "buy", "read", "find"),
               "we": ("like", "need", "see", "buy", "read", "find"),
               "they": ("like", "need", "see", "buy", "read", "find")}

NAMES = ["Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace", "Henry"]
TOPICS = ["the budget", "the trip", "the concert", "the project", "the dinner", "the meeting",
          "the garden", "the exam"]
CITIES = ["Paris", "Boston", "Madrid", "Sydney", "Toronto", "Oslo", "Lima", "Cairo"]
ORGS = ["the city council", "the local school", "the football club", "the museum",
        "the health agency", "the railway company"]
EVENTS = ["opened a new library", "approved a larger budget", "announced a summer festival",
          "cut ticket prices", "hired twenty new staff", "delayed the new timetable"]


def verb_for(subject_en, verb_idx):
    plain = PLAIN_FORMS.get(subject_en)
    return plain[verb_idx] if plain else VERBS[verb_idx][1]


def translation(rng, i):
    s, v, o, p, t = (rng.randrange(len(x)) for x in (SUBJECTS, VERBS, OBJECTS, PLACES, TIMES))
    zh = TIMES[t][0] + SUBJECTS[s][0] + PLACES[p][0] + VERBS[v][0] + OBJECTS[o][0] + "。"
    subj = SUBJECTS[s][1]
    en = f"{subj} {verb_for(subj, v)} {OBJECTS[o][1]} {PLACES[p][1]} {TIMES[t][1]}."
    return zh, [en[0].upper() + en[1:]]


def summarization(rng, i):
    org, city, ev = rng.choice(ORGS), rng.choice(CITIES), rng.choice(EVENTS)
    name = rng.choice(NAMES)
    n = rng.randrange(100, 900)
    src = (f"Officials said on Monday that {org} in {city} {ev}. "
           f"The decision follows months of debate, and about {n} residents attended the public hearing. "
           f"{name}, a spokesperson, said the change would take effect next month. "
           f"Critics argued the plan was rushed, while supporters welcomed the news.")
    ref = f"{org.capitalize()} in {city} {ev}, effective next month."
    return src, [ref]


def dialogue(rng, i):
    a, b = rng.sample(NAMES, 2)
    topic, city = rng.choice(TOPICS), rng.choice(CITIES)
    day = rng.choice(["Monday", "Tuesday", "Friday", "Saturday"])
    src = (f"#Person1#: {b}, have you heard anything about {topic}?\n"
           f"#Person2#: Yes, {a} told me it moved to {city}.\n"
           f"#Person1#: When does it start?\n"
           f"#Person2#: On {day}. I will send you the details tonight.")
    refs = [f"{a} told #Person2# that {topic} moved to {city} and starts on {day}.",
            f"#Person2# says {topic} is now in {city} on {day} and will send details."]
    return src, refs


def simplification(rng, i):
    org, city = rng.choice(ORGS), rng.choice(CITIES)
    ev = rng.choice(EVENTS)
    src = (f"Notwithstanding considerable opposition from numerous residents, {org} of {city} "
           f"ultimately {ev} following protracted deliberations.")
    refs = [f"{org.capitalize()} of {city} {ev} after long talks.",
            f"Despite opposition, {org} in {city} {ev}."]
    return src, refs


INFORMAL = [("gonna", "going to"), ("wanna", "want to"), ("u", "you"), ("thx", "thanks"),
            ("pls", "please")]


def style(rng, i):
    name, topic = rng.choice(NAMES), rng.choice(TOPICS)
    forms = [
        (f"hey {name} u gonna finish {topic} or what", f"{name}, are you going to finish {topic}?"),
        (f"thx for helping with {topic} lol", f"Thank you for helping with {topic}."),
        (f"pls tell {name} i wanna talk about {topic}", f"Please tell {name} that I want to talk about {topic}."),
        (f"{topic} was sooo bad tbh", f"To be honest, {topic} was very poor."),
    ]
    src, ref = forms[i % len(forms)]
    return src, [ref]


def paraphrase(rng, i):
    city, topic = rng.choice(CITIES), rng.choice(TOPICS)
    forms = [
        (f"How can I plan {topic} in {city} on a small budget?",
         f"What is the cheapest way to organize {topic} in {city}?"),
        (f"What is the best time of year to visit {city}?",
         f"When should I travel to {city} for the best weather?"),
        (f"Why do people in {city} care so much about {topic}?",
         f"What makes {topic} so important to residents of {city}?"),
    ]
    src, ref = forms[i % len(forms)]
    return src, [ref]


CONCEPTS = [(["dog", "frisbee", "catch"], "The dog jumps to catch the frisbee in the park."),
            (["chef", "knife", "vegetable"], "The chef cuts the vegetable with a sharp knife."),
            (["child", "kite", "fly"], "A child flies a red kite on the beach."),
            (["rider", "horse", "field"], "The rider guides the horse across the open field."),
            (["student", "book", "library"], "A student reads a book quietly in the library."),
            (["team", "ball", "score"], "The team kicks the ball and scores a goal."),
            (["painter", "wall", "brush"], "The painter covers the wall with a wide brush."),
            (["farmer", "tractor", "plow"], "The farmer uses a tractor to plow the land.")]


def commonsense(rng, i):
    concepts, ref = CONCEPTS[i % len(CONCEPTS)]
    order = concepts[:]
    rng.shuffle(order)
    return ", ".join(order), [ref, ref.replace("The ", "A ", 1)]


TASKS = {
    "zh_en": translation,
    "summarization": summarization,
    "dialogue": dialogue,
    "simplification": simplification,
    "style": style,
    "paraphrase": paraphrase,
    "commongen": commonsense,
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, make in TASKS.items():
        rng = random.Random(f"samples:{name}")
        lines = []
        for i in range(N_TEST + N_VALID):
            split = "test" if i < N_TEST else "validation"
            prefix = "t" if split == "test" else "v"
            idx = i if split == "test" else i - N_TEST
            src, refs = make(rng, i)
            rec = {"id": f"{name}-{prefix}{idx:03d}", "source": src, "references": refs, "split": split}
            lines.append(json.dumps(rec, ensure_ascii=False))
        (OUT / f"{name}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # Base system outputs for word-drop sweeps: the reference with its last word
    # replaced, so the base is close to but not identical with the reference.
    base = []
    for line in (OUT / "zh_en.jsonl").read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        if rec["split"] != "test":
            continue
        words = rec["references"][0].split()
        words[-1] = "soon."
        base.append(json.dumps({"id": rec["id"], "hypothesis": " ".join(words)}))
    (OUT / "zh_en_base.jsonl").write_text("\n".join(base) + "\n", encoding="utf-8")

    lexicon = {zh: en for group in (SUBJECTS, VERBS, OBJECTS, PLACES, TIMES) for zh, en in group}
    (OUT / "zh_en_lexicon.json").write_text(json.dumps(lexicon, ensure_ascii=False, indent=1) + "\n",
                                            encoding="utf-8")


if __name__ == "__main__":
    main()
