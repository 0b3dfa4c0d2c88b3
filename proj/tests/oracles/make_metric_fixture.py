#!/usr/bin/env python3
"""Builds the frozen 50-segment metric fixture.

Hypotheses, sources and extra references are derived from hand-written
reference sentences by seeded, scripted corruption. The output is written to
tests/fixtures/metric_corpus.json without any oracle values; the capture
scripts in this directory add those.
"""
import json
import random
import sys

REFS = [
    "The committee approved the new budget on Tuesday, after a long debate.",
    "Prices rose by 3.5% in March, the fastest pace since 2008.",
    "\"We are not going to give up,\" she told reporters outside the court.",
    "The train from Berlin to Munich was delayed by 45 minutes.",
    "More than 1,200 people attended the concert in the park.",
    "He said the company would invest $2.4 billion over the next five years.",
    "Rescue teams worked through the night to reach the trapped miners.",
    "The museum's new wing opens to the public next month.",
    "Scientists have discovered a new species of frog in the rainforest.",
    "The match ended 2-1 after a late goal from the visiting team.",
    "Officials warned that the storm could bring heavy rain and strong winds.",
    "She has lived in the same small village for over forty years.",
    "The government plans to cut taxes for low-income families.",
    "Our flight was cancelled, so we spent the night at the airport.",
    "The report, published on Monday, criticised the slow response.",
    "Farmers say the drought has destroyed much of this year's harvest.",
    "I don't think anyone expected the results to be so close.",
    "The bridge will be closed for repairs from 10 p.m. to 6 a.m.",
    "Students protested against the increase in tuition fees.",
    "The new phone has a larger screen and a faster processor.",
    "Police arrested two men in connection with the robbery.",
    "The river burst its banks, flooding dozens of homes.",
    "According to the survey, 62 percent of voters support the plan.",
    "The author's latest novel is set in nineteenth-century Paris.",
    "Doctors recommend at least 30 minutes of exercise a day.",
    "The two leaders met in Geneva to discuss trade and security.",
    "Tickets cost 15 euros for adults and 8 euros for children.",
    "The company reported a loss of 120 million dollars in the third quarter.",
    "Volunteers planted more than 5,000 trees along the highway.",
    "He apologised for the mistake & promised to fix it quickly.",
    "The festival attracts visitors from all over the world every summer.",
    "Heavy snow forced the closure of several mountain roads.",
    "The minister resigned amid allegations of corruption.",
    "A spokesperson declined to comment on the ongoing investigation.",
    "The school will introduce free lunches for all pupils in September.",
    "Researchers found that the drug reduced symptoms in most patients.",
    "The old factory has been turned into apartments and shops.",
    "Traffic was heavy on the M25 because of an accident near junction 10.",
    "She won the gold medal in the 200-metre race.",
    "The hotel offers views of the lake and the surrounding hills.",
    "Why did the council reject the proposal without any discussion?",
    "The price of oil fell below $70 a barrel on Friday.",
    "Engineers are testing a new battery that charges in ten minutes.",
    "The orchestra performed works by Mozart, Haydn and Beethoven.",
    "Local businesses have struggled since the road was closed.",
    "The court ruled that the law was unconstitutional.",
    "It's the first time the team has reached the final in 20 years.",
    "Thousands of fans waited for hours to see the band arrive.",
    "The agency said the satellite was launched successfully at 09:30.",
    "Please keep your ticket until the end of the journey.",
]

SYNONYMS = {
    "new": "fresh", "said": "stated", "people": "persons", "heavy": "strong",
    "more": "over", "night": "evening", "company": "firm", "plan": "proposal",
    "closed": "shut", "public": "people", "world": "globe", "warned": "cautioned",
    "found": "discovered", "small": "little", "fell": "dropped", "team": "side",
    "struggled": "suffered", "waited": "queued", "reduced": "lowered",
}
FILLER = ["very", "also", "really", "the", "of", "then", "quite", "there"]


def corrupt(sentence, rng, strength):
    words = sentence.split()
    out = []
    for w in words:
        r = rng.random()
        key = w.lower().strip(".,\"?")
        if r < strength * 0.3 and len(words) > 3:
            continue
        if r < strength * 0.6 and key in SYNONYMS:
            w = w.replace(key, SYNONYMS[key])
        out.append(w)
        if rng.random() < strength * 0.15:
            out.append(rng.choice(FILLER))
    if len(out) > 4 and rng.random() < strength:
        i = rng.randrange(0, len(out) - 2)
        out[i], out[i + 1] = out[i + 1], out[i]
    if rng.random() < strength * 0.3:
        out[0] = out[0].lower()
    return " ".join(out) if out else words[0]


def main(path):
    rng = random.Random(20230601)
    segments = []
    for i, ref in enumerate(REFS):
        hyp = corrupt(ref, rng, 0.1 + 0.8 * (i % 7) / 6)
        if i == 0:
            hyp = ref
        if i == 1:
            hyp = "Prices rose by 3.5 % in March , the fastest since 2008 ."
        if i == 2:
            hyp = ""
        src = corrupt(ref, rng, 0.5)
        ref2 = corrupt(ref, rng, 0.3)
        ref3 = corrupt(ref, rng, 0.3)
        segments.append({"src": src, "hyp": hyp, "refs": [ref, ref2, ref3]})
    json.dump({"segments": segments}, open(path, "w"), ensure_ascii=False, indent=1)


if __name__ == "__main__":
    main(sys.argv[1])
