"""Regenerate the bundled synthetic mini-corpus.

    python tools/make_mini_corpus.py [output.jsonl]

Fifty Europe-related articles per (orientation, year) slice for 2016 and
2017, plus a handful of off-theme articles that the lemma filter drops.
Theme mixtures differ by orientation and shift between years so flows and
frequency regressions have something to show. Fully deterministic.
"""
import json
import random
import sys
from pathlib import Path

THEMES = {
    "migration": "migrants refugees asylum border camps smugglers boats mediterranean quota "
                 "deportation shelter schengen arrivals calais humanitarian visas integration germany merkel turkey",
    "terrorism": "attack terror police security bomb suspect victims arrested intelligence explosion "
                 "gunman raid investigation threat extremists",
    "referendum": "referendum vote campaign leave remain ballot polls voters cameron farage turnout "
                  "result brexit debate",
    "negotiations": "negotiations deal divorce bill barnier davis talks transition withdrawal agreement "
                    "brussels citizens rights negotiators",
    "economy": "economy growth inflation pound sterling markets investors bank rates recession jobs "
               "unemployment exports forecast",
    "trade": "trade tariffs customs exports imports goods services union market suppliers "
             "manufacturers quotas",
    "ireland": "ireland irish backstop dublin belfast northern friday checkpoints varadkar unionists "
               "frontier",
    "sport": "football league match championship goal players coach stadium season cup tournament "
             "striker fans",
    "weather": "weather forecast storm rain snow temperatures wind heatwave forecasters flooding "
               "cold sunshine",
    "health": "nhs hospitals doctors nurses patients health staff waiting care funding medicines "
              "clinics",
    "russia": "russia putin military missile nato ukraine sanctions troops weapons aircraft kremlin "
              "deploy",
    "scotland": "scotland scottish independence sturgeon edinburgh holyrood snp unionist "
                "devolution",
    "finance": "banks city finance passporting euro clearing frankfurt bankers regulators lenders "
               "insurers",
}

FILLER = ("government minister people country week officials report plans britain london "
          "leaders spokesman statement public party").split()

VERBS = ("discussed", "warned about", "criticised", "welcomed", "questioned", "defended",
         "highlighted", "rejected", "backed", "reported on")

TEMPLATES = (
    "The {f0} {v} the {a} and the {b} on {day}.",
    "{Name} {v} new {a} plans, saying {b} and {c} would shape the {f0}.",
    "Critics {v} the {a} as {b} dominated the {f0} in {city}.",
    "A {f0} {f1} said the {a} was linked to {b} and {c}.",
    "Figures on {a} and {b} {v} by the {f0} surprised {f1}.",
    "In {city}, {a} and {b} remained the main concern for {f1}.",
    "{Name} told reporters the {a} could change {b} before the {c} talks.",
)
EURO_SENTENCES = (
    "The EU said the {a} issue would be raised in {city}.",
    "Leaders across Europe {v} the {a} and {b}.",
    "The European Union {v} the {a} on {day}.",
    "Officials in the EU warned that {a} and {b} could affect Europe.",
)
BOILERPLATE = "Related articles are listed below the story."

NAMES = ("Mrs. May", "Mr. Johnson", "Dr. Fox", "Ms. Sturgeon", "Mr. Corbyn", "Mr. Hammond")
CITIES = ("London", "Brussels", "Paris", "Berlin", "Dublin", "Rome", "Madrid")
DAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")

PAPERS = {
    "left-wing": ("Daily Mirror", "The Guardian", "The Independent"),
    "right-wing": ("Daily Star", "The Telegraph"),
    "far-right": ("Daily Express",),
}

# theme weights per (orientation, year)
MIX = {
    ("far-right", 2016): dict(migration=6, terrorism=4, referendum=3, weather=3, economy=1, health=1, russia=1, sport=1),
    ("far-right", 2017): dict(terrorism=5, migration=3, negotiations=3, weather=2, economy=2, health=2, ireland=1, trade=1),
    ("right-wing", 2016): dict(referendum=6, scotland=3, russia=3, economy=2, migration=2, trade=1, finance=1, sport=1),
    ("right-wing", 2017): dict(negotiations=5, russia=3, ireland=2, scotland=2, finance=2, trade=2, economy=1, health=1),
    ("left-wing", 2016): dict(referendum=4, sport=4, economy=3, health=2, migration=2, scotland=1, finance=1, weather=1),
    ("left-wing", 2017): dict(negotiations=4, economy=3, finance=3, ireland=3, sport=3, trade=2, health=1, terrorism=1),
}

OFF_THEME = ("sport", "weather", "health")


def sentence(rng, words, template):
    pick = lambda: rng.choice(words)
    return template.format(
        a=pick(), b=pick(), c=pick(), f0=rng.choice(FILLER), f1=rng.choice(FILLER),
        v=rng.choice(VERBS), Name=rng.choice(NAMES), city=rng.choice(CITIES), day=rng.choice(DAYS),
    )


def article_body(rng, main, second, european=True):
    main_w, second_w = THEMES[main].split(), THEMES[second].split()
    out = []
    for _ in range(rng.randint(8, 12)):
        words = main_w if rng.random() < 0.75 else second_w
        if european and rng.random() < 0.25:
            out.append(sentence(rng, words, rng.choice(EURO_SENTENCES)))
        else:
            out.append(sentence(rng, words, rng.choice(TEMPLATES)))
    if rng.random() < 0.3:
        out.append(BOILERPLATE)
    return " ".join(out)


def make_records(seed=2016):
    rng = random.Random(seed)
    records = []
    for (orientation, year), mix in MIX.items():
        themes, weights = zip(*mix.items())
        for i in range(50):
            main = rng.choices(themes, weights)[0]
            second = rng.choice([t for t in themes if t != main])
            body = article_body(rng, main, second)
            if "EU" not in body and "Europe" not in body:
                body += " The EU said it was following events closely."
            month, day = rng.randint(1, 12), rng.randint(1, 28)
            kw = rng.sample(THEMES[main].split(), 2)
            records.append({
                "id": f"{orientation[:2]}{year % 100}-{i:03d}",
                "newspaper": rng.choice(PAPERS[orientation]),
                "date": f"{year}-{month:02d}-{day:02d}",
                "title": f"{kw[0].capitalize()} and {kw[1]} in focus",
                "body": body,
            })
    for i in range(18):
        orientation = rng.choice(list(PAPERS))
        main = rng.choice(OFF_THEME)
        second = rng.choice([t for t in OFF_THEME if t != main])
        year = rng.choice((2016, 2017))
        records.append({
            "id": f"off-{i:03d}",
            "newspaper": rng.choice(PAPERS[orientation]),
            "date": f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            "title": f"{main.capitalize()} round-up",
            "body": article_body(rng, main, second, european=False),
        })
    rng.shuffle(records)
    return records


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "narrativekit" / "data" / "mini_corpus.jsonl")
    with open(out, "w", encoding="utf-8") as fh:
        for rec in make_records():
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv)
