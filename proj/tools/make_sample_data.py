#!/usr/bin/env python3
"""Writes the bundled sample catalog and the constructed benchmark.

data/sample/catalog.jsonl      500 phones and accessories
data/sample/judgments.tsv      title-style queries with their products
data/benchmark/catalog.jsonl   200 products in 40 groups of 5
data/benchmark/judgments.tsv   one constrained query per group

Every benchmark group holds 2 products satisfying the query's constraints and
3 near-duplicate decoys that violate them. Decoys carry less extra text, so
an unfiltered ranker prefers them.

Output is deterministic: rerunning rewrites identical files.
"""

import argparse
import json
import pathlib
import random

PHONE_BRANDS = ["Samsung", "Motorola", "Nokia", "Apple", "Google", "OnePlus", "Huawei", "Xiaomi",
                "Alcatel", "BLU", "LG", "Sony", "ZTE", "TCL", "Kyocera", "Oppo"]
PHONE_LINES = {
    "Samsung": ["Galaxy S10", "Galaxy A12", "Galaxy Note 9", "Galaxy S21", "Galaxy A51"],
    "Motorola": ["Moto G Power", "Moto E", "Razr", "Moto G Stylus", "Edge Plus"],
    "Nokia": ["3310", "G20", "C100", "225 4G", "X10"],
    "Apple": ["iPhone 7 Plus", "iPhone SE", "iPhone 11 Pro Max", "iPhone XR", "iPhone 12 Mini"],
    "Google": ["Pixel 4a", "Pixel 5", "Pixel 3 XL", "Pixel 6", "Pixel 4 XL"],
    "OnePlus": ["Nord N10", "8T", "7 Pro", "9", "Nord N200"],
    "Huawei": ["P30 Pro", "Mate 20", "P20 Lite", "Y9", "Mate 10"],
    "Xiaomi": ["Redmi Note 10", "Poco X3", "Mi 11", "Redmi 9A", "Redmi Note 9"],
    "Alcatel": ["Go Flip", "1X", "3V", "Joy Tab", "Smartflip"],
    "BLU": ["Vivo X6", "G90", "Tank II", "C5", "View 2"],
    "LG": ["Stylo 6", "K51", "V60", "Wing", "G8 ThinQ"],
    "Sony": ["Xperia 1", "Xperia 10", "Xperia 5", "Xperia L4", "Xperia XZ3"],
    "ZTE": ["Blade A7", "Axon 10", "Cymbal", "Blade X1", "Avid 4"],
    "TCL": ["10 Pro", "20 SE", "A3", "Flip Pro", "10L"],
    "Kyocera": ["DuraXV", "DuraForce Pro", "Cadence", "DuraXE", "Hydro"],
    "Oppo": ["Reno 4", "A53", "Find X2", "A9", "Reno Z"],
}
PHONE_KINDS = ["smartphone", "flip phone", "basic phone", "rugged phone", "camera phone"]
PHONE_TRAITS = ["long battery life", "dual sim", "fast charging", "water resistant", "large display",
                "physical keyboard", "triple camera", "expandable storage", "face unlock",
                "fingerprint sensor", "wireless charging", "big buttons", "loud speaker",
                "night mode camera", "headphone jack"]
CARRIERS = ["GSM unlocked", "AT&T", "Verizon", "T-Mobile", "prepaid", "fully unlocked"]

ACCESSORY_BRANDS = ["Anker", "Spigen", "OtterBox", "Belkin", "JETech", "ESR", "Mpow", "Aukey",
                    "Ringke", "Supershieldz", "iOttie", "Syncwire", "Tech21", "Caseology"]
ACCESSORY_KINDS = {
    "case": ["slim", "rugged", "clear", "wallet", "leather", "shockproof", "glitter"],
    "screen protector": ["tempered glass", "privacy", "matte", "anti glare", "full coverage"],
    "charger": ["wall", "usb c", "fast", "4-port usb", "dual port", "wireless"],
    "cable": ["braided", "usb c", "lightning", "micro usb", "right angle"],
    "car mount": ["dashboard", "vent", "magnetic", "windshield"],
    "phone holder": ["bike", "athletic", "desk", "bed", "armband"],
    "earbuds": ["wireless", "noise cancelling", "sport", "wired", "bluetooth"],
    "power bank": ["portable", "slim", "solar", "high capacity", "pocket"],
    "stylus": ["fine point", "capacitive", "active", "disc tip"],
    "watch band": ["silicone", "nylon", "stainless steel", "leather", "sport loop"],
}
COLORS = ["black", "blue", "red", "rose gold", "silver", "green", "purple", "white", "navy"]
MATERIALS = ["silicone", "polycarbonate", "aluminum", "tpu", "nylon", "leather", "glass"]


def rating(rng, lo=2.5, hi=5.0):
    return round(rng.uniform(lo, hi), 1)


def reviews(rng):
    return int(10 ** rng.uniform(0.0, 4.3))


def phone_record(rng, asin):
    brand = rng.choice(PHONE_BRANDS)
    model = rng.choice(PHONE_LINES[brand])
    kind = rng.choice(PHONE_KINDS)
    traits = rng.sample(PHONE_TRAITS, 3)
    carrier = rng.choice(CARRIERS)
    storage = rng.choice([16, 32, 64, 128, 256])
    screen = rng.choice([2.4, 5.5, 6.1, 6.4, 6.7])
    color = rng.choice(COLORS)
    title = f"{brand} {model} {storage}GB {carrier} {kind} - {color.title()}"
    description = (f"<p>The {brand} {model} is a {kind} with {traits[0]} and {traits[1]}.</p>"
                   f" Works with {carrier} networks. Learn more at https://example.com/{asin}")
    features = "; ".join([f"{screen} inch display", f"{storage} GB storage", *traits])
    tech = f"display: {screen} in; storage: {storage} GB; network: 4G LTE; color: {color}"
    price = round(rng.uniform(40, 1200), 2)
    return dict(asin=asin, title=title, description=description, features=features,
                tech_specs=tech, price=price, average_rating=rating(rng),
                review_count=reviews(rng), subcategory="Cell Phones")


def accessory_record(rng, asin):
    brand = rng.choice(ACCESSORY_BRANDS)
    kind = rng.choice(sorted(ACCESSORY_KINDS))
    style = rng.choice(ACCESSORY_KINDS[kind])
    target_brand = rng.choice(PHONE_BRANDS)
    target = f"{target_brand} {rng.choice(PHONE_LINES[target_brand])}"
    color = rng.choice(COLORS)
    material = rng.choice(MATERIALS)
    title = f"{brand} {style} {kind} for {target} ({color})"
    description = (f"{brand} {style} {kind} made from {material}. Compatible with {target}."
                   f" <b>{rng.choice(['Lifetime warranty', '18 month warranty', 'Ships fast'])}</b>")
    features = "; ".join([f"{material} build", f"fits {target}", f"{color} finish",
                          rng.choice(["lightweight", "easy install", "travel friendly", "durable"])])
    tech = f"material: {material}; color: {color}; compatible: {target}"
    price = round(rng.uniform(5, 80), 2)
    return dict(asin=asin, title=title, description=description, features=features,
                tech_specs=tech, price=price, average_rating=rating(rng),
                review_count=reviews(rng), subcategory="Cell Phone Accessories")


def make_asin(rng, used):
    alphabet = "ABCDEFGHJKLMNPQRSTUVWXYZ0123456789"
    while True:
        asin = "B0" + "".join(rng.choice(alphabet) for _ in range(8))
        if asin not in used:
            used.add(asin)
            return asin


def sample_catalog(rng, n):
    used = set()
    records = []
    for i in range(n):
        asin = make_asin(rng, used)
        rec = phone_record(rng, asin) if i % 2 == 0 else accessory_record(rng, asin)
        if rng.random() < 0.05:
            rec["price"] = None
        if rng.random() < 0.1:
            del rec["subcategory"]  # classified at ingest
        records.append(rec)
    return records


def sample_judgments(rng, records, n):
    rows = []
    for rec in rng.sample(records, n):
        words = rec["title"].replace("(", " ").replace(")", " ").replace(" - ", " ").split()
        rows.append((" ".join(words[:5]).lower(), [rec["asin"]]))
    return rows


# Query suffix, then (price, rating, reviews) ranges for products that satisfy
# the constraint and for decoys that violate it.
BENCH_CONSTRAINTS = [
    ("under $20", ((5, 19), (3.5, 5.0), (10, 5000)), ((30, 60), (3.5, 5.0), (10, 5000))),
    ("over $50", ((55, 90), (3.5, 5.0), (10, 5000)), ((8, 40), (3.5, 5.0), (10, 5000))),
    ("between $10 and $25", ((11, 24), (3.5, 5.0), (10, 5000)), ((30, 70), (3.5, 5.0), (10, 5000))),
    ("with 4+ stars", ((10, 40), (4.1, 5.0), (10, 5000)), ((10, 40), (2.0, 3.7), (10, 5000))),
    ("with 500+ reviews", ((10, 40), (3.5, 5.0), (600, 9000)), ((10, 40), (3.5, 5.0), (5, 300))),
    ("at a cheap price", ((5, 14), (3.5, 5.0), (10, 5000)), ((20, 70), (3.5, 5.0), (10, 5000))),
    ("highly rated", ((10, 40), (4.6, 5.0), (10, 5000)), ((10, 40), (2.5, 4.3), (10, 5000))),
    ("with plenty of reviews", ((10, 40), (3.5, 5.0), (1200, 9000)), ((10, 40), (3.5, 5.0), (5, 800))),
]
PHONE_CONSTRAINTS = [
    ("under $300", ((90, 290), (3.5, 5.0), (10, 5000)), ((350, 900), (3.5, 5.0), (10, 5000))),
    ("priced over $500", ((550, 1100), (3.5, 5.0), (10, 5000)), ((90, 450), (3.5, 5.0), (10, 5000))),
    ("rated 4.5 or higher", ((100, 600), (4.6, 5.0), (10, 5000)), ((100, 600), (2.5, 4.3), (10, 5000))),
    ("with many reviews", ((100, 600), (3.5, 5.0), (1500, 9000)), ((100, 600), (3.5, 5.0), (5, 700))),
    ("at an affordable price", ((40, 99), (3.5, 5.0), (10, 5000)), ((150, 900), (3.5, 5.0), (10, 5000))),
]

BENCH_NAMES = ["zorvex", "quellar", "brintek", "halvano", "mirexo", "tolvane", "kestrix", "vandora",
               "plumora", "droxen", "selvix", "yantrel", "corvane", "lumatic", "fenwick", "orbela",
               "trevion", "novalux", "gralden", "wexford", "aventa", "bolero", "cindral", "dymax",
               "elaris", "faxton", "gorvan", "hexley", "ivoric", "jandro", "kaleon", "lyrax",
               "montis", "nexara", "ostrel", "pyrion", "quorra", "rendex", "sylvar", "tarnex"]
FILLER = ["premium build quality", "designed for everyday use", "ships in retail packaging",
          "backed by warranty", "tested for durability", "available in several colors",
          "compact and lightweight", "easy to set up", "great gift idea", "modern design"]
ACC_BENCH_KINDS = ["charger", "case", "cable", "phone holder", "screen protector", "earbuds",
                   "car mount", "power bank"]
PHONE_BENCH_KINDS = ["flip phone", "smartphone", "rugged phone", "basic phone"]


def bench(rng):
    used = set()
    records, judgments = [], []
    n_phone = n_acc = 0
    for g, name in enumerate(BENCH_NAMES):
        if g % 4 == 3:
            kind = PHONE_BENCH_KINDS[n_phone % len(PHONE_BENCH_KINDS)]
            suffix, good, bad = PHONE_CONSTRAINTS[n_phone % len(PHONE_CONSTRAINTS)]
            sub = "Cell Phones"
            n_phone += 1
        else:
            kind = ACC_BENCH_KINDS[(3 * n_acc) % len(ACC_BENCH_KINDS)]
            suffix, good, bad = BENCH_CONSTRAINTS[n_acc % len(BENCH_CONSTRAINTS)]
            sub = "Cell Phone Accessories"
            n_acc += 1
        query = f"{name} {kind} {suffix}"
        relevant = []
        for j in range(5):
            asin = make_asin(rng, used)
            is_good = j < 2
            (plo, phi), (rlo, rhi), (vlo, vhi) = good if is_good else bad
            if is_good:
                extra = rng.sample(FILLER, 4)
                title = f"{name.title()} {kind} {extra[0]}"
                description = f"{name.title()} {kind}. {extra[1]}. {extra[2]}."
                features = f"{extra[3]}"
            else:
                title = f"{name.title()} {kind}"
                description = f"{name.title()} {kind}"
                features = ""
            records.append(dict(asin=asin, title=title, description=description, features=features,
                                tech_specs="", price=round(rng.uniform(plo, phi), 2),
                                average_rating=round(rng.uniform(rlo, rhi), 1),
                                review_count=rng.randint(vlo, vhi), subcategory=sub))
            if is_good:
                relevant.append(asin)
        judgments.append((query, relevant))
    order = list(range(len(records)))
    rng.shuffle(order)
    return [records[i] for i in order], judgments


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


def write_judgments(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for query, asins in rows:
            f.write("\t".join([query, *asins]) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--root", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()
    root = pathlib.Path(args.root)

    rng = random.Random(args.seed)
    catalog = sample_catalog(rng, 500)
    write_jsonl(root / "sample" / "catalog.jsonl", catalog)
    write_judgments(root / "sample" / "judgments.tsv", sample_judgments(rng, catalog, 40))

    records, judgments = bench(random.Random(args.seed + 1))
    write_jsonl(root / "benchmark" / "catalog.jsonl", records)
    write_judgments(root / "benchmark" / "judgments.tsv", judgments)


if __name__ == "__main__":
    main()
