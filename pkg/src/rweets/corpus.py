"""Labeled tweet datasets: JSONL loading, persistence, class statistics, and
a deterministic synthetic-corpus generator for desk-scale experiments.

Dataset records are line-delimited JSON objects:

    {"id": "...", "text": "...", "label": "..."}   (label optional)

Unlabeled tweets are accepted at load time so the same loader serves
inference inputs; training entry points reject them separately.
"""

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .digest import atomic_write_text, digest_text
from .errors import ValidationError


@dataclass(frozen=True)
class RawTweet:
    """One source tweet, exactly as loaded. Text may be empty; cleaning
    decides its fate later."""

    id: str
    text: str
    label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("tweet id must be a nonempty string")


@dataclass(frozen=True)
class LabelDomain:
    name: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValidationError(f"label domain {self.name!r} needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"label domain {self.name!r} has duplicate labels")

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown label {label!r} for domain {self.name!r}") from None


NOT_RWEET = "not_rweet"
RWEET = "rweet"

BINARY = LabelDomain("binary", (NOT_RWEET, RWEET))
CATEGORICAL = LabelDomain(
    "categorical", ("money", "volunteer", "cloth", "shelter", "medical", "food")
)

DOMAINS = {d.name: d for d in (BINARY, CATEGORICAL)}


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of tweets over one label domain."""

    domain: LabelDomain
    tweets: tuple[RawTweet, ...]

    def __post_init__(self):
        seen = set()
        for tw in self.tweets:
            if tw.id in seen:
                raise ValidationError(f"duplicate tweet id {tw.id!r}")
            seen.add(tw.id)
            if tw.label is not None and tw.label not in self.domain:
                raise ValidationError(
                    f"unknown label {tw.label!r} for domain {self.domain.name!r}"
                )

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self):
        return iter(self.tweets)

    def labels(self) -> list[str | None]:
        return [tw.label for tw in self.tweets]

    def texts_by_id(self) -> dict[str, str]:
        return {tw.id: tw.text for tw in self.tweets}

    def require_labeled(self) -> None:
        for tw in self.tweets:
            if tw.label is None:
                raise ValidationError(f"tweet {tw.id!r} is unlabeled; training requires labels")

    def content_digest(self) -> str:
        parts = [f"{tw.id}\x1f{tw.text}\x1f{tw.label or ''}" for tw in self.tweets]
        return digest_text("\x1e".join(parts))


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict[str, int] = field(default_factory=dict)
    fractions: dict[str, float] = field(default_factory=dict)


def load_dataset(path, domain: LabelDomain) -> Dataset:
    """Load a JSONL dataset, validating labels against the domain.

    Raises ValidationError naming the offending line for malformed records,
    unknown labels, and duplicate ids. FileNotFoundError propagates.
    """
    path = Path(path)
    tweets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path.name}: line {lineno}: malformed JSON ({exc.msg})")
            if not isinstance(record, dict):
                raise ValidationError(f"{path.name}: line {lineno}: record is not an object")
            tweet_id = record.get("id")
            text = record.get("text")
            if not isinstance(tweet_id, str) or not tweet_id:
                raise ValidationError(f"{path.name}: line {lineno}: missing or empty 'id'")
            if not isinstance(text, str):
                raise ValidationError(f"{path.name}: line {lineno}: missing 'text'")
            label = record.get("label")
            if label is not None and not isinstance(label, str):
                raise ValidationError(f"{path.name}: line {lineno}: 'label' must be a string")
            if label is not None and label not in domain:
                raise ValidationError(
                    f"{path.name}: line {lineno}: unknown label {label!r} "
                    f"for domain {domain.name!r}"
                )
            tweets.append(RawTweet(tweet_id, text, label))
    return Dataset(domain, tuple(tweets))


def save_dataset(dataset: Dataset, path) -> None:
    lines = []
    for tw in dataset:
        record = {"id": tw.id, "text": tw.text}
        if tw.label is not None:
            record["label"] = tw.label
        lines.append(json.dumps(record, ensure_ascii=False))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def dataset_stats(dataset: Dataset) -> ClassDistribution:
    """Counts and fractions over labeled tweets; empty for unlabeled data."""
    counts: dict[str, int] = {}
    for tw in dataset:
        if tw.label is not None:
            counts[tw.label] = counts.get(tw.label, 0) + 1
    total = sum(counts.values())
    fractions = {label: n / total for label, n in counts.items()} if total else {}
    return ClassDistribution(counts, fractions)


# --- synthetic corpus -------------------------------------------------------
#
# Templates carry _resource_ / _location_ / _item_ slots. Request templates
# cover the three request forms seen in real disaster tweets (declarative,
# interrogative, imperative).

REQUEST_TEMPLATES = (
    # declarative
    "we are stuck at _location_ and need _resource_",
    "my family at _location_ has no _resource_ left",
    "people in _location_ still have no _resource_",
    "the _location_ shelter ran out of _resource_",
    "we lost everything in _location_ and need _resource_",
    # interrogative
    "where can we find _resource_ near _location_?",
    "can you bring _resource_ to _location_?",
    "does anyone have spare _resource_ for _location_?",
    "how can we get _resource_ in _location_?",
    # imperative
    "need _resource_ at _location_ please help",
    "please send _resource_ to _location_",
    "bring _resource_ to the _location_ camp now",
    "help us get _resource_ for _location_ families",
)

CHATTER_TEMPLATES = (
    "the storm passed over _location_ last night",
    "power is back on in most of _location_",
    "roads in _location_ reopened for traffic this morning",
    "the weather in _location_ is calm again today",
    "watched the news about _location_ with my neighbors",
    "stay strong _location_ #relief",
    "the _location_ team won their game yesterday",
    "walked around _location_ and took photos of the river",
    "schools in _location_ will open again on monday",
    "thinking of everyone in _location_ tonight",
)

CATEGORY_TEMPLATES = {
    "money": (
        "please donate money for _location_ relief",
        "raise funds for _location_ victims",
        "every dollar helps the _location_ relief fund",
        "send cash donations to the _location_ charity",
        "the _location_ fund needs more money now",
    ),
    "volunteer": (
        "volunteers needed to clear roads in _location_",
        "we need extra hands at the _location_ site",
        "sign up to volunteer for the _location_ cleanup",
        "join the volunteer crew working in _location_",
        "looking for volunteers to sort packages in _location_",
    ),
    "cloth": (
        "need warm clothes for kids in _location_",
        "please send jackets and blankets to _location_",
        "collecting coats and sweaters for _location_ families",
        "donate dry clothes for _location_ victims",
        "we ran out of socks and shirts at _location_",
    ),
    "shelter": (
        "need shelter at _location_ please help",
        "families at _location_ need a place to stay",
        "looking for housing near _location_ tonight",
        "the _location_ shelter is full where else can we stay?",
        "homes flooded in _location_ we need temporary shelter",
    ),
    "medical": (
        "need medicine for the injured at _location_",
        "blood donors needed at the _location_ hospital",
        "first aid kits required in _location_ urgently",
        "doctors and nurses needed at the _location_ clinic",
        "we need bandages and oxygen at _location_",
    ),
    "food": (
        "need food and water at _location_",
        "no meals left for families in _location_",
        "please send rice and canned food to _location_",
        "children in _location_ are hungry send food",
        "the _location_ kitchen needs bread and milk",
    ),
}

RESOURCES = (
    "food",
    "water",
    "shelter",
    "blankets",
    "medicine",
    "clothes",
    "fuel",
    "batteries",
    "generators",
    "supplies",
)

LOCATIONS = (
    "riverside",
    "bayview",
    "oakdale",
    "hillcrest",
    "northside",
    "lakeside",
    "midtown",
    "springfield",
    "the harbor district",
    "the east side",
)

_MENTION_NAMES = ("anna", "omar", "jess", "leo", "maria", "sam", "nina", "raj")
_URL_HOSTS = ("t.co", "x.co", "relief.org", "bit.ly")


def _fill(template: str, rng: random.Random) -> str:
    text = template.replace("_location_", rng.choice(LOCATIONS))
    text = text.replace("_resource_", rng.choice(RESOURCES))
    return text


def _noise_shape(rng: random.Random) -> dict:
    """Which decorations a tweet gets. Values are drawn separately so that
    near-duplicate pairs share the shape but not the surface text."""
    return {
        "rt": rng.random() < 0.10,
        "mention": rng.random() < 0.35,
        "url": rng.random() < 0.30,
        "number": rng.random() < 0.25,
        "shout": rng.random() < 0.25,
        "bang": rng.random() < 0.30,
    }


def _decorate(core: str, shape: dict, rng: random.Random) -> str:
    """Apply noise that washes out during cleaning: placeholder-bound tags,
    digits, casing, and trailing punctuation."""
    text = core
    if shape["number"]:
        text = f"{text} {rng.randint(2, 500)} people affected"
    if shape["mention"]:
        text = f"{text} @{rng.choice(_MENTION_NAMES)}{rng.randint(1, 99)}"
    if shape["url"]:
        tail = "".join(rng.choice("abcdefghjkmnpqrstuvwxyz23456789") for _ in range(6))
        text = f"{text} http://{rng.choice(_URL_HOSTS)}/{tail}"
    if shape["rt"]:
        text = f"RT @{rng.choice(_MENTION_NAMES)}: {text}"
    if shape["shout"]:
        words = text.split()
        pos = rng.randrange(len(words))
        words[pos] = words[pos].upper()
        text = " ".join(words)
    if shape["bang"]:
        text = text + rng.choice(("!", "!!", "."))
    return text


def _templates_for(domain: LabelDomain, label: str):
    if domain.name == BINARY.name:
        return REQUEST_TEMPLATES if label == RWEET else CHATTER_TEMPLATES
    if domain.name == CATEGORICAL.name:
        return CATEGORY_TEMPLATES[label]
    raise ValidationError(f"no synthetic templates for domain {domain.name!r}")


def synth_corpus(seed: int, size: int, domain: LabelDomain) -> Dataset:
    """Deterministic labeled corpus of `size` tweets over `domain`.

    Every label is represented. Roughly one tweet in twelve is emitted as a
    near-duplicate pair member: same template and slot fill, different
    mentions, URLs, digits, and casing, so the pair collapses to a single
    tweet after cleaning.
    """
    if size < len(domain.labels):
        raise ValidationError(
            f"size {size} is smaller than the {len(domain.labels)}-label domain"
        )
    rng = random.Random(seed)

    n_dupes = size // 12 if size >= 24 else 0
    n_base = size - n_dupes

    labels = list(domain.labels)
    if domain.name == BINARY.name:
        weights = [0.44, 0.56]  # slight request-heavy skew, like real data
    else:
        weights = [1.0 / len(labels)] * len(labels)
    assigned = list(labels)  # guarantee every label appears
    assigned += rng.choices(labels, weights=weights, k=n_base - len(labels))
    rng.shuffle(assigned)

    entries = []  # (label, core, shape)
    for label in assigned:
        template = rng.choice(_templates_for(domain, label))
        core = _fill(template, rng)
        entries.append((label, core, _noise_shape(rng)))

    # duplicate pair members: re-decorate an existing core with fresh values
    for _ in range(n_dupes):
        label, core, shape = entries[rng.randrange(len(entries))]
        entries.append((label, core, shape))

    tweets = []
    for i, (label, core, shape) in enumerate(entries):
        text = _decorate(core, shape, rng)
        tweets.append(RawTweet(f"s{seed}-{i:05d}", text, label))
    return Dataset(domain, tuple(tweets))
