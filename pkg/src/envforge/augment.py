"""Goal-irrelevant observation augmentation.

Injects a controlled volume of distractor text into agent observations
while leaving the simulator state, admissible actions, rewards, and
transitions untouched. The volume knob ``epsilon`` is denominated in
estimated tokens and maps to sentence/entry/line counts through exact
floor arithmetic; the per-trajectory coin ``prob`` decides whether a
whole episode sees augmented observations.

Every injected fragment is recorded as a half-open byte span of the final
text, so deleting all spans recovers the clean rendering byte-for-byte.
All rendered content in this package is ASCII, which keeps byte offsets
equal to string offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .rng import Rng

# --- distractor vocabularies ------------------------------------------------

ALF_OBJECT_TYPES = (
    "bowl", "cup", "pan", "spoon", "fork", "knife", "plate", "mug",
    "bottle", "can", "glass", "basket", "tray", "vase", "jar", "container",
    "jug", "thermos", "pitcher", "dish", "tumbler", "sponge", "towel",
    "napkin", "rack", "coaster", "utensil", "lid",
)

ALF_DESCRIPTORS = (
    "cracked", "dirty", "slightly burnt", "covered in dust",
    "wrapped in foil", "sticky", "still warm", "rusty", "filled with water",
    "emits a faint smell", "has some liquid inside", "tipped over",
    "seems unused", "greasy", "wet on the surface", "has a faint label",
    "smudged", "with faded color", "shows fingerprints",
)

ALF_TEMPLATES = (
    "You notice a {obj} that looks {desc}.",
    "Near the sink, there is a {obj} that is {desc}.",
)

WEB_CATEGORIES = (
    "rompers", "jumpsuits", "blouses", "cozy cardigans", "pajamas",
    "loungewear sets", "button-down tops", "long sleeve tees",
    "casual jackets", "knitwear", "soft sweaters", "thermal layers",
    "fleece pullovers", "v-neck tunics", "red outfits", "plus-size picks",
    "cropped hoodies", "layered looks", "textured knits", "everyday basics",
)

WEB_PROMOS = (
    "30% off", "new arrivals", "trending now", "selling fast",
    "limited edition", "back in stock", "editor's pick",
    "members-only deal", "must-have looks", "staff favorite", "top-rated",
    "recommended for daily wear", "cozy & cute", "perfect for layering",
    "style spotlight", "hand-picked for you", "fan favorites",
    "most loved by shoppers", "inspired by you",
    "perfect for your capsule wardrobe",
)

WEB_TRIVIAL_FEATURES = (
    "{fabric: machine wash cold}",
    "{shipping note: ships within 5-7 days}",
    "{sizing tip: runs half size large}",
    "{model info: model is 5'8'' wearing size medium}",
    "{brand description: known for cozy minimalism}",
    "{care label: made in Indonesia}",
    "{origin: eco-conscious packaging}",
    "{batch code: Spring 2024 release}",
    "{warehouse tag: popular for travel & errands}",
    "{return policy: soft fleece interior}",
    "{manufacturing month: delicate stitching on seams}",
    "{recommendation: designed for colder climates}",
    "{intended use: do not iron over print}",
    "{layering advice: packaged folded in bag}",
)

WEB_TRIVIAL_PRODUCT_TYPES = (
    "romper", "jumpsuit", "blouse", "tunic", "pajama top", "sweater",
    "tank top", "hoodie", "cardigan", "bodysuit", "thermal shirt", "dress",
    "coverall", "camisole",
)

WEB_NONTARGET_FEATURES = (
    "sleeveless", "misleadingly tagged", "overpriced", "heavily discounted",
    "out of stock", "not available in large size", "no reviews",
    "size runs small", "fabric mismatch", "zipper broken",
    "category mislabel", "style mismatch", "faded color",
    "missing product images", "customer complaints",
)

SOKOBAN_OBJECTS = (
    "Broken crate", "Sealed door", "Pile of rubble", "Faded sign",
    "Leaking pipe", "Loose tile", "Stacked boxe",
)

SOKOBAN_LOCATIONS = (
    "outside the room", "beyond the wall", "inaccessible",
    "behind a collapsed wall", "on a blocked corridor",
)

_AD_TEMPLATE = "[AD] {desc} --- shop {cat} today!"
_WEB_TRIVIAL_TEMPLATES = (
    "Women {desc} {obj} --- likely unsuitable",
    "Warning: {desc} {obj} (cannot be selected)",
)
_SOKOBAN_TEMPLATE = "({r}, {c}) shows a {obj} ({desc}; unreachable)."

_ASIN_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class AugmentSpec:
    """Injection control: volume, per-trajectory probability, page fill, seed."""

    epsilon: float
    prob: float
    alpha: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("prob must be in [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


# --- volume formulas ---------------------------------------------------------
#
# Exact rational arithmetic: a volume like 120 with alpha 0.5 must floor to
# 6, which naive float products miss by one ulp.


def alf_sentence_count(epsilon: float) -> int:
    """Household distractor sentences: floor(epsilon / 12)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return math.floor(Fraction(epsilon) / 12)


def web_result_count(epsilon: float, alpha: float) -> int:
    """Result-page injected entries: min(floor((epsilon/100) * alpha * 10), 10)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    return min(math.floor(Fraction(epsilon) / 100 * Fraction(alpha) * 10), 10)


def web_feature_count(epsilon: float) -> int:
    """Detail-page trivial-feature sentences: max(1, floor(epsilon / 25))."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return max(1, math.floor(Fraction(epsilon) / 25))


def web_ad_count(epsilon: float) -> int:
    """Detail-page ad sentences: max(1, floor(epsilon / 30))."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return max(1, math.floor(Fraction(epsilon) / 30))


def sokoban_line_count(epsilon: float) -> int:
    """Appended unreachable-coordinate lines: max(1, floor(epsilon / 10))."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return max(1, math.floor(Fraction(epsilon) / 10))


def maybe_augment(spec: AugmentSpec, rng: Rng) -> bool:
    """Per-trajectory coin: True applies augmentation to every observation
    of the episode, False to none."""
    return rng.uniform() < spec.prob


# --- insertion machinery -----------------------------------------------------


def insert_fragments(body: str, inserts: list[tuple[int, str]]) -> tuple[str, list[tuple[int, int]]]:
    """Insert pre-built fragments at byte positions of ``body``.

    Fragments landing on the same position are kept in list order. Returns
    the final text and one span per fragment, sorted ascending.
    """
    by_pos: dict[int, list[str]] = {}
    for pos, frag in inserts:
        by_pos.setdefault(pos, []).append(frag)
    parts = []
    spans = []
    prev = 0
    offset = 0
    for pos in sorted(by_pos):
        parts.append(body[prev:pos])
        offset += pos - prev
        for frag in by_pos[pos]:
            parts.append(frag)
            spans.append((offset, offset + len(frag)))
            offset += len(frag)
        prev = pos
    parts.append(body[prev:])
    return "".join(parts), spans


def _sentence_positions(body: str) -> list[int]:
    """Positions where a new sentence may start: after each ". " plus the end."""
    positions = []
    i = body.find(". ")
    while i != -1:
        positions.append(i + 2)
        i = body.find(". ", i + 1)
    positions.append(len(body))
    return positions


def format_price(value: float) -> str:
    """Dollar string in catalog style: $3.78, $18.5, $8."""
    return f"${value:g}"


def _quote(segment: str) -> str:
    return f"'{segment}'"


def _sep_join(segments: list[str]) -> str:
    return " [SEP] ".join(_quote(s) for s in segments)


# --- per-domain augmenters ---------------------------------------------------


def augment_alfworld(
    body: str,
    scene_objects: list[tuple[str, int]],
    spec: AugmentSpec,
    rng: Rng,
) -> tuple[str, list[tuple[int, int]]]:
    """Insert distractor-object sentences at random sentence boundaries.

    A sampled object type that collides with a scene type receives the
    smallest ID not used by any scene object of that type (nor any
    previously injected distractor of that type).
    """
    k = alf_sentence_count(spec.epsilon)
    if k == 0:
        return body, []
    positions = _sentence_positions(body)
    taken: dict[str, set[int]] = {}
    for otype, oid in scene_objects:
        taken.setdefault(otype, set()).add(oid)
    inserts = []
    for _ in range(k):
        otype = rng.choice(ALF_OBJECT_TYPES)
        desc = rng.choice(ALF_DESCRIPTORS)
        template = rng.choice(ALF_TEMPLATES)
        ids = taken.setdefault(otype, set())
        oid = 1
        while oid in ids:
            oid += 1
        ids.add(oid)
        sentence = template.format(obj=f"{otype} {oid}", desc=desc)
        pos = positions[rng.randrange(len(positions))]
        frag = (" " + sentence) if pos == len(body) else (sentence + " ")
        inserts.append((pos, frag))
    return insert_fragments(body, inserts)


def _fake_asin(rng: Rng, organic: set[str]) -> str:
    while True:
        asin = "B0" + "".join(rng.choice(_ASIN_CHARS) for _ in range(8))
        if asin not in organic:
            return asin


def augment_webshop(
    body: str,
    context: dict,
    spec: AugmentSpec,
    rng: Rng,
) -> tuple[str, list[tuple[int, int]]]:
    """Inject ads/trivial products on result pages, or append trivial-feature
    and ad sentences after the description block on detail pages.

    Trivial products carry fresh fake ASINs that never appear among the
    clickable actions. ``context`` comes from the shop renderer and holds
    the page kind plus byte anchors of the organic layout.
    """
    kind = context["page_kind"]
    if kind == "results":
        k = web_result_count(spec.epsilon, spec.alpha)
        if k == 0:
            return body, []
        slots = context["item_positions"] + [len(body)]
        organic = set(context["organic_asins"])
        inserts = []
        for _ in range(k):
            if rng.randrange(2) == 0:
                promo = rng.choice(WEB_PROMOS)
                cat = rng.choice(WEB_CATEGORIES)
                payload = _sep_join([_AD_TEMPLATE.format(desc=promo, cat=cat)])
            else:
                ptype = rng.choice(WEB_TRIVIAL_PRODUCT_TYPES)
                feature = rng.choice(WEB_NONTARGET_FEATURES)
                template = rng.choice(_WEB_TRIVIAL_TEMPLATES)
                asin = _fake_asin(rng, organic)
                organic.add(asin)
                price = float(rng.randint(5, 59)) + rng.randint(0, 99) / 100.0
                title = template.format(desc=feature, obj=ptype)
                payload = _sep_join([asin, title, format_price(price)])
            pos = slots[rng.randrange(len(slots))]
            frag = (" [SEP] " + payload) if pos == len(body) else (payload + " [SEP] ")
            inserts.append((pos, frag))
        return insert_fragments(body, inserts)
    if kind == "detail":
        anchor = context["detail_anchor"]
        inserts = []
        for _ in range(web_feature_count(spec.epsilon)):
            feature = rng.choice(WEB_TRIVIAL_FEATURES)
            inserts.append((anchor, " [SEP] " + _quote(feature)))
        for _ in range(web_ad_count(spec.epsilon)):
            promo = rng.choice(WEB_PROMOS)
            cat = rng.choice(WEB_CATEGORIES)
            inserts.append((anchor, " [SEP] " + _quote(_AD_TEMPLATE.format(desc=promo, cat=cat))))
        return insert_fragments(body, inserts)
    return body, []


def augment_sokoban(
    body: str,
    height: int,
    width: int,
    spec: AugmentSpec,
    rng: Rng,
) -> tuple[str, list[tuple[int, int]]]:
    """Append lines describing objects at distinct out-of-bounds coordinates."""
    k = sokoban_line_count(spec.epsilon)
    margin = 2
    while (height + 2 * margin) * (width + 2 * margin) - height * width < k:
        margin += 1
    cells = [
        (r, c)
        for r in range(-margin, height + margin)
        for c in range(-margin, width + margin)
        if not (0 <= r < height and 0 <= c < width)
    ]
    chosen = rng.sample(cells, k)
    inserts = []
    for r, c in chosen:
        obj = rng.choice(SOKOBAN_OBJECTS)
        desc = rng.choice(SOKOBAN_LOCATIONS)
        line = _SOKOBAN_TEMPLATE.format(r=r, c=c, obj=obj, desc=desc)
        inserts.append((len(body), "\n" + line))
    return insert_fragments(body, inserts)


def augment_observation(
    env_id: str,
    context: dict,
    body: str,
    spec: AugmentSpec,
    rng: Rng,
) -> tuple[str, list[tuple[int, int]]]:
    """Dispatch to the environment's augmenter; returns (text, spans)."""
    if env_id == "sokoban":
        return augment_sokoban(body, context["height"], context["width"], spec, rng)
    if env_id == "house":
        return augment_alfworld(body, context["scene_objects"], spec, rng)
    if env_id == "shop":
        return augment_webshop(body, context, spec, rng)
    raise ValueError(f"unknown environment: {env_id}")
