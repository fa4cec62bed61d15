"""Deterministic catalog-shopping world: search, pagination, detail pages.

Pages render in the [SEP]-joined layout, each segment wrapped in single
quotes: search page, paginated result listings (ten items per page), and
product detail pages with option grids. A purchase succeeds when the
bought product carries every required attribute, every required option
was clicked, and the paid price (the low end of the product's range)
stays within the goal's cap.

The catalog is immutable after generation and shareable; per-episode page
state lives in :class:`ShopSession`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .augment import format_price
from .core import EnvAdapter, EnvforgeError
from .rng import Rng, derive

NOUNS = (
    "shirt", "dress", "jacket", "sweater", "hoodie",
    "skirt", "coat", "blouse", "pants", "shorts",
)

ADJECTIVES = (
    "slim fit", "long sleeve", "short sleeve", "classic fit", "cotton",
    "linen", "waterproof", "lightweight", "breathable", "vintage",
    "casual", "formal", "striped", "floral", "plain", "stretch",
)

COLORS = ("black", "white", "red", "blue", "green", "navy", "beige", "gray")
SIZES = ("small", "medium", "large", "x-large", "xx-large")

PER_PAGE = 10
GENERATION_RETRIES = 100
_ASIN_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class InfeasibleGoal(EnvforgeError):
    """No generated product satisfies the sampled goal."""


@dataclass
class Product:
    asin: str
    title: str
    attributes: set[str]
    options: dict[str, list[str]]
    price_low: float
    price_high: float

    def price_str(self) -> str:
        if self.price_low == self.price_high:
            return format_price(self.price_low)
        return f"{format_price(self.price_low)} to {format_price(self.price_high)}"


@dataclass
class ShopGoal:
    required_attributes: set[str]
    required_options: dict[str, str]
    price_cap: float


@dataclass
class Catalog:
    products: list[Product]
    goal: ShopGoal
    task_text: str
    query: str

    def __post_init__(self):
        self.by_asin = {p.asin: p for p in self.products}


@dataclass
class ShopPage:
    kind: str  # "search" | "results" | "detail"
    query: Optional[str] = None
    page_index: int = 1
    visible_asins: list[str] = field(default_factory=list)
    selected_options: dict[str, str] = field(default_factory=dict)
    focused_asin: Optional[str] = None


def _tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text.lower()))


def _cents(rng: Rng, lo: int, hi: int) -> float:
    return rng.randint(lo, hi) + rng.randint(0, 99) / 100.0


def generate_catalog(seed: int, n_products: int = 50) -> Catalog:
    """Sample products and a goal satisfiable by at least one of them."""
    if n_products < 10:
        raise ValueError("n_products must be >= 10")
    rng = Rng(derive(seed, "shop gen"))
    used_asins: set[str] = set()
    products = []
    for _ in range(n_products):
        while True:
            asin = "B0" + "".join(rng.choice(_ASIN_CHARS) for _ in range(8))
            if asin not in used_asins:
                used_asins.add(asin)
                break
        noun = rng.choice(NOUNS)
        adjs = rng.sample(ADJECTIVES, 3)
        colors = rng.sample(COLORS, rng.randint(2, 4))
        sizes = rng.sample(SIZES, rng.randint(2, 4))
        low = _cents(rng, 3, 49)
        high = low if rng.randrange(100) < 30 else round(low + _cents(rng, 1, 15), 2)
        products.append(
            Product(
                asin=asin,
                title=" ".join(a.title() for a in adjs) + " " + noun.title(),
                attributes=set(adjs) | {noun},
                options={"color": colors, "size": sizes},
                price_low=low,
                price_high=high,
            )
        )

    for _ in range(GENERATION_RETRIES):
        target = products[rng.randrange(n_products)]
        noun = next(a for a in target.attributes if a in NOUNS)
        adjs = sorted(target.attributes - {noun})
        a1, a2 = rng.sample(adjs, 2)
        color = rng.choice(target.options["color"])
        size = rng.choice(target.options["size"])
        cap = round(target.price_low + _cents(rng, 1, 10), 2)
        goal = ShopGoal(
            required_attributes={a1, a2, noun},
            required_options={"color": color, "size": size},
            price_cap=cap,
        )
        if any(_product_qualifies(p, goal) for p in products):
            task = (
                f"Find me {a1}, {a2} {noun} with color: {color}, "
                f"and size: {size}, and price lower than {cap:.2f} dollars"
            )
            return Catalog(
                products=products,
                goal=goal,
                task_text=task,
                query=f"{a1} {a2} {noun}",
            )
    raise InfeasibleGoal("no satisfiable goal within retry budget")


def _product_qualifies(p: Product, goal: ShopGoal) -> bool:
    return (
        goal.required_attributes <= p.attributes
        and all(v in p.options.get(k, []) for k, v in goal.required_options.items())
        and p.price_low <= goal.price_cap
    )


def search(catalog: Catalog, query: str) -> list[str]:
    """Rank the whole catalog by query-token overlap with title+attributes,
    ties broken by ASIN ascending."""
    if not query:
        raise ValueError("query must be non-empty")
    q = _tokens(query)
    scored = []
    for p in catalog.products:
        doc = _tokens(p.title) | set().union(*(_tokens(a) for a in p.attributes))
        scored.append((-len(q & doc), p.asin))
    scored.sort()
    return [asin for _, asin in scored]


def goal_satisfied(
    product: Product,
    selected_options: dict[str, str],
    paid_price: float,
    goal: ShopGoal,
) -> bool:
    return (
        goal.required_attributes <= product.attributes
        and all(selected_options.get(k) == v for k, v in goal.required_options.items())
        and paid_price <= goal.price_cap
    )


def _quote(seg: str) -> str:
    return f"'{seg}'"


def _join_with_meta(segments: list[str], mark_from: dict[int, str]) -> tuple[str, dict[str, int]]:
    """Join quoted segments with " [SEP] ", returning byte anchors.

    ``mark_from`` maps a segment index to a label; "start" labels record
    the offset where that segment's quote opens, "after" labels the offset
    just past the segment's closing quote.
    """
    parts = []
    anchors: dict[str, int] = {}
    offset = 0
    for i, seg in enumerate(segments):
        if i > 0:
            parts.append(" [SEP] ")
            offset += 7
        label = mark_from.get(i)
        if label and label.startswith("start:"):
            anchors[label] = offset
        quoted = _quote(seg)
        parts.append(quoted)
        offset += len(quoted)
        if label and label.startswith("after:"):
            anchors[label] = offset
    return "".join(parts), anchors


class ShopSession:
    """Mutable page state over an immutable catalog."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.page = ShopPage(kind="search")
        self.ranked: list[str] = []
        self.done = False
        self.purchase: Optional[tuple[str, dict[str, str], float]] = None

    # -- rendering ----------------------------------------------------------

    def render(self) -> tuple[str, dict]:
        page = self.page
        if page.kind == "search":
            return _quote("Search"), {"page_kind": "search"}
        if page.kind == "results":
            total = len(self.ranked)
            pages = math.ceil(total / PER_PAGE)
            segments = ["Back to Search"]
            if page.page_index > 1:
                segments.append("< Prev")
            segments.append(f"Page {page.page_index} (Total results: {total})")
            if page.page_index < pages:
                segments.append("Next >")
            marks = {}
            for asin in page.visible_asins:
                p = self.catalog.by_asin[asin]
                marks[len(segments)] = f"start:{asin}"
                segments.extend([p.asin, p.title, p.price_str()])
            text, anchors = _join_with_meta(segments, marks)
            return text, {
                "page_kind": "results",
                "item_positions": [anchors[f"start:{a}"] for a in page.visible_asins],
                "organic_asins": list(page.visible_asins),
            }
        p = self.catalog.by_asin[page.focused_asin]
        segments = ["Back to Search", "< Prev"]
        for opt_name in sorted(p.options):
            segments.append(opt_name)
            segments.extend(p.options[opt_name])
        segments.append(p.title)
        segments.append(f"Price: {p.price_str()}")
        segments.append("Rating: N.A.")
        desc_index = len(segments)
        segments.append("Description")
        segments.extend(["Features", "Reviews", "Buy Now"])
        text, anchors = _join_with_meta(segments, {desc_index: "after:description"})
        return text, {
            "page_kind": "detail",
            "detail_anchor": anchors["after:description"],
            "organic_asins": [p.asin],
        }

    # -- actions ------------------------------------------------------------

    def admissible(self) -> list[str]:
        page = self.page
        if self.done:
            return []
        if page.kind == "search":
            return [f"search[{self.catalog.query}]"]
        if page.kind == "results":
            total_pages = math.ceil(len(self.ranked) / PER_PAGE)
            acts = ["click[back to search]"]
            if page.page_index > 1:
                acts.append("click[< prev]")
            if page.page_index < total_pages:
                acts.append("click[next >]")
            acts.extend(f"click[{a.lower()}]" for a in page.visible_asins)
            return acts
        p = self.catalog.by_asin[page.focused_asin]
        acts = ["click[back to search]", "click[< prev]"]
        for opt_name in sorted(p.options):
            acts.extend(f"click[{v}]" for v in p.options[opt_name])
        acts.append("click[buy now]")
        return acts

    def step(self, action: str) -> bool:
        """Apply one action string; False when it is not recognized here."""
        if self.done:
            return False
        page = self.page
        if page.kind == "search":
            m = re.fullmatch(r"search\[(.+)\]", action)
            if not m:
                return False
            self.ranked = search(self.catalog, m.group(1))
            self._show_results(m.group(1), 1)
            return True
        m = re.fullmatch(r"click\[(.+)\]", action)
        if not m:
            return False
        target = m.group(1)
        if target == "back to search":
            self.page = ShopPage(kind="search")
            return True
        if page.kind == "results":
            total_pages = math.ceil(len(self.ranked) / PER_PAGE)
            if target == "next >" and page.page_index < total_pages:
                self._show_results(page.query, page.page_index + 1)
                return True
            if target == "< prev" and page.page_index > 1:
                self._show_results(page.query, page.page_index - 1)
                return True
            visible = {a.lower(): a for a in page.visible_asins}
            if target in visible:
                self.page = ShopPage(
                    kind="detail",
                    query=page.query,
                    page_index=page.page_index,
                    visible_asins=list(page.visible_asins),
                    focused_asin=visible[target],
                )
                return True
            return False
        if page.kind == "detail":
            p = self.catalog.by_asin[page.focused_asin]
            if target == "< prev":
                self._show_results(page.query, page.page_index)
                return True
            if target == "buy now":
                self.done = True
                self.purchase = (p.asin, dict(page.selected_options), p.price_low)
                return True
            for opt_name, values in p.options.items():
                if target in values:
                    page.selected_options[opt_name] = target
                    return True
            return False
        return False

    def _show_results(self, query: str, index: int) -> None:
        lo = (index - 1) * PER_PAGE
        self.page = ShopPage(
            kind="results",
            query=query,
            page_index=index,
            visible_asins=self.ranked[lo : lo + PER_PAGE],
        )

    def is_success(self) -> bool:
        if self.purchase is None:
            return False
        asin, options, paid = self.purchase
        return goal_satisfied(self.catalog.by_asin[asin], options, paid, self.catalog.goal)


def catalog_to_dict(catalog: Catalog) -> dict:
    """JSON-exportable catalog snapshot for inspection and reuse."""
    return {
        "products": [
            {
                "asin": p.asin,
                "title": p.title,
                "attributes": sorted(p.attributes),
                "options": {k: list(v) for k, v in sorted(p.options.items())},
                "price_low": p.price_low,
                "price_high": p.price_high,
            }
            for p in catalog.products
        ],
        "goal": {
            "required_attributes": sorted(catalog.goal.required_attributes),
            "required_options": dict(sorted(catalog.goal.required_options.items())),
            "price_cap": catalog.goal.price_cap,
            "task": catalog.task_text,
        },
    }


class ShopEnv(EnvAdapter):
    """Episode adapter over the shopping world."""

    env_id = "shop"

    def __init__(self, n_products: int = 50):
        self.n_products = n_products
        self.session: Optional[ShopSession] = None
        self._meta: dict = {}

    def reset(self, seed: int) -> None:
        catalog = generate_catalog(seed, self.n_products)
        self.session = ShopSession(catalog)

    def render(self) -> str:
        text, meta = self.session.render()
        self._meta = meta
        return text

    def task(self) -> str:
        return self.session.catalog.task_text

    def admissible(self) -> list[str]:
        return self.session.admissible()

    def try_apply(self, action: str) -> bool:
        return self.session.step(action)

    def is_terminal(self) -> bool:
        return self.session.done

    def is_success(self) -> bool:
        return self.session.is_success()

    def fingerprint(self):
        page = self.session.page
        purchase = self.session.purchase
        return (
            page.kind,
            page.query,
            page.page_index,
            page.focused_asin,
            tuple(sorted(page.selected_options.items())),
            self.session.done,
            None if purchase is None else (purchase[0], tuple(sorted(purchase[1].items()))),
        )

    def augment_context(self) -> dict:
        return dict(self._meta)
