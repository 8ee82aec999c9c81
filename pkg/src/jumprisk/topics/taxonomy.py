"""The six jump topic categories."""
from __future__ import annotations

from dataclasses import dataclass

UNATTRIBUTABLE = 0
NONE_OF_THE_ABOVE = 6


@dataclass(frozen=True)
class Topic:
    id: int
    name: str
    definition: str
    short: str


TAXONOMY: tuple[Topic, ...] = (
    Topic(1, "U.S. Policy Actions (Monetary, Fiscal, & Political)",
          "Federal Reserve rate moves, emergency facilities, policy statements, and major "
          "fiscal or political events.", "Policy"),
    Topic(2, "U.S. Macro Data Surprises",
          "Releases of macroeconomic information such as retail sales, GDP, inflation, payrolls, "
          "jobless claims, etc., that diverge sharply from consensus.", "Macro"),
    Topic(3, "Geopolitical & Security Events",
          "Developments in cross-border negotiations or tensions. Terror attacks, war-risk "
          "headlines, or news that eases/tightens military tensions.", "Geopol."),
    Topic(4, "Corporate Earnings & Guidance",
          "Earnings/Warnings from bellwether firms or industries that drag or lift the whole "
          "market.", "Corp."),
    Topic(5, "International Market Spillovers",
          "Significant moves or outlook changes in major foreign equity markets, commodities, "
          "energy prices, or FX rates. Overseas monetary/fiscal policy shifts, trade measures, "
          "capital-flow controls, or other cross-border actions that carry global risk "
          "implications.", "Intl."),
    Topic(6, "None of the Above", "Material news that do not fit the above definitions.",
          "Unclass."),
)

CATEGORY_IDS = tuple(t.id for t in TAXONOMY)
SHORT_NAMES = {t.id: t.short for t in TAXONOMY}
SHORT_NAMES[UNATTRIBUTABLE] = "Unattrib."


def topic(cid: int) -> Topic:
    for t in TAXONOMY:
        if t.id == cid:
            return t
    raise KeyError(f"unknown topic category {cid}")


def taxonomy_block() -> str:
    """Id, name and definition of every category, one per line."""
    return "\n".join(f"{t.id}. {t.name}: {t.definition}" for t in TAXONOMY)
