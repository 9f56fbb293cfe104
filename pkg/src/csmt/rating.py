"""Human-evaluation aggregation: factual score sheets, ranking
decomposition, and Glicko ratings over one rating period.

Rankings from the survey decompose into all ordered pairs (a length-k
ranking yields k*(k-1)/2 outcomes).  Ratings update simultaneously
from the pre-period values in a single batch; there is no deviation
growth between periods.  The reported interval is rating +/- 2*RD.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import MissingSystem, UnknownSystem

__all__ = [
    "INITIAL_RATING",
    "INITIAL_RD",
    "PlayerRating",
    "PairwiseOutcome",
    "PreferenceRanking",
    "FactualScoreSheet",
    "LeaderboardRow",
    "initial_ratings",
    "glicko_rate",
    "confidence_interval",
    "format_rating",
    "rankings_to_pairwise",
    "factual_aggregate",
    "leaderboard",
]

INITIAL_RATING = 1500.0
INITIAL_RD = 350.0

_Q = math.log(10.0) / 400.0
_3Q2_PI2 = 3.0 * _Q * _Q / (math.pi * math.pi)


@dataclass(frozen=True, slots=True)
class PlayerRating:
    system_id: str
    rating: float = INITIAL_RATING
    rd: float = INITIAL_RD

    def __post_init__(self):
        if self.rd <= 0:
            raise ValueError("rd must be positive")


@dataclass(frozen=True, slots=True)
class PairwiseOutcome:
    winner: str
    loser: str

    def __post_init__(self):
        if self.winner == self.loser:
            raise ValueError(f"{self.winner!r} cannot beat itself")


@dataclass(frozen=True)
class PreferenceRanking:
    """One respondent's best-to-worst order for one question."""

    respondent_id: str
    question_id: str
    order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if len(set(self.order)) != len(self.order):
            raise ValueError("ranking repeats an entry")


@dataclass(frozen=True)
class FactualScoreSheet:
    """One evaluator's factual scores, several per system.

    Scores live on the 1-7 band in half steps; 0 is accepted as the
    floor for output with no usable medical content.
    """

    evaluator_id: str
    scores: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        if not self.evaluator_id:
            raise ValueError("evaluator_id must be non-empty")
        frozen = {}
        for system, values in self.scores.items():
            values = tuple(float(v) for v in values)
            if not values:
                raise ValueError(f"no scores for system {system!r}")
            for v in values:
                if not 0.0 <= v <= 7.0 or not (v * 2).is_integer():
                    raise ValueError(
                        f"score {v} for {system!r} not on the half-step 0-7 band"
                    )
            frozen[system] = values
        object.__setattr__(self, "scores", frozen)


@dataclass(frozen=True, slots=True)
class LeaderboardRow:
    system_id: str
    rating: float
    rd: float
    ci_lo: float
    ci_hi: float
    games: int


def initial_ratings(system_ids: Iterable[str]) -> dict[str, PlayerRating]:
    """Fresh ratings at (1500, 350) for every system."""
    return {sid: PlayerRating(sid) for sid in system_ids}


def _g(rd: float) -> float:
    return 1.0 / math.sqrt(1.0 + _3Q2_PI2 * rd * rd)


def _expect(rating: float, other: PlayerRating) -> float:
    return 1.0 / (1.0 + 10.0 ** (-_g(other.rd) * (rating - other.rating) / 400.0))


def glicko_rate(
    ratings: Mapping[str, PlayerRating],
    games: Iterable[PairwiseOutcome],
) -> dict[str, PlayerRating]:
    """Update all ratings from one batch of games.

    Every update reads the pre-period opponent ratings, so the order
    of games never matters.  Systems with no games keep their rating
    unchanged.
    raises UnknownSystem when a game names a system missing from
    ratings.
    """
    pre = dict(ratings)
    per_player: dict[str, list[tuple[PlayerRating, float]]] = {s: [] for s in pre}
    for game in games:
        for side, score in ((game.winner, 1.0), (game.loser, 0.0)):
            if side not in pre:
                raise UnknownSystem(f"game references unknown system {side!r}")
        per_player[game.winner].append((pre[game.loser], 1.0))
        per_player[game.loser].append((pre[game.winner], 0.0))

    out: dict[str, PlayerRating] = {}
    for sid, player in pre.items():
        opponents = per_player[sid]
        if not opponents:
            out[sid] = player
            continue
        d2_inv = 0.0
        swing = 0.0
        for opp, score in opponents:
            g_j = _g(opp.rd)
            e_j = _expect(player.rating, opp)
            d2_inv += g_j * g_j * e_j * (1.0 - e_j)
            swing += g_j * (score - e_j)
        d2_inv *= _Q * _Q
        denom = 1.0 / (player.rd * player.rd) + d2_inv
        rating = player.rating + (_Q / denom) * swing
        rd = math.sqrt(1.0 / denom)
        out[sid] = PlayerRating(sid, rating, rd)
    return out


def confidence_interval(player: PlayerRating) -> tuple[float, float]:
    """(rating - 2*RD, rating + 2*RD)."""
    return (player.rating - 2.0 * player.rd, player.rating + 2.0 * player.rd)


def format_rating(player: PlayerRating) -> str:
    """Leaderboard cell form, e.g. '1638.57 ± 49.39' (the ± half-width
    is 2*RD)."""
    return f"{player.rating:.2f} ± {2.0 * player.rd:.2f}"


def rankings_to_pairwise(
    ranking: PreferenceRanking | Sequence[str],
) -> list[PairwiseOutcome]:
    """All ordered pairs implied by a best-to-worst ranking.

    A length-k ranking yields k*(k-1)/2 outcomes.
    """
    order = ranking.order if isinstance(ranking, PreferenceRanking) else tuple(ranking)
    out: list[PairwiseOutcome] = []
    for i, winner in enumerate(order):
        for loser in order[i + 1 :]:
            out.append(PairwiseOutcome(winner, loser))
    return out


def factual_aggregate(
    sheets: Iterable[FactualScoreSheet], strict: bool = False
) -> dict[str, float]:
    """Mean over evaluators of each evaluator's median score.

    An even score count takes the mean of the two middle values.  With
    strict, every sheet must cover every system (MissingSystem);
    otherwise a system's mean runs over the sheets that scored it.
    """
    sheets = list(sheets)
    systems: list[str] = []
    for sheet in sheets:
        for system in sheet.scores:
            if system not in systems:
                systems.append(system)
    out: dict[str, float] = {}
    for system in systems:
        medians: list[float] = []
        for sheet in sheets:
            if system not in sheet.scores:
                if strict:
                    raise MissingSystem(
                        f"evaluator {sheet.evaluator_id!r} has no scores for {system!r}"
                    )
                continue
            medians.append(statistics.median(sheet.scores[system]))
        out[system] = sum(medians) / len(medians)
    return out


def leaderboard(
    ratings: Mapping[str, PlayerRating],
    games: Iterable[PairwiseOutcome] = (),
) -> list[LeaderboardRow]:
    """Rows sorted by rating, best first; games counts appearances."""
    counts: dict[str, int] = {s: 0 for s in ratings}
    for game in games:
        for side in (game.winner, game.loser):
            if side in counts:
                counts[side] += 1
    rows = []
    for sid, player in ratings.items():
        lo, hi = confidence_interval(player)
        rows.append(LeaderboardRow(sid, player.rating, player.rd, lo, hi, counts[sid]))
    rows.sort(key=lambda r: (-r.rating, r.system_id))
    return rows
