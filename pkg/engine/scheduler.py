"""
Seed and operator scheduling.

Operators are picked by a success-rate bandit: each operator's weight is
(novel results + 1) / (times chosen + 1). Every enabled operator keeps at
least EXPLORATION_FLOOR of the probability mass, operators of a disabled
layer get none.

Seeds are picked proportionally to their energy, a product of three
log-scaled scores (new edges, speed, recency), so a few very fast or very
productive samples cannot starve the rest of the queue.
"""

import random
from dataclasses import dataclass, field
from math import ceil, log, log2
from typing import Dict, List, Optional, Sequence, Tuple

from config.config import EXPLORATION_FLOOR, STACK_MAX, STACK_MIN, STACK_P
from engine.sample import AST, IR, Sample
from ir.mutations import IR_OPERATOR_NAMES
from syntax.mutations import AST_OPERATOR_NAMES

OPERATORS_BY_LAYER = {AST: AST_OPERATOR_NAMES, IR: IR_OPERATOR_NAMES}


# scale arbitrarily large / small values down to [1, scale*log(value)]
def log_scale(value: float, scale: float = 1, base: float = 2) -> int:
    if value <= base:
        return 1
    val = log2(value) if base == 2 else log(value, base)
    return ceil(scale * val - scale + 1)


@dataclass
class SchedulerState:
    """Per-operator statistics; operator names are unique across layers."""
    chosen: Dict[str, int] = field(default_factory=dict)
    successes: Dict[str, int] = field(default_factory=dict)

    def record(self, operator: str, novel: bool):
        self.chosen[operator] = self.chosen.get(operator, 0) + 1
        if novel:
            self.successes[operator] = self.successes.get(operator, 0) + 1

    def weight(self, operator: str) -> float:
        return (self.successes.get(operator, 0) + 1) / (self.chosen.get(operator, 0) + 1)

    def probabilities(self, operators: Sequence[str]) -> Dict[str, float]:
        """Selection probability of each operator in `operators`."""
        if not operators:
            return {}
        weights = [self.weight(op) for op in operators]
        total = sum(weights)
        probs = [w / total for w in weights]
        floor = min(EXPLORATION_FLOOR, 1.0 / len(operators))
        # lift starving operators to the floor, scale the rest into what is left
        low = [p < floor for p in probs]
        if any(low):
            rest = sum(p for p, is_low in zip(probs, low) if not is_low)
            budget = 1.0 - floor * sum(low)
            probs = [floor if is_low else p * budget / rest for p, is_low in zip(probs, low)]
        return dict(zip(operators, probs))

    def choose_operator(self, operators: Sequence[str], rng: random.Random) -> str:
        probs = self.probabilities(operators)
        return rng.choices(list(probs), weights=list(probs.values()))[0]


# ============================================================================
# Energy
# ============================================================================

def score_impact(sample: Sample) -> int:
    return log_scale(8 * len(sample.novel_edges) + 1, scale=5)


def score_speed(sample: Sample, deterministic: bool) -> int:
    size = max(1, sample.size())
    if deterministic:
        return log_scale(1_000_000 / size, scale=6, base=16)
    exec_ms = max(sample.exec_time * 1000.0, 0.01)
    return log_scale(1_000_000 / (exec_ms * size), scale=6, base=16)


def score_recency(sample: Sample, newest_id: int) -> float:
    age = max(0, newest_id - sample.id)
    return 1.0 + 4.0 / (1 + age)


def compute_energy(sample: Sample, newest_id: int, deterministic: bool = False) -> float:
    """Non-negative scheduling weight of `sample`.

    Args:
        sample: Corpus member
        newest_id: Id of the most recently admitted sample
        deterministic: Score speed from size only (wall time varies between runs)
    """
    return score_impact(sample) * score_speed(sample, deterministic) * score_recency(sample, newest_id)


# ============================================================================
# Selection
# ============================================================================

def schedule_next(corpus, state: SchedulerState, rng: random.Random,
                  layers=frozenset({AST, IR}), deterministic: bool = False) -> Optional[Tuple[Sample, str]]:
    """Pick the next (sample, operator) pair.

    Args:
        corpus: Corpus (iterable of samples)
        state: Operator statistics
        rng: Campaign RNG
        layers: Layers whose operators are enabled
        deterministic: See compute_energy

    Returns:
        (sample, operator) with the operator from the sample's layer, or None
        when no sample of an enabled layer exists
    """
    candidates: List[Sample] = [s for s in corpus if s.layer in layers]
    if not candidates:
        return None
    newest = max(s.id for s in candidates)
    for s in candidates:
        s.energy = compute_energy(s, newest, deterministic)
    if len(candidates) == 1:
        sample = candidates[0]
    else:
        sample = rng.choices(candidates, weights=[s.energy for s in candidates])[0]
    return sample, state.choose_operator(OPERATORS_BY_LAYER[sample.layer], rng)


def stack_depth(rng: random.Random) -> int:
    """Number of stacked mutations: geometric with p=STACK_P, clipped to [STACK_MIN, STACK_MAX]."""
    depth = STACK_MIN
    while depth < STACK_MAX and rng.random() >= STACK_P:
        depth += 1
    return depth
