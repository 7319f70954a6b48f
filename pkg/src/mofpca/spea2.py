"""SPEA2 search over fixed-size subsets of principal components.

Randomness comes from a single ``numpy.random.Generator`` (PCG64) seeded
from ``Spea2Config.seed``. All draws happen in the sequential generation
loop; objective evaluation is vectorised and consumes no randomness, so a
seed fully determines the run.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from itertools import combinations
from math import comb
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .dominance import FrontRecord, nondominated_filter
from .exceptions import ConfigError, InputError
from .pca import ObjectiveVector, PrincipalBasis, Selection, evaluate_batch

logger = logging.getLogger(__name__)

GENERATIONS = {"tabular": 30, "image": 50}


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class Spea2Config:
    population_size: int
    archive_size: int
    generations: int
    crossover_rate: float
    r: int
    d: int
    seed: int = 0
    mutation_swaps: int = 1
    seed_classical: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.archive_size < 1:
            raise ConfigError("archive_size must be >= 1")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if not 0 <= self.crossover_rate <= 100:
            raise ConfigError("crossover_rate must be a percentage in [0, 100]")
        if not 1 <= self.r <= self.d:
            raise ConfigError(f"r must lie in 1..{self.d}, got {self.r}")
        if self.mutation_swaps < 1:
            raise ConfigError("mutation_swaps must be >= 1")

    @property
    def density_k(self) -> int:
        return max(1, round_half_away(math.sqrt(self.population_size + self.archive_size)))

    def with_overrides(self, overrides: dict) -> "Spea2Config":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        casts = {"crossover_rate": float, "seed_classical": bool}
        try:
            clean = {k: casts.get(k, int)(v) for k, v in overrides.items() if v is not None}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        return replace(self, **clean)

    def to_dict(self) -> dict:
        return asdict(self)


def default_config(d: int, r: int, dataset_kind: str = "tabular", seed: int = 0) -> Spea2Config:
    """Population min(100, round(C(d,r)/2)), archive half of it, 50% crossover."""
    if not 1 <= r <= d:
        raise ConfigError(f"r must lie in 1..{d}, got {r}")
    if dataset_kind not in GENERATIONS:
        raise ConfigError(f"dataset kind must be one of {sorted(GENERATIONS)}")
    pop = max(2, min(100, round_half_away(comb(d, r) / 2)))
    archive = max(1, round_half_away(pop / 2))
    return Spea2Config(pop, archive, GENERATIONS[dataset_kind], 50.0, r, d, seed)


def load_config_file(path) -> dict:
    """Key/value overrides from a JSON or TOML file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"could not parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a key/value table")
    return data


@dataclass(frozen=True)
class EvaluatedIndividual:
    selection: Selection
    objectives: ObjectiveVector
    strength: int
    raw_fitness: float
    density: float
    fitness: float


@dataclass
class ParetoArchive:
    records: List[FrontRecord]
    history: List[dict]
    config: Optional[Spea2Config] = None


def initialize_population(cfg: Spea2Config, rng: np.random.Generator,
                          include: Sequence[Selection] = ()) -> List[Selection]:
    """Distinct random selections; every subset when there are fewer than the population size."""
    total = comb(cfg.d, cfg.r)
    if total <= cfg.population_size:
        return [tuple(c) for c in combinations(range(cfg.d), cfg.r)]
    seen = set()
    population = []
    for sel in include:
        sel = tuple(sorted(sel))
        if sel not in seen and len(population) < cfg.population_size:
            seen.add(sel)
            population.append(sel)
    while len(population) < cfg.population_size:
        sel = tuple(sorted(int(i) for i in rng.choice(cfg.d, cfg.r, replace=False)))
        if sel not in seen:
            seen.add(sel)
            population.append(sel)
    return population


def _dominance_matrix(objs: np.ndarray) -> np.ndarray:
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    return le & lt


def normalized_distances(objs: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances after per-objective min-max scaling."""
    lo = objs.min(axis=0)
    span = objs.max(axis=0) - lo
    scaled = np.where(span > 0, (objs - lo) / np.where(span > 0, span, 1.0), 0.0)
    diff = scaled[:, None, :] - scaled[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def fitness_arrays(objs: np.ndarray, k: int) -> dict:
    objs = np.asarray(objs, dtype=float)
    m = len(objs)
    dom = _dominance_matrix(objs)
    strength = dom.sum(axis=1)
    raw = (dom * strength[:, None]).sum(axis=0).astype(float)
    dist = normalized_distances(objs)
    if m > 1:
        others = np.sort(dist + np.diag(np.full(m, np.inf)), axis=1)[:, :m - 1]
        sigma = others[:, min(k, m - 1) - 1]
    else:
        sigma = np.zeros(m)
    density = 1.0 / (sigma + 2.0)
    return {"strength": strength, "raw": raw, "density": density,
            "fitness": raw + density, "distances": dist}


def assign_fitness(selections: Sequence[Selection], objectives, k: int) -> List[EvaluatedIndividual]:
    """Strength, raw fitness, k-th neighbour density and total fitness per pool member."""
    if len(selections) == 0:
        raise InputError("cannot assign fitness to an empty pool")
    objs = np.asarray([tuple(o) for o in objectives], dtype=float)
    fit = fitness_arrays(objs, k)
    return [
        EvaluatedIndividual(tuple(sel), ObjectiveVector(*map(float, objs[i])), int(fit["strength"][i]),
                            float(fit["raw"][i]), float(fit["density"][i]), float(fit["fitness"][i]))
        for i, sel in enumerate(selections)
    ]


def _truncate(candidates: List[int], dist: np.ndarray, selections, size: int) -> List[int]:
    alive = list(candidates)
    sub = dist[np.ix_(alive, alive)].copy()
    np.fill_diagonal(sub, np.inf)
    while len(alive) > size:
        nearest = sub.min(axis=1)
        tied = np.flatnonzero(nearest == nearest.min())
        if len(tied) > 1:
            ordered = np.sort(sub[tied], axis=1)
            smallest = ordered[np.lexsort(ordered.T[::-1])[0]]
            tied = tied[np.all(ordered == smallest, axis=1)]
        # remaining ties: drop the lexicographically largest genome
        victim = max(tied, key=lambda t: (selections[alive[t]], alive[t]))
        del alive[victim]
        sub = np.delete(np.delete(sub, victim, axis=0), victim, axis=1)
    return alive


def environmental_selection(selections: Sequence[Selection], fitness, distances, archive_size: int) -> List[int]:
    """Pool positions forming the next archive.

    Non-dominated members (fitness < 1) are kept; a shortfall is filled with
    the best dominated members, an excess is removed by nearest-neighbour
    truncation in normalised objective space.
    """
    fitness = np.asarray(fitness)
    if len(fitness) == 0:
        raise InputError("cannot select from an empty pool")
    nondominated = [int(i) for i in np.flatnonzero(fitness < 1)]
    if len(nondominated) <= archive_size:
        dominated = sorted((int(i) for i in np.flatnonzero(fitness >= 1)),
                           key=lambda i: (fitness[i], selections[i], i))
        return nondominated + dominated[:archive_size - len(nondominated)]
    return _truncate(nondominated, np.asarray(distances), selections, archive_size)


def binary_tournament(fitness, rng: np.random.Generator, count: int) -> List[int]:
    """Indices of ``count`` tournament winners (lower fitness wins)."""
    fitness = np.asarray(fitness)
    m = len(fitness)
    if m == 0:
        raise InputError("tournament needs a non-empty archive")
    winners = []
    for _ in range(count):
        i, j = (int(v) for v in rng.integers(0, m, size=2))
        if fitness[i] < fitness[j]:
            winners.append(i)
        elif fitness[j] < fitness[i]:
            winners.append(j)
        else:
            winners.append((i, j)[int(rng.integers(2))])
    return winners


def crossover(parent1: Selection, parent2: Selection, rng: np.random.Generator) -> Selection:
    """Keep the shared indices, fill up from the indices only one parent has."""
    if len(parent1) != len(parent2):
        raise InputError("parents must have the same number of components")
    a, b = set(parent1), set(parent2)
    shared = a & b
    pool = sorted(a ^ b)
    need = len(parent1) - len(shared)
    picks = rng.choice(pool, size=need, replace=False) if need else []
    return tuple(sorted(shared.union(int(p) for p in picks)))


def mutate(parent: Selection, rng: np.random.Generator, d: int, swaps: int = 1) -> Selection:
    """Replace ``swaps`` randomly chosen indices by indices outside the selection."""
    r = len(parent)
    if r >= d:
        return tuple(parent)
    n = min(swaps, r, d - r)
    outside = sorted(set(range(d)) - set(parent))
    child = list(parent)
    positions = rng.choice(r, size=n, replace=False)
    incoming = rng.choice(outside, size=n, replace=False)
    for pos, new in zip(positions, incoming):
        child[int(pos)] = int(new)
    return tuple(sorted(child))


def variation(mating: Sequence[Selection], cfg: Spea2Config, rng: np.random.Generator) -> List[Selection]:
    size = len(mating)
    n_cross = min(size, round_half_away(cfg.crossover_rate / 100.0 * size))
    children = [crossover(mating[(2 * i) % size], mating[(2 * i + 1) % size], rng) for i in range(n_cross)]
    children += [mutate(mating[j], rng, cfg.d, cfg.mutation_swaps) for j in range(n_cross, size)]
    return children


def _objectives(basis: PrincipalBasis, selections: Sequence[Selection]) -> np.ndarray:
    out = evaluate_batch(basis, np.array(selections, dtype=np.intp))
    return np.column_stack([out["recon_error"], out["fairness"]])


def _progress(gen: int, objs: np.ndarray, archive: List[int], fitness) -> dict:
    arch = objs[archive]
    front = arch[np.asarray(fitness)[archive] < 1]
    if len(front) == 0:
        front = arch
    span = objs.max(axis=0) - objs.min(axis=0)
    ranges = np.where(span > 0, (front.max(axis=0) - front.min(axis=0)) / np.where(span > 0, span, 1), 0.0)
    return {
        "generation": gen,
        "archive_size": len(archive),
        "best_recon_error": float(arch[:, 0].min()),
        "best_fairness": float(arch[:, 1].min()),
        "hypervolume_proxy": float(ranges.sum()),
    }


def run(basis: PrincipalBasis, cfg: Spea2Config, rng: Optional[np.random.Generator] = None) -> ParetoArchive:
    """Run SPEA2 for ``cfg.generations`` generations and return the final front."""
    if cfg.d != basis.d:
        raise ConfigError(f"config d={cfg.d} does not match basis d={basis.d}")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    include = [tuple(range(cfg.r))] if cfg.seed_classical else []
    population = initialize_population(cfg, rng, include)
    archive: List[Selection] = []
    archive_objs = np.empty((0, 2))
    history = []
    k = cfg.density_k
    for gen in range(1, cfg.generations + 1):
        # the archive holds each genome once; it sits in front so its cached objectives are reused
        pool = list(archive)
        seen = set(archive)
        fresh = []
        for sel in population:
            if sel not in seen:
                seen.add(sel)
                fresh.append(sel)
        pool += fresh
        objs = np.vstack([archive_objs, _objectives(basis, fresh)]) if fresh else archive_objs
        fit = fitness_arrays(objs, k)
        chosen = environmental_selection(pool, fit["fitness"], fit["distances"], cfg.archive_size)
        history.append(_progress(gen, objs, chosen, fit["fitness"]))
        logger.info("generation %(generation)d archive=%(archive_size)d best_recon=%(best_recon_error).6g "
                    "best_fairness=%(best_fairness).6g hv_proxy=%(hypervolume_proxy).4f", history[-1])
        archive = [pool[i] for i in chosen]
        archive_objs = objs[chosen]
        archive_fitness = fit["fitness"][chosen]
        if gen == cfg.generations:
            break
        winners = binary_tournament(archive_fitness, rng, cfg.population_size)
        population = variation([archive[w] for w in winners], cfg, rng)
    records = [FrontRecord(sel, ObjectiveVector(float(o[0]), float(o[1])))
               for sel, o in zip(archive, archive_objs)]
    return ParetoArchive(nondominated_filter(records), history, cfg)


def write_history(history: Sequence[dict], path) -> None:
    cols = ["generation", "archive_size", "best_recon_error", "best_fairness", "hypervolume_proxy"]
    lines = [",".join(cols)]
    lines += [",".join(repr(h[c]) for c in cols) for h in history]
    Path(path).write_text("\n".join(lines) + "\n")
