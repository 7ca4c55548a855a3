"""Dataset ingestion, scoring and experiment drivers."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import ChannelParams, random_source, sample_cluster
from .combiner import DECODERS, FusionConfig
from .core import DNA, Alphabet, Cluster
from .errors import ContractError, DatasetError, DecodeCollapse, EmptyCluster, InstanceTooLarge, MismatchedCounts
from .oracle import JOINT_MAX_K, joint_edge_count, joint_trellis_app
from .trellis import build_spec, edge_count

log = logging.getLogger(__name__)

JOBS_ENV = "IDSRECON_JOBS"
DECODER_CHOICES = ("belief-combine", "forward-soft", "single-trace", "joint-oracle")


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit costs."""
    a = np.asarray(list(a) if isinstance(a, str) else a)
    b = np.asarray(list(b) if isinstance(b, str) else b)
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    idx = np.arange(b.size + 1)
    row = idx.copy()
    for i in range(a.size):
        sub = row[:-1] + (b != a[i])
        tmp = np.empty_like(row)
        tmp[0] = i + 1
        tmp[1:] = np.minimum(row[1:] + 1, sub)
        # left-to-right insertions: row[j] = min_k tmp[k] + (j - k)
        row = np.minimum.accumulate(tmp - idx) + idx
    return int(row[-1])


# ----------------------------------------------------------------------------
# datasets


@dataclass
class ClusterDataset:
    references: list[np.ndarray]
    clusters: list[list[np.ndarray]]
    alphabet: Alphabet = DNA
    rejected_reads: int = 0

    def __len__(self) -> int:
        return len(self.references)

    def cluster(self, i: int, order: Optional[Sequence[int]] = None) -> Cluster:
        reads = self.clusters[i]
        if order is not None:
            reads = [reads[j] for j in order]
        return Cluster(list(reads), self.references[i], self.alphabet)


def load_dataset(centers_path, clusters_path, alphabet: Alphabet = DNA) -> ClusterDataset:
    """Read a centers file (one reference per line) and a clusters file.

    The clusters file holds blocks of reads, one per line, separated by lines
    starting with ``=``.  Block i belongs to center i.  Reads with symbols
    outside the alphabet are dropped and counted.
    """
    centers = [ln.strip() for ln in Path(centers_path).read_text().splitlines() if ln.strip()]
    blocks: list[list[str]] = []
    current: Optional[list[str]] = None
    for line in Path(clusters_path).read_text().splitlines():
        if line.startswith("="):
            if current is not None:
                blocks.append(current)
            current = []
            continue
        if not line.strip():
            continue
        if current is None:
            current = []
        current.append(line.strip())
    if current is not None:
        blocks.append(current)
    # a leading separator produces no empty block; a trailing one closes the last block
    if len(blocks) != len(centers):
        raise MismatchedCounts(f"{len(centers)} centers but {len(blocks)} read blocks")
    refs, clusters, rejected = [], [], 0
    for i, (center, block) in enumerate(zip(centers, blocks)):
        if not alphabet.is_valid(center):
            raise DatasetError(f"center {i} contains symbols outside the alphabet")
        reads = []
        for r in block:
            if alphabet.is_valid(r):
                reads.append(alphabet.encode(r))
            else:
                rejected += 1
        if not reads:
            raise EmptyCluster(f"cluster {i} has no usable reads")
        refs.append(alphabet.encode(center))
        clusters.append(reads)
    if rejected:
        log.warning("dropped %d reads with symbols outside the alphabet", rejected)
    return ClusterDataset(refs, clusters, alphabet, rejected)


def write_dataset(dataset: ClusterDataset, centers_path, clusters_path) -> None:
    dec = dataset.alphabet.decode
    with open(centers_path, "w") as fh:
        for ref in dataset.references:
            fh.write(dec(ref) + "\n")
    with open(clusters_path, "w") as fh:
        for reads in dataset.clusters:
            fh.write("=" * 20 + "\n")
            for r in reads:
                fh.write(dec(r) + "\n")


def simulate_dataset(N: int, K: int, params: ChannelParams, trials: int, seed: int,
                     alphabet: Alphabet = DNA) -> ClusterDataset:
    """``trials`` random sources of length N, each with K channel traces."""
    root = np.random.SeedSequence(seed)
    refs, clusters = [], []
    for child in root.spawn(trials):
        src_seed, chan_seed = child.spawn(2)
        x = random_source(N, np.random.default_rng(src_seed), alphabet)
        cl = sample_cluster(x, K, params, chan_seed, alphabet)
        refs.append(x)
        clusters.append(cl.traces)
    return ClusterDataset(refs, clusters, alphabet)


# ----------------------------------------------------------------------------
# experiments


def default_jobs() -> int:
    """Worker count from ``IDSRECON_JOBS`` (1 when unset)."""
    raw = os.environ.get(JOBS_ENV, "").strip()
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ContractError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ContractError(f"{JOBS_ENV} must be at least 1")
    return jobs


@dataclass
class ExperimentConfig:
    """One sweep.  ``K_values=None`` on real data decodes whole clusters,
    reporting one row per distinct cluster size."""

    K_values: Optional[Sequence[int]] = (2, 4, 8)
    params: ChannelParams = ChannelParams(0.017, 0.02, 0.022)
    trials: int = 100
    seed: int = 0
    decoders: Sequence[str] = ("belief-combine",)
    N: int = 100
    delta: object = "auto"
    fusion: FusionConfig = field(default_factory=FusionConfig)
    dataset: Optional[ClusterDataset] = None
    out: Optional[str] = None
    alphabet: Alphabet = DNA
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ContractError("trials must be at least 1")
        if self.jobs < 1:
            raise ContractError("jobs must be at least 1")
        if self.K_values is None:
            if self.dataset is None:
                raise ContractError("K values are required for synthetic experiments")
        elif not self.K_values or min(self.K_values) < 1:
            raise ContractError("K values must be positive")
        for d in self.decoders:
            if d not in DECODER_CHOICES:
                raise ContractError(f"unknown decoder {d!r}")
            if d == "joint-oracle" and self.K_values is not None and max(self.K_values) > JOINT_MAX_K:
                raise ContractError(f"joint-oracle supports K <= {JOINT_MAX_K}")


@dataclass
class ResultRow:
    decoder: str
    K: int
    pi_i: float
    pi_d: float
    pi_s: float
    trials: int
    mean_edit_distance: float
    normalized_edit_rate: float
    exact_reconstruction_rate: float
    mean_iterations: float
    mean_runtime_ms: float
    failures: int = 0


RESULT_COLUMNS = [f.name for f in fields(ResultRow)]


@dataclass
class ClusterOutcome:
    edit_distance: int
    iterations: int
    runtime_ms: float
    converged: bool
    gamma_evals: int
    estimate: np.ndarray
    gap: float = 0.0
    cluster_index: int = -1
    decoder: str = ""
    K: int = 0


def decode_cluster(cluster: Cluster, decoder: str, params: ChannelParams, N: int,
                   fusion: FusionConfig) -> ClusterOutcome:
    t0 = time.perf_counter()
    gap = 0.0
    if decoder == "joint-oracle":
        delta = None if fusion.delta == "auto" else fusion.delta
        app = joint_trellis_app(cluster, params, delta, N=N)
        est, iters, conv, gev = np.argmax(app, axis=1), 0, True, 0
    else:
        rep = DECODERS[decoder](cluster, params, fusion, N=N)
        est, iters, conv, gev = rep.map_sequence, rep.iterations_used, rep.converged, rep.gamma_evals
        gap = rep.max_consensus_gap
    ms = 1e3 * (time.perf_counter() - t0)
    ed = edit_distance(est, cluster.reference) if cluster.reference is not None else -1
    return ClusterOutcome(ed, iters, ms, conv, gev, est, gap, K=cluster.K, decoder=decoder)


def _clusters_for(config: ExperimentConfig, K: Optional[int]) -> list[tuple[int, Cluster]]:
    if config.dataset is None:
        ds = simulate_dataset(config.N, K, config.params, config.trials, config.seed, config.alphabet)
        return [(i, ds.cluster(i)) for i in range(len(ds))]
    clusters = config.dataset.clusters
    if K is None:
        return [(i, config.dataset.cluster(i)) for i in range(min(config.trials, len(clusters)))]
    # real data: K reads drawn without replacement from clusters holding at least K
    rng = np.random.default_rng([config.seed, K])
    eligible = [i for i, c in enumerate(clusters) if len(c) >= K]
    if not eligible:
        return []
    pick = rng.choice(eligible, size=min(config.trials, len(eligible)), replace=False)
    out = []
    for i in sorted(int(j) for j in pick):
        order = rng.choice(len(clusters[i]), size=K, replace=False)
        out.append((i, config.dataset.cluster(i, order)))
    return out


def _decode_task(task):
    index, cluster, decoder, params, fusion = task
    N = int(cluster.reference.size)
    try:
        o = decode_cluster(cluster, decoder, params, N, fusion)
    except (DecodeCollapse, InstanceTooLarge) as exc:
        return index, cluster.K, decoder, str(exc)
    o.cluster_index = index
    return o


def _run_tasks(tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [_decode_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_decode_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def run_experiment(config: ExperimentConfig, outcomes: Optional[list] = None) -> list[ResultRow]:
    """Decode and score every (decoder, K) point; optionally write CSV.

    Pass a list as ``outcomes`` to also collect one :class:`ClusterOutcome`
    per decoded cluster.
    """
    fusion = config.fusion
    if config.delta != "auto":
        fusion = FusionConfig(**{**asdict(fusion), "delta": config.delta})
    tasks = []
    for K in (config.K_values if config.K_values is not None else [None]):
        for index, cl in _clusters_for(config, K):
            for decoder in config.decoders:
                tasks.append((index, cl, decoder, config.params, fusion))

    groups: dict[tuple[str, int], dict] = {}
    for res in _run_tasks(tasks, config.jobs):
        if isinstance(res, ClusterOutcome):
            key = (res.decoder, res.K)
        else:
            key = (res[2], res[1])
        g = groups.setdefault(key, {"eds": [], "iters": [], "times": [], "failures": 0})
        if not isinstance(res, ClusterOutcome):
            g["failures"] += 1
            log.info("decode failure (%s, K=%d, cluster %d): %s", res[2], res[1], res[0], res[3])
            continue
        g["eds"].append((res.edit_distance, int(res.estimate.size)))
        g["iters"].append(res.iterations)
        g["times"].append(res.runtime_ms)
        if outcomes is not None:
            outcomes.append(res)
    rows = [_aggregate(dec, K, config.params, g["eds"], g["iters"], g["times"], g["failures"])
            for (dec, K), g in groups.items()]
    rows.sort(key=lambda r: (r.decoder, r.K, r.pi_i, r.pi_d, r.pi_s))
    if config.out:
        write_results(rows, config.out)
    return rows


def _aggregate(decoder, K, params, eds, iters, times, failures) -> ResultRow:
    n = len(eds)
    if n == 0:
        nan = float("nan")
        return ResultRow(decoder, K, params.pi_i, params.pi_d, params.pi_s, 0, nan, nan, nan, nan, nan, failures)
    dist = np.array([e for e, _ in eds], dtype=float)
    lengths = np.array([L for _, L in eds], dtype=float)
    return ResultRow(
        decoder, K, params.pi_i, params.pi_d, params.pi_s, n,
        float(dist.mean()),
        float(min(1.0, (dist / lengths).mean())),
        float((dist == 0).mean()),
        float(np.mean(iters)),
        float(np.mean(times)),
        failures,
    )


def write_records(outcomes: Iterable[ClusterOutcome], fh, alphabet: Alphabet = DNA) -> None:
    """One tab-separated line per decoded cluster."""
    fh.write("cluster\tdecoder\tK\tsequence\titerations\tgap\tconverged\tedit_distance\n")
    for o in sorted(outcomes, key=lambda o: (o.decoder, o.K, o.cluster_index)):
        fh.write(f"{o.cluster_index}\t{o.decoder}\t{o.K}\t{alphabet.decode(o.estimate)}\t"
                 f"{o.iterations}\t{o.gap:.6g}\t{int(o.converged)}\t{o.edit_distance}\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_results(rows: Iterable[ResultRow], path) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        write_results_to(rows, fh)


def write_results_to(rows: Iterable[ResultRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ----------------------------------------------------------------------------
# complexity


@dataclass
class ScalingReport:
    K_values: list[int]
    gamma_evals: list[float]
    iterations: list[float]
    wall_ms: list[float]
    exponent: float
    joint_K: list[int]
    joint_edges: list[int]
    single_edges: int
    delta: Optional[int]

    def joint_growth(self) -> list[float]:
        e = self.joint_edges
        return [e[i + 1] / e[i] for i in range(len(e) - 1)]


def loglog_slope(xs, ys) -> float:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def measure_complexity(K_values: Sequence[int] = tuple(range(2, 17)), N: int = 100,
                       params: ChannelParams = ChannelParams(0.017, 0.02, 0.022),
                       trials: int = 3, seed: int = 0, fusion: Optional[FusionConfig] = None,
                       joint_N: int = 20, joint_delta: int = 3,
                       alphabet: Alphabet = DNA) -> ScalingReport:
    """Operation counts of the combiner across K, and joint-trellis edge counts.

    The combiner's cost is the number of branch metrics evaluated over all
    forward and backward sweeps.  Joint-trellis sizes are counted (not run)
    for K = 1, 2, 3 on one cluster of length ``joint_N``.
    """
    if len(K_values) < 4:
        raise ContractError("need at least four K values for a scaling fit")
    fusion = fusion or FusionConfig()
    gam, its, wall = [], [], []
    for K in K_values:
        ds = simulate_dataset(N, K, params, trials, seed, alphabet)
        g, it, ms = [], [], []
        for i in range(len(ds)):
            t0 = time.perf_counter()
            rep = DECODERS["belief-combine"](ds.cluster(i), params, fusion, N=N)
            ms.append(1e3 * (time.perf_counter() - t0))
            g.append(rep.gamma_evals)
            it.append(rep.iterations_used)
        gam.append(float(np.mean(g)))
        its.append(float(np.mean(it)))
        wall.append(float(np.mean(ms)))
    slope = loglog_slope(K_values, gam)

    x = random_source(joint_N, np.random.default_rng(seed), alphabet)
    cl = sample_cluster(x, 3, params, seed, alphabet)
    joint_K, joint_edges = [], []
    for K in (1, 2, 3):
        sub = Cluster(cl.traces[:K], x, alphabet)
        joint_K.append(K)
        joint_edges.append(joint_edge_count(sub, params, joint_N, joint_delta))
    single = edge_count(build_spec(joint_N, cl.traces[0], joint_delta, alphabet, params))
    return ScalingReport(list(K_values), gam, its, wall, slope, joint_K, joint_edges, single, joint_delta)
