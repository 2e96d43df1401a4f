"""Experiment harness: configuration grids, detection rates, ablations.

Feature subsets are compared with paired prompts and per-sample seeds
derived from the keyed hash, so a run is reproducible byte-for-byte from
its manifest.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .attack import AttackConfig, paraphrase_attack
from .detection import detect, normal_sf
from .generation import (
    FEATURES,
    LogitSource,
    WatermarkConfig,
    generate,
    perplexity,
)
from .norms import NormsLexicon
from .textops import HashRange, hash_to_range, split_sentences

# (delta_senso, delta_acro, delta_redgreen)
SETTINGS = {
    "weak": (1.0, 10.0, 1.0),
    "medium": (2.5, 20.0, 2.0),
    "strong": (5.0, 40.0, 10.0),
}

ALL_SUBSETS = (
    frozenset({"acro"}),
    frozenset({"senso"}),
    frozenset({"redgreen"}),
    frozenset({"acro", "senso"}),
    frozenset({"acro", "redgreen"}),
    frozenset({"senso", "redgreen"}),
    frozenset(FEATURES),
)

HUMAN = "human"


class HarnessError(RuntimeError):
    pass


def subset_name(subset: frozenset[str]) -> str:
    return "+".join(f for f in FEATURES if f in subset) or "none"


@dataclass(frozen=True)
class ExperimentSpec:
    setting: str = "medium"  # weak | medium | strong | custom
    deltas: tuple[float, float, float] | None = None  # (senso, acro, redgreen)
    feature_subsets: tuple[frozenset[str], ...] = ALL_SUBSETS
    include_human: bool = True
    n_samples: int = 100
    corpus: str | Path = ""
    prompt_len: int = 40
    completion_len: int = 160
    max_tokens: int = 160
    alpha: float = 0.05
    gamma: float = 0.5
    temperature: float = 1.0
    seed: int = 0
    attack: AttackConfig | None = None

    def resolved_deltas(self) -> tuple[float, float, float]:
        if self.setting == "custom":
            if self.deltas is None:
                raise HarnessError("custom setting requires explicit deltas")
            return self.deltas
        if self.setting not in SETTINGS:
            raise HarnessError(f"unknown setting {self.setting!r}")
        return SETTINGS[self.setting]


@dataclass
class ResultRow:
    configuration: str
    sample_id: int
    attacked: bool
    final_score: float
    equivalent_z: float
    p_acro: float
    p_senso: float
    p_redgreen: float
    perplexity: float
    n_sentences: int
    detected: bool


@dataclass
class ResultsTable:
    rows: list[ResultRow] = field(default_factory=list)
    texts: dict[tuple[str, int, bool], str] = field(default_factory=dict)

    def configurations(self) -> list[str]:
        seen: dict[str, None] = {}
        for row in self.rows:
            seen.setdefault(row.configuration, None)
        return list(seen)

    def aggregates(self) -> list[dict]:
        out = []
        for config in self.configurations():
            for attacked in (False, True):
                rows = [
                    r for r in self.rows
                    if r.configuration == config and r.attacked == attacked
                ]
                if not rows:
                    continue
                n = len(rows)
                out.append({
                    "configuration": config,
                    "attacked": attacked,
                    "n_samples": n,
                    "detection_rate": sum(r.detected for r in rows) / n,
                    "mean_z": sum(r.equivalent_z for r in rows) / n,
                    "mean_perplexity": sum(r.perplexity for r in rows) / n,
                })
        return out

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([
            "configuration", "sample_id", "attacked", "final_score",
            "equivalent_z", "p_acro", "p_senso", "p_redgreen",
            "perplexity", "n_sentences", "detected",
        ])
        for r in self.rows:
            writer.writerow([
                r.configuration, r.sample_id, int(r.attacked), repr(r.final_score),
                repr(r.equivalent_z), repr(r.p_acro), repr(r.p_senso),
                repr(r.p_redgreen), repr(r.perplexity), r.n_sentences,
                int(r.detected),
            ])
        return buffer.getvalue()

    def aggregates_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([
            "configuration", "attacked", "n_samples", "detection_rate",
            "mean_z", "mean_perplexity",
        ])
        for a in self.aggregates():
            writer.writerow([
                a["configuration"], int(a["attacked"]), a["n_samples"],
                repr(a["detection_rate"]), repr(a["mean_z"]),
                repr(a["mean_perplexity"]),
            ])
        return buffer.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": 1,
                "rows": [vars(r) for r in self.rows],
                "aggregates": self.aggregates(),
            },
            sort_keys=True,
        )


def make_prompts(
    corpus: str | Path,
    n: int,
    prompt_len: int,
    completion_len: int,
    seed: int = 0,
) -> list[tuple[str, str]]:
    """Seeded selection of (prompt, human completion) pairs from a corpus.

    Documents are blank-line separated; the last ``completion_len`` tokens
    become the human baseline and the preceding ``prompt_len`` the prompt.
    """
    text = Path(corpus).read_text(encoding="utf-8")
    documents = [d for d in text.split("\n\n") if d.strip()]
    eligible = []
    for doc in documents:
        tokens = doc.split()
        if len(tokens) >= prompt_len + completion_len:
            eligible.append(tokens)
    if n > len(eligible):
        raise HarnessError(
            f"requested {n} prompts but only {len(eligible)} documents are long enough "
            f"(shortfall {n - len(eligible)})"
        )
    rng = random.Random(seed)
    chosen = rng.sample(range(len(eligible)), n)
    pairs = []
    for index in chosen:
        tokens = eligible[index]
        completion = tokens[-completion_len:]
        prompt = tokens[-(prompt_len + completion_len):-completion_len]
        pairs.append((" ".join(prompt), " ".join(completion)))
    return pairs


def _sample_seed(run_seed: int, configuration: str, sample_id: int) -> int:
    payload = f"{run_seed}:{configuration}:{sample_id}"
    return hash_to_range(payload, HashRange(0, 2**31 - 1))


def run_experiment(
    spec: ExperimentSpec,
    model: LogitSource,
    lexicon: NormsLexicon,
) -> ResultsTable:
    """Generate, optionally attack, detect and score every configuration."""
    d_senso, d_acro, d_redgreen = spec.resolved_deltas()
    prompts = make_prompts(
        spec.corpus, spec.n_samples, spec.prompt_len, spec.completion_len, spec.seed
    )
    table = ResultsTable()
    configs: list[tuple[str, frozenset[str] | None]] = []
    if spec.include_human:
        configs.append((HUMAN, None))
    configs.extend((subset_name(s), s) for s in spec.feature_subsets)

    for config_name, subset in configs:
        for sample_id, (prompt, human_completion) in enumerate(prompts):
            if subset is None:
                text = human_completion
            else:
                wm = WatermarkConfig(
                    delta_acro=d_acro,
                    delta_senso=d_senso,
                    delta_redgreen=d_redgreen,
                    gamma=spec.gamma,
                    enabled=subset,
                    max_tokens=spec.max_tokens,
                    min_tokens=spec.max_tokens,  # fixed-length completions

                    sampler="multinomial",
                    temperature=spec.temperature,
                    seed=_sample_seed(spec.seed, config_name, sample_id),
                )
                try:
                    text, _ = generate(model, prompt, wm, lexicon)
                except Exception as exc:
                    raise HarnessError(
                        f"sample {sample_id} of {config_name} failed: {exc}"
                    ) from exc
            _record(table, spec, model, lexicon, config_name, sample_id, text, False)
            if spec.attack is not None:
                attack_cfg = replace(
                    spec.attack,
                    seed=_sample_seed(spec.seed + 1, config_name, sample_id),
                )
                attacked_text, _, _ = paraphrase_attack(
                    text, attack_cfg, vocabulary=model.vocabulary
                )
                _record(
                    table, spec, model, lexicon, config_name, sample_id,
                    attacked_text, True,
                )
    return table


def _record(
    table: ResultsTable,
    spec: ExperimentSpec,
    model: LogitSource,
    lexicon: NormsLexicon,
    config_name: str,
    sample_id: int,
    text: str,
    attacked: bool,
) -> None:
    report = detect(text, lexicon, spec.gamma, model.vocabulary, alpha=spec.alpha)
    table.texts[(config_name, sample_id, attacked)] = text
    table.rows.append(
        ResultRow(
            configuration=config_name,
            sample_id=sample_id,
            attacked=attacked,
            final_score=report.final_score,
            equivalent_z=report.equivalent_z,
            p_acro=report.acro.p_value,
            p_senso=report.senso.p_value,
            p_redgreen=report.redgreen.p_value,
            perplexity=perplexity(model, text),
            n_sentences=len(split_sentences(text)),
            detected=report.verdict,
        )
    )


def ablate_lengths(
    texts: list[str],
    lexicon: NormsLexicon,
    gamma: float,
    vocabulary,
    alpha: float = 0.05,
) -> dict[int, float]:
    """Detection rate on the first m sentences, m from each text's total down to 1."""
    hits: dict[int, int] = {}
    totals: dict[int, int] = {}
    for text in texts:
        spans = split_sentences(text)
        for m in range(len(spans), 0, -1):
            prefix = text[: spans[m - 1].end]
            report = detect(prefix, lexicon, gamma, vocabulary, alpha=alpha)
            totals[m] = totals.get(m, 0) + 1
            hits[m] = hits.get(m, 0) + int(report.verdict)
    return {m: hits[m] / totals[m] for m in sorted(totals)}


def mann_whitney_u(a: list[float], b: list[float]) -> float:
    """Two-sided Mann-Whitney U p-value.

    Small pooled samples (n1 + n2 <= 12) are scored by exact enumeration of
    all group assignments; larger ones use the normal approximation with
    tie and continuity corrections. The exact path is what keeps tie-heavy
    tiny samples honest, where the approximation can be off by ~0.5.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    if n1 + n2 <= 12:
        return _mann_whitney_exact(a, b)
    pooled = sorted((value, 0) for value in a) + sorted((value, 1) for value in b)
    pooled.sort(key=lambda pair: pair[0])
    ranks: list[float] = [0.0] * len(pooled)
    tie_term = 0.0
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j][0] == pooled[i][0]:
            j += 1
        rank = (i + j + 1) / 2.0  # average of 1-based ranks i+1 .. j
        for idx in range(i, j):
            ranks[idx] = rank
        t = j - i
        tie_term += t**3 - t
        i = j
    rank_sum_a = sum(rank for rank, (_, group) in zip(ranks, pooled) if group == 0)
    u1 = rank_sum_a - n1 * (n1 + 1) / 2.0
    mean = n1 * n2 / 2.0
    n = n1 + n2
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return 1.0  # all values tied
    z = (abs(u1 - mean) - 0.5) / math.sqrt(variance)
    z = max(z, 0.0)
    return min(1.0, 2.0 * normal_sf(z))


def _mann_whitney_exact(a: list[float], b: list[float]) -> float:
    """Exact two-sided p-value: P(|U - n1*n2/2| >= |U_obs - n1*n2/2|) over
    all C(n1+n2, n1) assignments of the pooled values to the first group."""
    n1 = len(a)
    pooled = list(a) + list(b)
    mean = n1 * (len(pooled) - n1) / 2.0

    def u_statistic(first: tuple[float, ...], second: list[float]) -> float:
        return sum(
            (x > y) + 0.5 * (x == y) for x in first for y in second
        )

    observed_dev = abs(u_statistic(tuple(a), b) - mean)
    indices = range(len(pooled))
    hits = 0
    total = 0
    for chosen in itertools.combinations(indices, n1):
        chosen_set = set(chosen)
        first = tuple(pooled[i] for i in chosen)
        second = [pooled[i] for i in indices if i not in chosen_set]
        total += 1
        if abs(u_statistic(first, second) - mean) >= observed_dev - 1e-12:
            hits += 1
    return hits / total


def bonferroni(p_values: list[float]) -> list[float]:
    count = len(p_values)
    return [min(1.0, p * count) for p in p_values]
