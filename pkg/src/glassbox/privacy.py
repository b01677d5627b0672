"""Data anonymity measures (k-anonymity, l-diversity, t-closeness) and a
shadow-model membership-inference attack measuring model privacy risk."""
from __future__ import annotations

from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .data import CATEGORICAL, Dataset
from .models.base import Model, encode_instances, fit_model, true_label_confidence


def _groups(d: Dataset, qi) -> dict:
    qi = list(qi)
    if not qi:
        raise ValueError("at least one quasi-identifier column is required")
    for c in qi:
        if c not in d.schema.names:
            raise ValueError(f"unknown column {c!r}")
    if d.n == 0:
        raise ValueError("dataset is empty")
    cols = [d[c].tolist() for c in qi]
    groups = defaultdict(list)
    for i, key in enumerate(zip(*cols)):
        groups[key].append(i)
    return groups


def _sensitive(d: Dataset, sensitive: str, categorical_only: bool = False) -> list:
    if sensitive not in d.schema.names:
        raise ValueError(f"unknown column {sensitive!r}")
    if categorical_only and d.schema.column(sensitive).kind != CATEGORICAL:
        raise ValueError(f"t-closeness needs a categorical sensitive column; discretize {sensitive!r} first")
    return d[sensitive].tolist()


def k_anonymity(d: Dataset, qi) -> int:
    """Smallest number of rows sharing one combination of quasi-identifier values."""
    return min(len(rows) for rows in _groups(d, qi).values())


def l_diversity(d: Dataset, qi, sensitive: str) -> int:
    """Smallest number of distinct sensitive values within a quasi-identifier group."""
    s = _sensitive(d, sensitive)
    return min(len({s[i] for i in rows}) for rows in _groups(d, qi).values())


def _tv(group_counts: Counter, n_g: int, total: Counter, n: int) -> Fraction:
    # exact total variation: sum |c_g N - c n_g| / (2 n_g N)
    num = sum(abs(group_counts.get(v, 0) * n - c * n_g) for v, c in total.items())
    return Fraction(num, 2 * n_g * n)


def t_closeness(d: Dataset, qi, sensitive: str) -> float:
    """Largest total-variation distance between a group's sensitive-value
    distribution and the whole dataset's."""
    return float(max(t for _, t in _group_tv(d, qi, sensitive)))


def _group_tv(d, qi, sensitive):
    s = _sensitive(d, sensitive, categorical_only=True)
    groups = _groups(d, qi)
    total = Counter(s)
    return [(key, _tv(Counter(s[i] for i in rows), len(rows), total, d.n)) for key, rows in groups.items()]


@dataclass(frozen=True)
class AnonymityReport:
    k: int
    l: int | None
    t: float | None
    groups: int
    smallest_group: tuple
    least_diverse_group: tuple | None = None
    most_skewed_group: tuple | None = None

    def to_dict(self) -> dict:
        return {"k": self.k, "l": self.l, "t": self.t, "groups": self.groups,
                "smallest_group": list(self.smallest_group),
                "least_diverse_group": None if self.least_diverse_group is None else list(self.least_diverse_group),
                "most_skewed_group": None if self.most_skewed_group is None else list(self.most_skewed_group)}


def anonymity_report(d: Dataset, qi, sensitive: str | None = None) -> AnonymityReport:
    """k, and l and t when a sensitive column is given, with the offending groups
    (first in row order among ties)."""
    groups = _groups(d, qi)
    keys = list(groups)
    sizes = [len(groups[key]) for key in keys]
    k_at = int(np.argmin(sizes))
    if sensitive is None:
        return AnonymityReport(sizes[k_at], None, None, len(keys), keys[k_at])
    s = _sensitive(d, sensitive)
    div = [len({s[i] for i in groups[key]}) for key in keys]
    l_at = int(np.argmin(div))
    t, t_key = None, None
    if d.schema.column(sensitive).kind == CATEGORICAL:
        tvs = _group_tv(d, qi, sensitive)
        t_at = max(range(len(tvs)), key=lambda i: (tvs[i][1], -i))
        t, t_key = float(tvs[t_at][1]), tvs[t_at][0]
    return AnonymityReport(sizes[k_at], div[l_at], t, len(keys), keys[k_at], keys[l_at], t_key)


# ---- membership inference ------------------------------------------------

@dataclass(frozen=True)
class MembershipAttack:
    """Thresholded confidence attack; ``pi`` is its accuracy on a balanced
    member/non-member evaluation set (0.5 is chance)."""

    shadows: int
    shadow_train_fraction: float
    threshold: float
    shadow_accuracy: float
    pi: float
    n_eval: int
    seed: int
    detail: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"shadows": self.shadows, "shadow_train_fraction": self.shadow_train_fraction,
                "threshold": self.threshold, "shadow_accuracy": self.shadow_accuracy, "pi": self.pi,
                "n_eval": self.n_eval, "seed": self.seed}


def best_threshold(member_conf, nonmember_conf) -> tuple[float, float]:
    """Threshold ``thr`` maximizing accuracy of "member iff conf >= thr"; ties go to
    the lowest threshold. ``inf`` (everyone a non-member) is a candidate."""
    conf = np.concatenate([member_conf, nonmember_conf])
    is_member = np.concatenate([np.ones(len(member_conf), bool), np.zeros(len(nonmember_conf), bool)])
    cands = np.append(np.unique(conf), np.inf)
    order = np.argsort(conf, kind="stable")
    c_sorted, m_sorted = conf[order], is_member[order]
    # rows with conf >= cand are called members
    start = np.searchsorted(c_sorted, cands, side="left")
    members_above = np.concatenate([np.cumsum(m_sorted[::-1])[::-1], [0]])[start]
    nonmembers_below = np.concatenate([[0], np.cumsum(~m_sorted)])[start]
    acc = (members_above + nonmembers_below) / len(conf)
    k = int(np.argmax(acc))
    return float(cands[k]), float(acc[k])


def _shadow_scores(family, hyperparams, shadow_in: Dataset, shadow_out: Dataset):
    try:
        model = fit_model(family, shadow_in, **hyperparams)
    except ValueError as exc:
        raise ValueError(f"shadow model could not be fit on {shadow_in.n} rows: {exc}") from None
    conf_in = true_label_confidence(model, encode_instances(model, shadow_in), shadow_in.label_ids()[0])
    conf_out = true_label_confidence(model, encode_instances(model, shadow_out), shadow_out.label_ids()[0])
    return conf_in, conf_out


def membership_inference(f: Model, train: Dataset, holdout: Dataset, shadows: int = 4, seed: int = 0,
                         jobs: int = 1) -> MembershipAttack:
    """Shadow-model membership inference against ``f`` (trained on ``train``).

    The holdout is shuffled and cut into ``shadows`` disjoint chunks; each
    chunk is halved into a shadow training set (members) and a shadow
    non-member set. Shadows share ``f``'s family and hyperparameters. A single
    confidence threshold is learned on the pooled shadow outputs and then
    applied to ``f`` on an equal number of records drawn from ``train`` and from
    ``holdout``.
    """
    if not f.is_classifier:
        raise ValueError("membership inference needs a classifier with confidence scores")
    if shadows < 1:
        raise ValueError("shadows must be >= 1")
    chunk = holdout.n // shadows
    if chunk < 4:
        raise ValueError(f"holdout of {holdout.n} rows is too small for {shadows} shadow models")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(holdout.n)
    tasks = []
    for s in range(shadows):
        part = perm[s * chunk:(s + 1) * chunk]
        half = len(part) // 2
        tasks.append((holdout.take(np.sort(part[:half])), holdout.take(np.sort(part[half:]))))

    def run(t):
        return _shadow_scores(f.family, f.hyperparams, *t)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    conf_in = np.concatenate([r[0] for r in results])
    conf_out = np.concatenate([r[1] for r in results])
    thr, shadow_acc = best_threshold(conf_in, conf_out)

    m = min(train.n, holdout.n)
    mem = train.take(np.sort(rng.permutation(train.n)[:m]))
    non = holdout.take(np.sort(rng.permutation(holdout.n)[:m]))
    c_mem = true_label_confidence(f, encode_instances(f, mem), mem.label_ids()[0])
    c_non = true_label_confidence(f, encode_instances(f, non), non.label_ids()[0])
    correct = int(np.sum(c_mem >= thr)) + int(np.sum(c_non < thr))
    pi = correct / (2 * m)
    return MembershipAttack(shadows, 0.5, thr, shadow_acc, pi, 2 * m, seed,
                            {"member_confidence_mean": float(c_mem.mean()),
                             "nonmember_confidence_mean": float(c_non.mean())})


def verify_privacy(attack: MembershipAttack, tau: float = 0.5) -> bool:
    """``pi <= tau`` (closed bound)."""
    if not 0 <= tau <= 1:
        raise ValueError("tau must lie in [0, 1]")
    return attack.pi <= tau
