"""First-order linear-chain CRF over character tags.

The lattice covers characters 1..n plus a final pseudo position n+1 whose
only tag is the end tag, so transition features fire from ``y_n`` into it.
All dynamic programming runs in log space.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Dataset, LabeledSentence, TagScheme, check_sentence
from .features import (
    FeatureIndex,
    TemplateConfig,
    View,
    build_index,
    identity_view,
    observations,
)
from .lexicon import Lexicon

logger = logging.getLogger(__name__)

MAGIC = "SEGCRF 1"


# -- lattice and inference ---------------------------------------------------

@dataclass
class Lattice:
    """Log-domain potentials for one sentence.

    ``unary[i, t]`` scores tag ``t`` at character ``i`` (0-based),
    ``start[t]`` the transition from the start pseudo tag, ``trans[i, a, b]``
    the transition from character ``i`` to ``i+1`` and ``end[t]`` the
    transition into the end pseudo position.
    """

    allowed: np.ndarray
    unary: np.ndarray
    start: np.ndarray
    trans: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        n, T = self.unary.shape
        if self.allowed.shape != (n, T) or self.trans.shape != (max(n - 1, 0), T, T):
            raise ValueError("inconsistent lattice shapes")
        if not self.allowed.any(axis=1).all():
            raise ValueError("every position needs at least one allowed tag")

    @property
    def n(self):
        return self.unary.shape[0]

    @property
    def num_tags(self):
        return self.unary.shape[1]

    def constrain(self, allowed: np.ndarray) -> Lattice:
        return replace(self, allowed=self.allowed & allowed)

    def path_score(self, path: Sequence[int]) -> float:
        path = list(path)
        s = self.start[path[0]] + self.unary[0, path[0]]
        for i in range(1, self.n):
            s += self.trans[i - 1, path[i - 1], path[i]] + self.unary[i, path[i]]
        return float(s + self.end[path[-1]])

    def _masked_unary(self):
        return np.where(self.allowed, self.unary, -np.inf)


def _lse_cols(m):
    top = m.max(axis=0)
    return top + np.log(np.exp(m - top).sum(axis=0))


def _lse_rows(m):
    top = m.max(axis=1)
    return top + np.log(np.exp(m - top[:, None]).sum(axis=1))


def _lse(v):
    top = v.max()
    return top + np.log(np.exp(v - top).sum())


def _forward(lat: Lattice, u):
    n = lat.n
    alpha = np.empty_like(u)
    alpha[0] = lat.start + u[0]
    for i in range(1, n):
        alpha[i] = _lse_cols(alpha[i - 1][:, None] + lat.trans[i - 1]) + u[i]
    return alpha, float(_lse(alpha[-1] + lat.end))


def _backward(lat: Lattice, u):
    n = lat.n
    beta = np.empty_like(u)
    beta[-1] = lat.end
    for i in range(n - 2, -1, -1):
        beta[i] = _lse_rows(lat.trans[i] + (u[i + 1] + beta[i + 1])[None, :])
    return beta


def log_partition(lat: Lattice) -> float:
    """Log of the summed exp-scores of every path through the allowed tags."""
    return _forward(lat, lat._masked_unary())[1]


def forward_backward(lat: Lattice):
    """Return ``(log Z, node marginals (n, T), edge marginals (n-1, T, T))``."""
    u = lat._masked_unary()
    alpha, logz = _forward(lat, u)
    beta = _backward(lat, u)
    nodes = np.exp(alpha + beta - logz)
    right = u[1:] + beta[1:]
    edges = np.exp(alpha[:-1, :, None] + lat.trans + right[:, None, :] - logz)
    return logz, nodes, edges


def marginals(lat: Lattice) -> np.ndarray:
    """Per-position posterior tag probabilities; disallowed tags get 0."""
    return forward_backward(lat)[1]


def viterbi(lat: Lattice) -> tuple[list[int], float]:
    """Best path and its score; ties go to the lower tag index."""
    u = lat._masked_unary()
    n, T = u.shape
    back = np.zeros((n, T), dtype=np.intp)
    cols = np.arange(T)
    delta = lat.start + u[0]
    for i in range(1, n):
        cand = delta[:, None] + lat.trans[i - 1]
        back[i] = cand.argmax(axis=0)
        delta = cand[back[i], cols] + u[i]
    final = delta + lat.end
    last = int(final.argmax())
    path = [last]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    path.reverse()
    return path, float(final[last])


# -- model ----------------------------------------------------------------------

@dataclass
class Encoded:
    """Observation rows of one sentence under a frozen index."""

    uids: np.ndarray
    bids: np.ndarray

    @property
    def n(self):
        return self.uids.shape[0]


class CrfModel:
    """Tag scheme, feature index and weights, plus what is needed to tag.

    ``bundle`` is set for coupled models; ``lexicon`` and ``source_model``
    are runtime attachments required when lexicon or guide features are on.
    """

    def __init__(self, scheme: TagScheme, index: FeatureIndex, config: TemplateConfig,
                 bundle=None):
        if not index.frozen:
            raise ValueError("the feature index must be frozen")
        if index.num_tags != len(scheme):
            raise ValueError("index and scheme disagree on the number of tags")
        self.scheme = scheme
        self.index = index
        self.config = config
        self.bundle = bundle
        self.uni_w = [np.zeros(m.shape) for m in index.uni_mask]
        self.bi_w = [np.zeros(m.shape) for m in index.bi_mask]
        self.lexicon: Lexicon | None = None
        self.lexicon_path: str | None = None
        self.source_model: CrfModel | None = None
        self.source_model_path: str | None = None
        self._setup_views()

    def _setup_views(self):
        T = len(self.scheme)
        self._proj = []
        for view in self.index.views:
            if view.is_identity():
                self._proj.append(None)
                continue
            Tv = len(view.tags)
            one = np.zeros((T, Tv))
            one[np.arange(T), view.projection] = 1.0
            ext = view.extended_projection()
            one_ext = np.zeros((T + 1, Tv + 1))
            one_ext[np.arange(T + 1), ext] = 1.0
            self._proj.append((np.array(view.projection), ext, one, one_ext))

    @property
    def views(self) -> tuple[View, ...]:
        return self.index.views

    @property
    def weights(self) -> np.ndarray:
        """The weight vector indexed by feature id."""
        parts = []
        for um, bm, uw, bw in zip(self.index.uni_mask, self.index.bi_mask, self.uni_w, self.bi_w):
            parts += [uw[um], bw[bm]]
        return np.concatenate(parts) if parts else np.zeros(0)

    @weights.setter
    def weights(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.index.size,):
            raise ValueError(f"expected {self.index.size} weights, got {theta.shape}")
        k = 0
        for um, bm, uw, bw in zip(self.index.uni_mask, self.index.bi_mask, self.uni_w, self.bi_w):
            for mask, w in ((um, uw), (bm, bw)):
                m = int(mask.sum())
                w[...] = 0.0
                w[mask] = theta[k:k + m]
                k += m

    def encode(self, x: str, guide=None, lexicon=None) -> Encoded:
        check_sentence(x)
        if self.config.guide and guide is None:
            if self.source_model is None:
                raise ValueError("guide model needs source annotations or a paired source model")
            guide = tag(self.source_model, x)
        uni, bi = observations(x, self.config, lexicon or self.lexicon, guide)
        return Encoded(*self.index.encode(uni, bi))

    def _potentials(self, enc: Encoded, scale=1.0):
        n, T = enc.n, len(self.scheme)
        U = np.zeros((n, T))
        B = np.zeros((n + 1, T + 1, T + 1))
        for uw, bw, proj in zip(self.uni_w, self.bi_w, self._proj):
            Uv = uw[enc.uids].sum(axis=1)
            Bv = bw[enc.bids].sum(axis=1)
            if proj is None:
                U += Uv
                B += Bv
            else:
                p, ext = proj[0], proj[1]
                U += Uv[:, p]
                B += Bv[:, ext[:, None], ext[None, :]]
        if scale != 1.0:
            U *= scale
            B *= scale
        return U, B

    def lattice_from_encoded(self, enc: Encoded, allowed=None, scale=1.0) -> Lattice:
        U, B = self._potentials(enc, scale)
        n, T = U.shape
        if allowed is None:
            allowed = np.ones((n, T), dtype=bool)
        return Lattice(allowed, U, B[0, T, :T].copy(), B[1:n, :T, :T].copy(), B[n, :T, T].copy())

    def copy_weights(self):
        return [w.copy() for w in self.uni_w], [w.copy() for w in self.bi_w]

    def load_weights(self, snapshot):
        uw, bw = snapshot
        for dst, src in zip(self.uni_w + self.bi_w, uw + bw):
            dst[...] = src


def constraint_mask(constraints, n: int, T: int) -> np.ndarray:
    if constraints is None:
        return np.ones((n, T), dtype=bool)
    if len(constraints) != n:
        raise ValueError(f"{len(constraints)} constraint sets for {n} characters")
    mask = np.zeros((n, T), dtype=bool)
    for i, s in enumerate(constraints):
        s = list(s)
        if not s:
            raise ValueError("constraint sets must be non-empty")
        mask[i, s] = True
    return mask


def build_lattice(model: CrfModel, x: str, constraints=None, guide=None,
                  lexicon=None) -> Lattice:
    enc = model.encode(x, guide, lexicon)
    return model.lattice_from_encoded(enc, constraint_mask(constraints, len(x), len(model.scheme)))


def _check_labels(model: CrfModel, labeled: LabeledSentence):
    T = len(model.scheme)
    for s in labeled.labels:
        if not s:
            raise ValueError("empty label set")
        if s[-1] >= T or s[0] < 0:
            raise ValueError("label outside the model's tag scheme")


def _path_expectations(lat: Lattice, path):
    n = lat.n
    nodes = np.zeros(lat.unary.shape)
    nodes[np.arange(n), path] = 1.0
    edges = np.zeros(lat.trans.shape)
    if n > 1:
        edges[np.arange(n - 1), path[:-1], path[1:]] = 1.0
    return lat.path_score(path), nodes, edges


def _expectations(lat: Lattice, allowed: np.ndarray):
    if (allowed.sum(axis=1) == 1).all():
        path = allowed.argmax(axis=1)
        return _path_expectations(lat, path)
    return forward_backward(lat.constrain(allowed))


def _likelihood_terms(model: CrfModel, enc: Encoded, allowed: np.ndarray, scale=1.0):
    """Log-likelihood and the per-position (observed - expected) counts."""
    if allowed.all():
        return 0.0, None, None
    lat = model.lattice_from_encoded(enc, scale=scale)
    logz_c, nodes_c, edges_c = _expectations(lat, allowed)
    logz, nodes, edges = forward_backward(lat)
    n, T = nodes.shape
    d_nodes = nodes_c - nodes
    d_trans = np.zeros((n + 1, T + 1, T + 1))
    d_trans[0, T, :T] = d_nodes[0]
    d_trans[1:n, :T, :T] = edges_c - edges
    d_trans[n, :T, T] = d_nodes[-1]
    return logz_c - logz, d_nodes, d_trans


def _view_deltas(model: CrfModel, d_nodes, d_trans):
    for proj in model._proj:
        if proj is None:
            yield d_nodes, d_trans
        else:
            one, one_ext = proj[2], proj[3]
            yield d_nodes @ one, np.einsum("iab,ac,bd->icd", d_trans, one_ext, one_ext)


def _labels_mask(model, labeled):
    _check_labels(model, labeled)
    return constraint_mask(labeled.labels, len(labeled), len(model.scheme))


def log_likelihood(model: CrfModel, labeled: LabeledSentence, guide=None, lexicon=None) -> float:
    """Log of the probability mass of every path consistent with the label sets."""
    allowed = _labels_mask(model, labeled)
    if allowed.all():
        return 0.0
    lat = model.lattice_from_encoded(model.encode(labeled.chars, guide, lexicon))
    logz = log_partition(lat)
    if (allowed.sum(axis=1) == 1).all():
        return lat.path_score(allowed.argmax(axis=1)) - logz
    return log_partition(lat.constrain(allowed)) - logz


def gradient(model: CrfModel, labeled: LabeledSentence, guide=None, lexicon=None) -> dict[int, float]:
    """Sparse gradient of :func:`log_likelihood` with respect to the weights."""
    allowed = _labels_mask(model, labeled)
    enc = model.encode(labeled.chars, guide, lexicon)
    _, d_nodes, d_trans = _likelihood_terms(model, enc, allowed)
    if d_nodes is None:
        return {}
    out = {}
    for v, (dn, dt) in enumerate(_view_deltas(model, d_nodes, d_trans)):
        for ids, rows, delta in ((model.index.uni_ids[v], enc.uids, dn),
                                 (model.index.bi_ids[v], enc.bids, dt)):
            acc = np.zeros(ids.shape)
            np.add.at(acc, rows, delta[:, None])
            sel = (ids >= 0) & (acc != 0)
            for k, val in zip(ids[sel], acc[sel]):
                out[int(k)] = float(val)
    return dict(sorted(out.items()))


def decode(model: CrfModel, x: str, constraints=None, guide=None, lexicon=None) -> list[int]:
    return viterbi(build_lattice(model, x, constraints, guide, lexicon))[0]


def tag(model: CrfModel, x: str, guide=None, lexicon=None) -> list[str]:
    """Best tag sequence for ``x`` under the unconstrained lattice."""
    if not x:
        raise ValueError("empty sentence")
    return [model.scheme.tags[t] for t in decode(model, x, None, guide, lexicon)]


# -- training -----------------------------------------------------------------

@dataclass
class Hyperparameters:
    iterations: int = 20
    eta0: float = 0.1
    l2: float = 1e-4
    seed: int = 0
    sample_count: int = 5000


@dataclass
class Example:
    sentence: LabeledSentence
    guide: tuple[str, ...] | None = None


@dataclass
class TrainingReport:
    history: list[dict] = field(default_factory=list)
    best_iteration: int | None = None


class ShuffleSampler:
    """Every sentence of every dataset once per iteration, shuffled."""

    def __init__(self, sizes: Sequence[int], seed: int = 0):
        if not sizes or sum(sizes) == 0:
            raise ValueError("no training data")
        self.pairs = np.array([(d, k) for d, m in enumerate(sizes) for k in range(m)])
        self.seed = seed

    def batch(self, iteration: int) -> list[tuple[int, int]]:
        rng = np.random.default_rng([self.seed, iteration])
        return [tuple(map(int, p)) for p in self.pairs[rng.permutation(len(self.pairs))]]


def train(model: CrfModel, datasets: Sequence[Sequence[Example]], sampler=None,
          hp: Hyperparameters | None = None,
          dev_eval: Callable[[CrfModel], dict] | None = None,
          lexicon: Lexicon | None = None) -> TrainingReport:
    """Stochastic gradient ascent on the L2-regularised (ambiguous) log-likelihood.

    Per-sentence updates with step ``eta0 / (1 + t / N)`` where N is the
    number of sentences per iteration.  The L2 term is spread over the N
    updates as a shrink after each step, applied lazily through a global
    scale factor; a shrink factor at or below zero resets the weights.  When
    ``dev_eval`` is given the weights of the best iteration (by its
    ``"f1"`` entry) are kept.
    """
    hp = hp or Hyperparameters()
    if not datasets or not any(len(d) for d in datasets):
        raise ValueError("empty training data")
    if sampler is None:
        sampler = ShuffleSampler([len(d) for d in datasets], hp.seed)
    lexicon = lexicon or model.lexicon
    T = len(model.scheme)
    cache = {}

    def prepare(d, k):
        key = (d, k)
        if key not in cache:
            ex = datasets[d][k]
            _check_labels(model, ex.sentence)
            enc = model.encode(ex.sentence.chars, ex.guide, lexicon)
            allowed = constraint_mask(ex.sentence.labels, len(ex.sentence), T)
            cache[key] = (enc, allowed)
        return cache[key]

    report = TrainingReport()
    best = None
    masks_u, masks_b = model.index.uni_mask, model.index.bi_mask
    scale = 1.0
    t = 0
    for it in range(hp.iterations):
        order = sampler.batch(it)
        N = len(order)
        total_ll = 0.0
        for d, k in order:
            enc, allowed = prepare(d, k)
            eta = hp.eta0 / (1.0 + t / N)
            ll, d_nodes, d_trans = _likelihood_terms(model, enc, allowed, scale)
            total_ll += ll
            t += 1
            if d_nodes is not None:
                step = eta / scale
                deltas = _view_deltas(model, d_nodes, d_trans)
                for v, (dn, dt) in enumerate(deltas):
                    np.add.at(model.uni_w[v], enc.uids,
                              (step * dn)[:, None, :] * masks_u[v][enc.uids])
                    np.add.at(model.bi_w[v], enc.bids,
                              (step * dt)[:, None] * masks_b[v][enc.bids])
            # shrink after the step: w <- (1 - eta*l2/N) * (w + eta*g)
            decay = 1.0 - eta * hp.l2 / N
            if decay <= 0.0:
                for w in model.uni_w + model.bi_w:
                    w[...] = 0.0
                scale = 1.0
                continue
            scale *= decay
            if scale < 1e-6:
                for w in model.uni_w + model.bi_w:
                    w *= scale
                scale = 1.0
        for w in model.uni_w + model.bi_w:
            w *= scale
        scale = 1.0
        entry = {"iteration": it + 1, "train_ll": total_ll, "sentences": N}
        if dev_eval is not None:
            entry.update(dev_eval(model))
            if best is None or entry["f1"] > best[0]:
                best = (entry["f1"], it + 1, model.copy_weights())
        report.history.append(entry)
        logger.info("iteration %s", " ".join(f"{k}={_fmt(v)}" for k, v in entry.items()))
    if best is not None:
        model.load_weights(best[2])
        report.best_iteration = best[1]
        logger.info("keeping weights of iteration %d (dev f1 %.4f)", best[1], best[0])
    return report


def _fmt(v):
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def new_model(scheme: TagScheme, datasets: Sequence[Sequence[Example]], config: TemplateConfig,
              views: Sequence[View] | None = None, lexicon: Lexicon | None = None,
              bundle=None) -> CrfModel:
    """Build the feature index over the training data and return a zero-weight model."""
    views = views or [identity_view(scheme.tags)]
    examples = ((ex.sentence, ex.guide) for ds in datasets for ex in ds)
    index = build_index(examples, views, config, lexicon)
    model = CrfModel(scheme, index, config, bundle)
    model.lexicon = lexicon
    return model


def examples_from(dataset: Dataset, guides=None) -> list[Example]:
    if guides is None:
        return [Example(s) for s in dataset]
    return [Example(s, tuple(g)) for s, g in zip(dataset, guides)]


# -- model files --------------------------------------------------------------

def _bool(s):
    if s not in ("true", "false"):
        raise ValueError(f"expected true/false, got {s!r}")
    return s == "true"


def save_model(model: CrfModel, path):
    """Write the versioned text model file."""
    cfg = model.config
    lines = [MAGIC, f"scheme\t{model.scheme.kind}\t{' '.join(model.scheme.tags)}"]
    if model.bundle is not None:
        for side, sch in (("A", model.bundle.scheme_a), ("B", model.bundle.scheme_b)):
            lines.append(f"side\t{side}\t{sch.kind}\t{' '.join(sch.tags)}")
    entries = [("baseline", str(cfg.baseline).lower()), ("lexicon", str(cfg.lexicon).lower()),
               ("guide", str(cfg.guide).lower()), ("lexicon_cap", str(cfg.lexicon_cap)),
               ("cutoff", str(cfg.cutoff))]
    if model.lexicon_path:
        entries.append(("lexicon_path", model.lexicon_path))
    if model.source_model_path:
        entries.append(("source_model", model.source_model_path))
    lines += [f"config\t{k}\t{v}" for k, v in entries]
    strings = model.index.strings()
    theta = model.weights
    lines.append(f"features\t{len(strings)}")
    lines += [f"{s}\t{float(w)!r}" for s, w in zip(strings, theta)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path, load_attachments: bool = True) -> CrfModel:
    """Read a model file; lexicon and paired source model are loaded if recorded."""
    from .coupled import bundle_from_schemes, coupled_views
    from .lexicon import load_lexicon

    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path}: not a model file (expected header {MAGIC!r})")
    scheme = None
    sides = {}
    cfg = {}
    k = 1
    while k < len(lines):
        parts = lines[k].split("\t")
        k += 1
        if parts[0] == "scheme":
            scheme = TagScheme(tuple(parts[2].split()), parts[1])
        elif parts[0] == "side":
            sides[parts[1]] = TagScheme(tuple(parts[3].split()), parts[2])
        elif parts[0] == "config":
            cfg[parts[1]] = parts[2]
        elif parts[0] == "features":
            count = int(parts[1])
            break
        else:
            raise ValueError(f"{path}:{k}: unexpected header line {lines[k - 1]!r}")
    else:
        raise ValueError(f"{path}: missing features block")
    if scheme is None:
        raise ValueError(f"{path}: missing scheme line")
    body = lines[k:k + count]
    if len(body) != count:
        raise ValueError(f"{path}: expected {count} feature lines, found {len(body)}")
    strings, weights = [], []
    for s in body:
        feat, _, w = s.rpartition("\t")
        strings.append(feat)
        weights.append(float(w))
    config = TemplateConfig(_bool(cfg.get("baseline", "true")), _bool(cfg.get("lexicon", "false")),
                            _bool(cfg.get("guide", "false")), int(cfg.get("lexicon_cap", 6)),
                            int(cfg.get("cutoff", 1)))
    bundle = None
    if sides:
        bundle = bundle_from_schemes(scheme, sides["A"], sides["B"])
        views = coupled_views(bundle)
    else:
        views = [identity_view(scheme.tags)]
    index = FeatureIndex.from_strings(views, strings, config.cutoff)
    model = CrfModel(scheme, index, config, bundle)
    # write weights by string so the row order of the rebuilt index does not matter
    theta = np.zeros(index.size)
    for s, w in zip(strings, weights):
        theta[index.get(s)] = w
    model.weights = theta
    model.lexicon_path = cfg.get("lexicon_path")
    model.source_model_path = cfg.get("source_model")
    if load_attachments:
        if config.lexicon and model.lexicon_path:
            lp = _resolve(path, model.lexicon_path)
            if lp.exists():
                model.lexicon = load_lexicon(lp)
        if config.guide and model.source_model_path:
            sp = _resolve(path, model.source_model_path)
            if sp.exists():
                model.source_model = load_model(sp)
    return model


def _resolve(model_path: Path, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else model_path.parent / p
