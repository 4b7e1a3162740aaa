"""Offline codebook synthesis from statistical CSI.

For each of Q virtual channel draws, alternating optimization pairs exact
water-filling power allocation with one-element-at-a-time refinement of the
discrete RIS phases, and the resulting configuration, allocation, and
predicted rate become one codeword. Also provides the uniform-random
baseline codebook and a line-oriented text serialization.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, StatisticalCsi, composite_channel, sample_channel_realization
from .linalg import SingularMatrixError, gram_inverse

MAX_VIRTUAL_REDRAWS = 10


@dataclass(frozen=True)
class RcConfig:
    """Discrete RIS reflection configuration: N phase indices at b bits.

    Index i maps to the phase i * 2 pi / 2^b, i.e. a reflection coefficient
    exp(j theta) of unit modulus.
    """

    phase_indices: tuple
    bits: int

    def __post_init__(self):
        object.__setattr__(self, "phase_indices", tuple(int(i) for i in self.phase_indices))
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        levels = 1 << self.bits
        if len(self.phase_indices) < 1:
            raise ValueError("need at least one RIS element")
        if any(i < 0 or i >= levels for i in self.phase_indices):
            raise ValueError(f"phase indices must lie in [0, {levels})")

    @property
    def num_elements(self) -> int:
        return len(self.phase_indices)

    @property
    def phase_vector(self) -> np.ndarray:
        """Unit-modulus reflection coefficients exp(j * index * 2pi/2^b)."""
        step = 2.0 * np.pi / (1 << self.bits)
        return np.exp(1j * step * np.asarray(self.phase_indices, dtype=float))


def _arrays_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(np.asarray(a), np.asarray(b))


@dataclass(frozen=True, eq=False)
class Codeword:
    """One codebook entry: RC configuration plus its offline allocation.

    ``power_allocation`` and ``predicted_rate`` are None for baseline
    codebooks whose allocation is only computed online. ``rate_trace`` is a
    diagnostic record of the optimization objective and never serialized.
    """

    rc: RcConfig
    power_allocation: np.ndarray = None
    predicted_rate: float = None
    rate_trace: tuple = field(default=None, compare=False)

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return (self.rc == other.rc
                and _arrays_equal(self.power_allocation, other.power_allocation)
                and self.predicted_rate == other.predicted_rate)


@dataclass(frozen=True)
class CodebookMeta:
    """Provenance of a codebook: sizes, build seed, and CSI fingerprint."""

    seed: int
    bits: int
    num_elements: int
    num_users: int
    p_d_watts: float
    csi_fingerprint: str
    noise_user_watts: tuple = None


@dataclass(eq=False)
class Codebook:
    """Ordered list of Q codewords sharing N, K, and b."""

    codewords: list
    meta: CodebookMeta

    def __post_init__(self):
        if len(self.codewords) < 1:
            raise ValueError("codebook must contain at least one codeword")
        for q, cw in enumerate(self.codewords):
            if cw.rc.num_elements != self.meta.num_elements or cw.rc.bits != self.meta.bits:
                raise ValueError(f"codeword {q} inconsistent with metadata")
            if cw.power_allocation is not None:
                alloc = np.asarray(cw.power_allocation, dtype=float)
                if alloc.shape != (self.meta.num_users,):
                    raise ValueError(f"codeword {q} allocation has wrong length")
                if np.any(alloc < 0):
                    raise ValueError(f"codeword {q} allocation has negative entries")
                total = float(alloc.sum())
                if abs(total - self.meta.p_d_watts) > 1e-9 * max(self.meta.p_d_watts, 1.0):
                    raise ValueError(
                        f"codeword {q} allocation sums to {total}, "
                        f"expected {self.meta.p_d_watts}"
                    )

    def __len__(self) -> int:
        return len(self.codewords)

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.meta == other.meta and self.codewords == other.codewords

    def prefix(self, q_size: int) -> "Codebook":
        """First ``q_size`` codewords as a codebook (training-budget subset)."""
        if not 1 <= q_size <= len(self.codewords):
            raise ValueError(f"prefix size must lie in [1, {len(self.codewords)}]")
        return Codebook(codewords=list(self.codewords[:q_size]), meta=self.meta)


@dataclass(frozen=True)
class AoOptions:
    """Alternating-optimization budget and stopping rule."""

    max_outer_iterations: int = 20
    convergence_tol: float = 1e-4
    sweep_passes_per_refinement: int = 1

    def __post_init__(self):
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be > 0")
        if self.sweep_passes_per_refinement < 0:
            raise ValueError("sweep_passes_per_refinement must be >= 0")


def generate_virtual_channels(csi: StatisticalCsi,
                              rng: np.random.Generator) -> ChannelRealization:
    """One virtual realization: fixed LoS, freshly drawn NLoS components."""
    return sample_channel_realization(csi, rng)


def waterfill(u_diag: np.ndarray, noise: np.ndarray, p_d: float) -> np.ndarray:
    """Exact water-filling allocation maximizing sum log2(1 + p_k/(u_k s_k)).

    Solves max sum_k log2(1 + p_k / (noise_k * u_k)) subject to
    sum p_k = p_d, p_k >= 0, by sorting the per-user floors and testing
    each active-set size in closed form; no iterative tolerance involved.
    """
    u = np.asarray(u_diag, dtype=float)
    s = np.asarray(noise, dtype=float)
    if np.any(u <= 0) or np.any(s <= 0):
        raise ValueError("u_diag and noise must be strictly positive")
    if p_d <= 0:
        raise ValueError("p_d must be > 0")
    floors = s * u
    order = np.argsort(floors)
    sorted_floors = floors[order]
    k = len(floors)
    # Largest active set whose common water level sits above its highest floor.
    cumsum = np.cumsum(sorted_floors)
    for m in range(k, 0, -1):
        level = (p_d + cumsum[m - 1]) / m
        if level > sorted_floors[m - 1]:
            break
    alloc = np.maximum(level - floors, 0.0)
    return alloc


def received_powers_from_allocation(u_diag: np.ndarray,
                                    allocation: np.ndarray) -> np.ndarray:
    """Per-user received powers p_k = allocated transmit power / u_k."""
    u = np.asarray(u_diag, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u_diag must be strictly positive")
    return np.asarray(allocation, dtype=float) / u


def _zf_rate_from_channels(h: np.ndarray, p_d: float, noise: np.ndarray):
    """Water-filled zero-forcing sum rate for a stacked M x K channel.

    Returns (rate, allocation, u_diag); raises SingularMatrixError when the
    Gram matrix is not invertible.
    """
    u_mat = gram_inverse(h)
    u_diag = np.real(np.diag(u_mat)).copy()
    if np.any(u_diag <= 0):
        raise SingularMatrixError(0.0)
    alloc = waterfill(u_diag, noise, p_d)
    received = received_powers_from_allocation(u_diag, alloc)
    rate = float(np.sum(np.log2(1.0 + received / np.asarray(noise, dtype=float))))
    return rate, alloc, u_diag


def _stack_composite(realization: ChannelRealization, phi: np.ndarray) -> np.ndarray:
    """M x K matrix of composite channels for one RC configuration."""
    cols = [composite_channel(realization.g, realization.h_r[k], realization.h_d[k], phi)
            for k in range(realization.num_users)]
    return np.column_stack(cols)


def sum_rate_given_phases(realization: ChannelRealization, rc: RcConfig,
                          p_d: float, noise: np.ndarray) -> float:
    """Zero-forcing sum rate of one RC configuration with optimal allocation."""
    if p_d == 0:
        return 0.0
    h = _stack_composite(realization, rc.phase_vector)
    rate, _, _ = _zf_rate_from_channels(h, p_d, noise)
    return rate


class _CompositeWorkspace:
    """Incremental composite-channel updates for the element-wise sweep.

    Per user k the channel row is h_d_k^H + sum_n phi_n * (h_r_k[n]^* g[n, :]);
    flipping element n shifts the row by (phi_new - phi_old) times a
    precomputed contribution, so each candidate costs O(M K) instead of
    O(N M K).
    """

    def __init__(self, realization: ChannelRealization, rc: RcConfig):
        self.bits = rc.bits
        self.phases = np.array(rc.phase_vector, dtype=complex)
        k_users = realization.num_users
        # contrib[k] has shape (N, M): row n is h_r_k[n]^* * g[n, :]
        self.contrib = [realization.h_r[k].conj()[:, None] * realization.g
                        for k in range(k_users)]
        base = [realization.h_d[k].conj() for k in range(k_users)]
        self.rows = [base[k] + self.phases @ self.contrib[k] for k in range(k_users)]

    def candidate_matrix(self, n: int, phi_candidate: complex) -> np.ndarray:
        delta = phi_candidate - self.phases[n]
        cols = [(self.rows[k] + delta * self.contrib[k][n]).conj()
                for k in range(len(self.rows))]
        return np.column_stack(cols)

    def commit(self, n: int, phi_candidate: complex):
        delta = phi_candidate - self.phases[n]
        for k in range(len(self.rows)):
            self.rows[k] = self.rows[k] + delta * self.contrib[k][n]
        self.phases[n] = phi_candidate


def refine_phases(realization: ChannelRealization, rc_init: RcConfig,
                  p_d: float, noise: np.ndarray, opts: AoOptions) -> RcConfig:
    """Successive refinement of the RIS phases, one element at a time.

    Sweeps elements in index order; for each element every discrete phase
    level is tried with the others held fixed and the sum-rate maximizer
    kept (ties resolved toward the smallest index). Stops after
    ``opts.sweep_passes_per_refinement`` passes or the first pass that
    changes nothing.
    """
    levels = 1 << rc_init.bits
    step = 2.0 * np.pi / levels
    candidates = np.exp(1j * step * np.arange(levels))
    ws = _CompositeWorkspace(realization, rc_init)
    indices = list(rc_init.phase_indices)
    n_elems = rc_init.num_elements

    for _ in range(opts.sweep_passes_per_refinement):
        changed = False
        for n in range(n_elems):
            best_idx = None
            best_rate = -math.inf
            for cand_idx in range(levels):
                h = ws.candidate_matrix(n, candidates[cand_idx])
                rate, _, _ = _zf_rate_from_channels(h, p_d, noise)
                if rate > best_rate:
                    best_rate = rate
                    best_idx = cand_idx
            if best_idx != indices[n]:
                ws.commit(n, candidates[best_idx])
                indices[n] = best_idx
                changed = True
        if not changed:
            break
    return RcConfig(phase_indices=tuple(indices), bits=rc_init.bits)


def alternating_optimize(realization: ChannelRealization, p_d: float,
                         noise: np.ndarray, bits: int, opts: AoOptions,
                         rng: np.random.Generator) -> Codeword:
    """Joint phase/allocation optimization for one virtual channel.

    Starts from uniformly random discrete phases, then alternates
    water-filled allocation with phase refinement until the relative
    sum-rate improvement drops below ``opts.convergence_tol`` or the outer
    iteration budget is exhausted. The recorded objective trace is
    nondecreasing.
    """
    levels = 1 << bits
    n_elems = realization.g.shape[0]
    rc = RcConfig(phase_indices=tuple(rng.integers(0, levels, size=n_elems)), bits=bits)

    h = _stack_composite(realization, rc.phase_vector)
    rate, alloc, _ = _zf_rate_from_channels(h, p_d, noise)
    trace = [rate]

    for _ in range(opts.max_outer_iterations):
        rc = refine_phases(realization, rc, p_d, noise, opts)
        h = _stack_composite(realization, rc.phase_vector)
        new_rate, alloc, _ = _zf_rate_from_channels(h, p_d, noise)
        trace.append(new_rate)
        if new_rate <= rate * (1.0 + opts.convergence_tol):
            rate = new_rate
            break
        rate = new_rate

    return Codeword(rc=rc, power_allocation=alloc, predicted_rate=rate,
                    rate_trace=tuple(trace))


def _codebook_child_rng(seed: int, q: int) -> np.random.Generator:
    # Stable per-codeword stream: prefixes of a larger build match a smaller one.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(q,)))


def build_codebook(csi: StatisticalCsi, q_size: int, p_d: float,
                   noise: np.ndarray, bits: int, opts: AoOptions,
                   seed: int) -> Codebook:
    """Offline stage: Q virtual channels, each optimized into a codeword.

    Deterministic given the integer seed; codeword q only depends on
    (seed, q), so a size-Q build is a prefix of any larger build with the
    same seed. A virtual draw whose composite matrix is rank deficient is
    redrawn (up to MAX_VIRTUAL_REDRAWS times) before giving up.
    """
    if q_size < 1:
        raise ValueError("q_size must be >= 1")
    noise = np.asarray(noise, dtype=float)
    codewords = []
    for q in range(q_size):
        rng = _codebook_child_rng(seed, q)
        last_error = None
        for _ in range(MAX_VIRTUAL_REDRAWS + 1):
            virtual = generate_virtual_channels(csi, rng)
            try:
                codewords.append(alternating_optimize(virtual, p_d, noise, bits, opts, rng))
                last_error = None
                break
            except SingularMatrixError as err:
                last_error = err
        if last_error is not None:
            raise SingularMatrixError(last_error.rcond)
    meta = CodebookMeta(seed=int(seed), bits=bits, num_elements=csi.num_ris_elements,
                        num_users=csi.num_users, p_d_watts=float(p_d),
                        csi_fingerprint=csi.fingerprint(),
                        noise_user_watts=tuple(float(x) for x in noise))
    return Codebook(codewords=codewords, meta=meta)


def random_codebook(n_elems: int, bits: int, q_size: int, seed: int,
                    num_users: int = 1, p_d: float = 0.0,
                    csi_fingerprint: str = "") -> Codebook:
    """Baseline codebook of i.i.d. uniform phase indices, no offline allocation."""
    if q_size < 1:
        raise ValueError("q_size must be >= 1")
    rng = np.random.default_rng(seed)
    levels = 1 << bits
    draws = rng.integers(0, levels, size=(q_size, n_elems))
    codewords = [Codeword(rc=RcConfig(phase_indices=tuple(row), bits=bits))
                 for row in draws]
    meta = CodebookMeta(seed=int(seed), bits=bits, num_elements=n_elems,
                        num_users=num_users, p_d_watts=float(p_d),
                        csi_fingerprint=csi_fingerprint)
    return Codebook(codewords=codewords, meta=meta)


class CodebookParseError(ValueError):
    """Malformed codebook file; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def _fmt(x: float) -> str:
    # 17 significant digits: exact float64 round trip.
    return f"{x:.16e}"


def serialize_codebook(cb: Codebook) -> str:
    """Line-oriented text form of a codebook.

    Header of key=value lines, then per codeword: one line of phase
    indices, one line of the power allocation in watts (or ``-``), and one
    ``rate=`` line (or ``rate=-``). Values use 17 significant digits so the
    round trip is exact.
    """
    lines = [
        "version=1",
        f"Q={len(cb.codewords)}",
        f"N={cb.meta.num_elements}",
        f"K={cb.meta.num_users}",
        f"b={cb.meta.bits}",
        f"P_d_watts={_fmt(cb.meta.p_d_watts)}",
        f"seed={cb.meta.seed}",
        f"csi_fingerprint={cb.meta.csi_fingerprint}",
    ]
    if cb.meta.noise_user_watts is not None:
        lines.append("sigma_k2_watts=" + " ".join(_fmt(x) for x in cb.meta.noise_user_watts))
    for cw in cb.codewords:
        lines.append(" ".join(str(i) for i in cw.rc.phase_indices))
        if cw.power_allocation is None:
            lines.append("-")
        else:
            lines.append(" ".join(_fmt(x) for x in cw.power_allocation))
        if cw.predicted_rate is None:
            lines.append("rate=-")
        else:
            lines.append(f"rate={_fmt(cw.predicted_rate)}")
    return "\n".join(lines) + "\n"


def deserialize_codebook(text: str, expected_fingerprint: str = None) -> Codebook:
    """Parse the codebook text format; inverse of :func:`serialize_codebook`.

    Raises :class:`CodebookParseError` with the offending line on malformed
    or truncated input. When ``expected_fingerprint`` is given and differs
    from the stored one, a UserWarning is issued (the codebook is still
    returned).
    """
    import warnings

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def take(expected_key: str, convert):
        nonlocal pos
        if pos >= len(lines):
            raise CodebookParseError(pos + 1, f"unexpected end of file, wanted {expected_key}=")
        line = lines[pos]
        if "=" not in line:
            raise CodebookParseError(pos + 1, f"expected {expected_key}=..., got {line!r}")
        key, _, value = line.partition("=")
        if key != expected_key:
            raise CodebookParseError(pos + 1, f"expected key {expected_key}, got {key}")
        try:
            value = convert(value)
        except ValueError:
            raise CodebookParseError(pos + 1,
                                     f"bad value for {expected_key}: {value!r}") from None
        pos += 1
        return value

    version = take("version", str)
    if version != "1":
        raise CodebookParseError(1, f"unsupported version {version!r}")
    q_size = take("Q", int)
    n_elems = take("N", int)
    k_users = take("K", int)
    bits = take("b", int)
    p_d = take("P_d_watts", float)
    seed = take("seed", int)
    fingerprint = take("csi_fingerprint", str)

    noise = None
    if pos < len(lines) and lines[pos].startswith("sigma_k2_watts="):
        raw = lines[pos].partition("=")[2]
        try:
            noise = tuple(float(x) for x in raw.split())
        except ValueError:
            raise CodebookParseError(pos + 1, "bad sigma_k2_watts values") from None
        pos += 1

    codewords = []
    for q in range(q_size):
        if pos + 3 > len(lines):
            raise CodebookParseError(len(lines) + 1,
                                     f"truncated: codeword {q + 1} of {q_size} missing")
        idx_line, alloc_line, rate_line = lines[pos], lines[pos + 1], lines[pos + 2]
        try:
            indices = tuple(int(x) for x in idx_line.split())
        except ValueError:
            raise CodebookParseError(pos + 1, "bad phase indices") from None
        if len(indices) != n_elems:
            raise CodebookParseError(pos + 1,
                                     f"expected {n_elems} phase indices, got {len(indices)}")
        if alloc_line == "-":
            alloc = None
        else:
            try:
                alloc = np.array([float(x) for x in alloc_line.split()], dtype=float)
            except ValueError:
                raise CodebookParseError(pos + 2, "bad power allocation") from None
            if alloc.shape != (k_users,):
                raise CodebookParseError(pos + 2,
                                         f"expected {k_users} allocations, got {alloc.shape[0]}")
        if not rate_line.startswith("rate="):
            raise CodebookParseError(pos + 3, f"expected rate=..., got {rate_line!r}")
        rate_value = rate_line.partition("=")[2]
        if rate_value == "-":
            rate = None
        else:
            try:
                rate = float(rate_value)
            except ValueError:
                raise CodebookParseError(pos + 3, "bad rate value") from None
        try:
            rc = RcConfig(phase_indices=indices, bits=bits)
        except ValueError as err:
            raise CodebookParseError(pos + 1, str(err)) from None
        codewords.append(Codeword(rc=rc, power_allocation=alloc, predicted_rate=rate))
        pos += 3

    if pos != len(lines):
        raise CodebookParseError(pos + 1, "trailing content after last codeword")

    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        warnings.warn(
            f"codebook CSI fingerprint {fingerprint[:12]}... does not match "
            f"expected {expected_fingerprint[:12]}...",
            UserWarning, stacklevel=2,
        )
    meta = CodebookMeta(seed=seed, bits=bits, num_elements=n_elems,
                        num_users=k_users, p_d_watts=p_d,
                        csi_fingerprint=fingerprint, noise_user_watts=noise)
    try:
        return Codebook(codewords=codewords, meta=meta)
    except ValueError as err:
        raise CodebookParseError(len(lines), str(err)) from None
