"""RF-chain snapshots, per-frame autocorrelation and the coarray measurement tensor.

Each frame is reduced to one sample of the difference coarray: entry
``(v, h)`` is ``R[i, j]`` for an RF-chain pair whose port coordinates differ
by ``(v, h)``. The frames are stacked into an ``N_vdc x N_hdc x M_t`` tensor
whose mode-1 index is the vertical lag and mode-2 index the horizontal lag.

Horizontal lag ``h`` carries the factor ``M_h j^h J_m1 J_m2`` of the pair
``(m1, m2)`` that produced it, so one pair is fixed per ``h`` (the canonical
pair) and every row is referred to it. Pairs whose Bessel orders match the
canonical ones up to sign are rescaled by the exact ``(-1)^m`` factor. A
pair that does not match leaves the row inconsistent with the separable
model; :attr:`CoarrayMap.model_consistent` reports whether that happens.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .design import NestedDesign, rf_chain_locations
from .geometry import ArrayConfig, SourceSet, vertical_steering
from .phase_space import PhaseSpaceConfig, bessel_j_orders, build_Bhps, phase_space_steering
from .tensor import ComplexTensor


def _neg_sign(m: int) -> int:
    """``J_m = _neg_sign(m) * J_|m|``."""
    return -1 if (m < 0 and m % 2) else 1


@dataclass(frozen=True)
class CoarrayMap:
    """Which autocorrelation entry feeds each coarray lag.

    Rows run over ``(v, h)`` with ``v`` slow and ``h`` fast. ``pairs[r]`` holds
    the RF-chain indices ``(i, j)`` read as ``R[i, j]``; ``weights[r]`` is the
    ``+-1`` factor referring that entry to the canonical pair of its ``h``.
    """

    design: NestedDesign
    v_lags: np.ndarray
    h_lags: np.ndarray
    pairs: np.ndarray
    orders: np.ndarray
    weights: np.ndarray
    canonical: np.ndarray  # (N_hdc, 2) Bessel orders per horizontal lag
    consistent_rows: np.ndarray
    zero_lag_row: int

    @property
    def model_consistent(self) -> bool:
        return bool(self.consistent_rows.all())

    @property
    def shape(self) -> tuple[int, int]:
        return self.v_lags.size, self.h_lags.size


def _cross_orders(h: int, dense_h, sparse_h, one_sided: bool) -> list[tuple[int, int]]:
    """Bessel-order pairs ``(m1, m2)`` of sparse/dense cross pairs with lag ``h``.

    Sparse-then-dense pairs reach every ``v >= 0``, dense-then-sparse pairs
    every ``v <= 0``.
    """
    out = []
    for s in sparse_h:
        for d in dense_h:
            if s - d == h:
                out.append((int(s), int(d)))
            if not one_sided and d - s == h:
                out.append((int(d), int(s)))
    return out


def _abs_match(a, b) -> bool:
    return sorted((abs(a[0]), abs(a[1]))) == sorted((abs(b[0]), abs(b[1])))


def coarray_map(design: NestedDesign, one_sided: bool = False) -> CoarrayMap:
    """Build the lag-to-entry map for a design.

    The two-sided map covers vertical lags ``-(N-1)..N-1`` with
    ``N = N_vd N_vs``. Negative lags only repeat the conjugates of positive
    ones, so ``one_sided`` keeps lags ``0..N-1``, all read from
    sparse-then-dense pairs. Use it when the sparse comb is not symmetric
    about mode 0 and the two halves carry different Bessel factors.
    """
    locs, tags = rf_chain_locations(design)
    dense_h = np.arange(-(design.N_hd - 1) // 2, (design.N_hd - 1) // 2 + 1)
    sparse_h = np.unique(locs[tags == "S", 1])
    v_lags = design.coarray_vertical_lags
    if one_sided:
        v_lags = v_lags[v_lags >= 0]
    h_lags = design.coarray_horizontal_lags

    canonical = []
    for h in h_lags:
        cands = _cross_orders(int(h), dense_h, sparse_h, one_sided)
        if not cands:
            raise AssertionError(f"horizontal lag {h} has no sparse/dense pair")
        canonical.append(min(cands, key=lambda m: (abs(m[0]) + abs(m[1]), m[0])))
    canonical = np.array(canonical)

    # every ordered RF pair grouped by lag
    diff = locs[:, None, :] - locs[None, :, :]
    by_lag: dict[tuple[int, int], list[tuple[int, int]]] = {}
    n = len(locs)
    for i in range(n):
        for j in range(n):
            by_lag.setdefault((int(diff[i, j, 0]), int(diff[i, j, 1])), []).append((i, j))

    pairs, orders, weights, ok = [], [], [], []
    zero_row = -1
    for v in v_lags:
        for hi, h in enumerate(h_lags):
            cands = by_lag.get((int(v), int(h)))
            if not cands:
                raise AssertionError(f"lag ({v}, {h}) is missing from the design's coarray")
            canon = tuple(canonical[hi])

            def rank(ij):
                m = (int(locs[ij[0], 1]), int(locs[ij[1], 1]))
                return (not _abs_match(m, canon), m != canon, abs(m[0]) + abs(m[1]), m[0], ij)

            i, j = min(cands, key=rank)
            m = (int(locs[i, 1]), int(locs[j, 1]))
            match = _abs_match(m, canon)
            w = _neg_sign(m[0]) * _neg_sign(m[1]) * _neg_sign(canon[0]) * _neg_sign(canon[1])
            if v == 0 and h == 0:
                zero_row = len(pairs)
            pairs.append((i, j))
            orders.append(m)
            weights.append(w if match else 1)
            ok.append(match)
    return CoarrayMap(
        design=design,
        v_lags=v_lags,
        h_lags=h_lags,
        pairs=np.array(pairs),
        orders=np.array(orders),
        weights=np.array(weights, dtype=float),
        canonical=canonical,
        consistent_rows=np.array(ok),
        zero_lag_row=zero_row,
    )


@dataclass(frozen=True)
class CoarrayModel:
    """Array, port layout and RF allocation together, with coarray steering.

    ``one_sided=None`` uses the two-sided coarray when it fits the separable
    model and the one-sided one otherwise.
    """

    cfg: ArrayConfig
    ps: PhaseSpaceConfig
    design: NestedDesign
    one_sided: bool | None = None
    cmap: CoarrayMap = field(init=False, repr=False)

    def __post_init__(self):
        if self.design.M_vr != self.ps.M_vr or self.design.M_hr != self.ps.M_hr:
            raise ValueError(
                f"design is for a {self.design.M_vr}x{self.design.M_hr} port grid, "
                f"ports are {self.ps.M_vr}x{self.ps.M_hr}"
            )
        cmap = coarray_map(self.design, one_sided=bool(self.one_sided))
        if self.one_sided is None and not cmap.model_consistent:
            cmap = coarray_map(self.design, one_sided=True)
        object.__setattr__(self, "cmap", cmap)

    def vertical_steering(self, theta: float) -> np.ndarray:
        """``a_dfv``: ``exp(-j 2 pi h v cos(theta)) / M_v`` over the vertical lags."""
        v = self.cmap.v_lags
        return np.exp(-2j * np.pi * self.cfg.h * v * np.cos(theta)) / self.cfg.M_v

    def xi(self, theta: float) -> np.ndarray:
        """Horizontal lag amplitudes ``M_h j^h J_m1(gamma) J_m2(gamma)``."""
        c = self.cmap.canonical
        g = float(self.ps.gamma(theta))
        j1 = bessel_j_orders(c[:, 0], g)
        j2 = bessel_j_orders(c[:, 1], g)
        h = self.cmap.h_lags
        return self.cfg.M_h * (1j ** np.mod(h, 4)) * j1 * j2

    def horizontal_steering(self, theta: float, phi) -> np.ndarray:
        """``a_dfh`` for one elevation; a 1-D ``phi`` gives one column per azimuth."""
        phi = np.asarray(phi, dtype=float)
        h = self.cmap.h_lags
        xi = self.xi(theta)
        if phi.ndim == 0:
            return xi * np.exp(-1j * h * phi)
        return xi[:, None] * np.exp(-1j * np.outer(h, phi))


def coarray_steering(theta: float, phi: float, model: CoarrayModel) -> tuple[np.ndarray, np.ndarray]:
    """``(a_dfv, a_dfh)`` of one device."""
    return model.vertical_steering(theta), model.horizontal_steering(theta, phi)


@dataclass(frozen=True)
class PowerModel:
    """Per-frame device powers.

    ``equal`` keeps every device at ``base`` times its nominal power in all
    frames. ``varying`` multiplies each device and frame by an independent
    ``10**u`` with ``u`` uniform on ``[-decades/2, decades/2]``.
    """

    mode: str = "equal"
    base: float = 1.0
    decades: float = 1.0

    def __post_init__(self):
        if self.mode not in ("equal", "varying"):
            raise ValueError(f"unknown power mode {self.mode!r}; use 'equal' or 'varying'")
        if not self.base > 0:
            raise ValueError("base power must be positive")
        if self.decades < 0:
            raise ValueError("decade range must be non-negative")

    def draw(self, nominal: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        p = self.base * np.asarray(nominal, dtype=float)
        if self.mode == "varying":
            p = p * 10.0 ** rng.uniform(-self.decades / 2, self.decades / 2, size=p.shape)
        return p


def resolve_steering(steering: str, ps: PhaseSpaceConfig) -> str:
    """``auto`` picks ``exact`` when the ring can form all ``2P+1`` ports, else ``approx``."""
    if steering == "auto":
        return "exact" if ps.transform_realizable else "approx"
    if steering not in ("exact", "approx"):
        raise ValueError(f"unknown steering {steering!r}; use 'exact', 'approx' or 'auto'")
    return steering


def rf_steering(sources: SourceSet, model: CoarrayModel, steering: str = "auto") -> np.ndarray:
    """``M_rf x K`` matrix of RF-chain responses ``a_sn``.

    Each chain reads one port, so its response is the product of the
    vertical factor of its row and the phase-mode factor of its column.
    """
    steering = resolve_steering(steering, model.ps)
    locs, _ = rf_chain_locations(model.design)
    rows = locs[:, 0] + model.design.N_vd - 1
    cols = locs[:, 1] + model.design.P
    if rows.min() < 0 or rows.max() >= model.ps.M_vr:
        raise ValueError("design rows fall outside the vertical port range")
    out = np.empty((len(locs), sources.K), dtype=complex)
    for k, (t, p) in enumerate(zip(sources.theta, sources.phi)):
        av = vertical_steering(t, model.cfg)
        ah = phase_space_steering(t, p, model.ps, mode=steering)
        out[:, k] = av[rows] * ah[cols]
    return out


def noise_variance(sources: SourceSet, model: CoarrayModel, snr_db: float,
                   power: PowerModel = PowerModel(), steering: str = "auto") -> float:
    """Per-port noise variance giving the requested SNR.

    SNR is the mean over devices and RF chains of the nominal received power
    ``sigma_k^2 |a_sn,i(k)|^2``, divided by the noise variance of one chain.
    """
    if snr_db is None or not np.isfinite(snr_db):
        raise ValueError(f"SNR must be a finite number of dB, got {snr_db}")
    A = rf_steering(sources, model, steering)
    p = power.base * sources.power
    signal = float(np.mean(np.abs(A) ** 2 * p[None, :]))
    return signal / 10.0 ** (snr_db / 10.0)


def _frame_rng(seed, frame: int) -> np.random.Generator:
    """Frame ``t`` draws from ``SeedSequence([*seed, t])``."""
    entropy = [int(s) for s in np.atleast_1d(seed)] + [int(frame)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _complex_normal(rng, shape, var=1.0):
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_snapshots(
    sources: SourceSet,
    model: CoarrayModel,
    snr_db: float | None,
    M_t: int,
    N_snap: int,
    seed=0,
    noise_mode: str = "port",
    power: PowerModel = PowerModel(),
    steering: str = "auto",
    noise_var: float | None = None,
    signal: bool = True,
    noise_seed=None,
) -> np.ndarray:
    """RF-chain snapshots, shape ``(M_t, M_rf, N_snap)``.

    Symbols are circular complex Gaussian with the frame's device powers. In
    ``port`` mode white noise is added at each chain; in ``antenna`` mode it is
    drawn at every element and passed through the phase shifters, with the
    element variance scaled so the per-port variance is the same.

    ``noise_var`` overrides the SNR-derived variance; ``signal=False`` drops
    the devices. Frame ``t`` draws powers and symbols from
    ``SeedSequence([*seed, t])``; noise comes from the same stream unless
    ``noise_seed`` gives it its own, ``SeedSequence([*noise_seed, t])``.
    """
    if N_snap < 1 or M_t < 1:
        raise ValueError("need at least one frame and one snapshot")
    if noise_mode not in ("port", "antenna"):
        raise ValueError(f"unknown noise mode {noise_mode!r}; use 'port' or 'antenna'")
    if noise_var is None:
        noise_var = noise_variance(sources, model, snr_db, power, steering)
    if noise_var < 0 or not np.isfinite(noise_var):
        raise ValueError(f"invalid noise variance {noise_var}")
    cap = (model.design.N_vdc - 1) * (model.design.N_hdc - 1)
    if sources.K > cap:
        warnings.warn(f"K={sources.K} exceeds the coarray capacity {cap}", stacklevel=2)

    A = rf_steering(sources, model, steering)
    M_rf = A.shape[0]
    locs, _ = rf_chain_locations(model.design)
    port_rows = locs[:, 0] + model.design.N_vd - 1
    port_cols = locs[:, 1] + model.design.P
    if noise_mode == "antenna":
        if not model.ps.transform_realizable:
            raise ValueError("antenna noise needs 2P+1 <= M_h")
        Bh = build_Bhps(model.ps.M_h, model.ps.P)

    out = np.empty((M_t, M_rf, N_snap), dtype=complex)
    for t in range(M_t):
        rng = _frame_rng(seed, t)
        noise_rng = rng if noise_seed is None else _frame_rng(noise_seed, t)
        p = power.draw(sources.power, rng)
        x = np.zeros((M_rf, N_snap), dtype=complex)
        if signal:
            s = _complex_normal(rng, (sources.K, N_snap)) * np.sqrt(p)[:, None]
            x += A @ s
        if noise_var > 0:
            if noise_mode == "port":
                x += _complex_normal(noise_rng, (M_rf, N_snap), noise_var)
            else:
                n_ant = _complex_normal(noise_rng, (model.ps.M_v, model.ps.M_h, N_snap),
                                        noise_var / model.ps.M_h)
                n_port = np.einsum("mp,vmn->vpn", Bh, n_ant)
                x += n_port[port_rows, port_cols, :]
        out[t] = x
    return out


def frame_autocorrelation(snapshots: np.ndarray) -> np.ndarray:
    """Sample autocorrelation ``(1/N) X X^H`` of one ``M_rf x N`` frame."""
    x = np.asarray(snapshots, dtype=complex)
    r = x @ x.conj().T / x.shape[1]
    return (r + r.conj().T) / 2


def expected_autocorrelation(
    sources: SourceSet,
    model: CoarrayModel,
    powers=None,
    noise_var: float = 0.0,
    steering: str = "approx",
) -> np.ndarray:
    """``A diag(p) A^H + noise_var I`` from the steering model."""
    A = rf_steering(sources, model, steering)
    p = sources.power if powers is None else np.asarray(powers, dtype=float)
    return (A * p[None, :]) @ A.conj().T + noise_var * np.eye(A.shape[0])


@dataclass(frozen=True)
class CoarrayFrame:
    y_df: np.ndarray
    sigma_n_hat: float


def estimate_noise(R: np.ndarray, n_sources: int | None = None) -> float:
    """Noise power as the mean of the ``M_rf - K`` smallest eigenvalues of ``R``.

    Without ``K`` the lower half of the spectrum is used.
    """
    w = np.linalg.eigvalsh(R)
    n = R.shape[0]
    keep = n - int(n_sources) if n_sources is not None else n // 2
    if keep < 1:
        raise ValueError(f"K={n_sources} leaves no noise eigenvalues among {n}")
    return float(max(np.mean(w[:keep]), 0.0))


def coarray_vectorize(
    R: np.ndarray,
    cmap: CoarrayMap,
    n_sources: int | None = None,
    subtract_noise: bool = True,
) -> CoarrayFrame:
    """One coarray sample ``y_df`` (vertical lag slow, horizontal lag fast)."""
    R = np.asarray(R, dtype=complex)
    M_rf = cmap.design.M_rf
    if R.shape != (M_rf, M_rf):
        raise ValueError(f"autocorrelation is {R.shape}, design has {M_rf} RF chains")
    y = cmap.weights * R[cmap.pairs[:, 0], cmap.pairs[:, 1]]
    sigma = estimate_noise(R, n_sources) if subtract_noise else 0.0
    if subtract_noise:
        y[cmap.zero_lag_row] -= sigma
    return CoarrayFrame(y, sigma)


@dataclass(frozen=True)
class MeasurementTensor:
    Y_df: ComplexTensor
    model: CoarrayModel
    sigma_n_hat: np.ndarray


def assemble_tensor(frames, model: CoarrayModel) -> MeasurementTensor:
    """Stack frames along mode 3; each ``y_df`` fills an ``N_vdc x N_hdc`` slice row-major."""
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to assemble")
    n_v, n_h = model.cmap.shape
    lengths = {f.y_df.size for f in frames}
    if lengths != {n_v * n_h}:
        raise ValueError(f"frame lengths {sorted(lengths)} do not match {n_v}x{n_h}")
    data = np.stack([f.y_df.reshape(n_v, n_h) for f in frames], axis=2)
    return MeasurementTensor(ComplexTensor(data), model, np.array([f.sigma_n_hat for f in frames]))


def measurement_tensor(
    sources: SourceSet,
    model: CoarrayModel,
    snr_db: float,
    M_t: int,
    N_snap: int = 1024,
    seed=0,
    noise_mode: str = "port",
    power: PowerModel = PowerModel(),
    steering: str = "auto",
    noise_seed=None,
) -> MeasurementTensor:
    """Simulate, correlate and vectorize ``M_t`` frames."""
    snaps = simulate_snapshots(sources, model, snr_db, M_t, N_snap, seed, noise_mode, power, steering,
                               noise_seed=noise_seed)
    frames = [coarray_vectorize(frame_autocorrelation(x), model.cmap, sources.K) for x in snaps]
    return assemble_tensor(frames, model)


def expected_measurement_tensor(
    sources: SourceSet,
    model: CoarrayModel,
    frame_powers,
    steering: str = "approx",
) -> MeasurementTensor:
    """Noiseless tensor from exact autocorrelations; ``frame_powers`` is ``M_t x K``."""
    frames = [
        coarray_vectorize(expected_autocorrelation(sources, model, p, 0.0, steering),
                          model.cmap, subtract_noise=False)
        for p in np.atleast_2d(frame_powers)
    ]
    return assemble_tensor(frames, model)
